#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "scalecheck/filter.hpp"
#include "scalecheck/measures.hpp"

namespace scalecheck {

using IVec = std::vector<long long>;
using IMat = std::vector<IVec>; // row-major, square

/// Thrown when an internal lattice invariant fails (these indicate bugs or
/// violated hypotheses, not bad user input).
struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

IMat mat_identity(int d);
IMat mat_mul(const IMat& a, const IMat& b);
IVec mat_vec(const IMat& a, const IVec& v);
IMat mat_pow(const IMat& a, int p);
IMat mat_transpose(const IMat& a);
long long mat_det(const IMat& a);
IMat mat_adjugate(const IMat& a); // adj(a) * a = det(a) * I

inline constexpr int kMaxDimension = 3;
inline constexpr long long kDigitStringBudget = 10'000'000;

/// Integer dilation matrix with cached spectral data.
struct LatticeMatrix {
    int dim = 0;
    IMat entries;
    long long determinant = 0;
    std::vector<double> eigen_moduli;
    bool expansive = false;
    bool similarity = false; // all eigenvalue moduli equal (within 1e-9)
    double modulus = 0.0;    // common modulus when similarity
};

/// Validates squareness/dimension, computes determinant exactly and the
/// eigenvalue moduli numerically.  Rejects singular matrices.
LatticeMatrix analyze_matrix(const IMat& entries);
LatticeMatrix parse_matrix_json(const std::string& text);

/// Smallest p with |lambda(A)|^p > 1 + sqrt(d).  Requires an expansive
/// similarity; throws std::invalid_argument otherwise.
int choose_power(const LatticeMatrix& A);

/// B = (A^T)^p with the coset-representative digit set Z^d n B((-1/2,1/2]^d),
/// enumerated and verified with exact integer arithmetic.
struct DigitSystem {
    LatticeMatrix base;    // A
    int power = 0;         // p
    LatticeMatrix b;       // B = (A^T)^p
    IMat b_adjugate;       // adj(B), cached for exact division by B
    std::vector<IVec> digits;
    double lambda_modulus = 0.0; // |lambda(B)| = |lambda(A)|^p
};

DigitSystem build_digit_system(const LatticeMatrix& A);

/// True iff B^{-1} v is integral (v in B(Z^d)).
bool divisible_by(const DigitSystem& sys, const IVec& v);

/// k = sum_j B^j r_{i_j}, digit indices least significant first.
struct LatticeExpansion {
    IVec k;
    std::vector<int> digit_indices;
};

LatticeExpansion expand(const DigitSystem& sys, IVec k, int iteration_cap = 1000);
IVec reconstruct(const DigitSystem& sys, const LatticeExpansion& e);

/// Points sum_{j=1..J} B^{-j} r_{i_j} over digit strings of length J.
struct TileSample {
    int dim = 0;
    int depth = 0;
    bool monte_carlo = false;
    std::vector<double> points; // flattened, stride = dim
    std::size_t count() const { return dim == 0 ? 0 : points.size() / dim; }
};

enum class TileMode { Exhaustive, MonteCarlo };

TileSample sample_tile(const DigitSystem& sys, int depth, TileMode mode,
                       long long mc_count = 100000, std::uint64_t seed = 1);

/// Radius of the ball guaranteed to contain the tile:
/// (sqrt(d)/2) |lambda| / (|lambda| - 1).
double tile_ball_radius(const DigitSystem& sys);

struct MeasureEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double tolerance = 0.0; // proximity radius used by the estimator
    std::string warning;
};

/// Monte Carlo Lebesgue-measure estimate: uniform trial points in the sample
/// bounding box, counted when within a proximity radius of some sample point
/// (grid-bucketed lookup).  tol_override = 0 picks the radius automatically.
MeasureEstimate tile_measure_estimate(const DigitSystem& sys, const TileSample& sample,
                                      long long trials, std::uint64_t seed = 2,
                                      double tol_override = 0.0);

/// Estimate of |T n (T + shift)| by the same proximity test against both the
/// sample and its translate.
MeasureEstimate tile_overlap_estimate(const DigitSystem& sys, const TileSample& sample,
                                      const IVec& shift, long long trials,
                                      std::uint64_t seed = 3, double tol_override = 0.0);

void write_tile_csv(std::ostream& out, const TileSample& sample);

/// One-periodic filter on [0,1)^d (callers may pass arguments outside the
/// cube; implementations must reduce mod Z^d).
struct LatticeFilter {
    int dim = 0;
    std::function<double(const std::vector<double>&)> eval;
    std::string name;
};

/// Separable product of a scalar filter over the d coordinates.
LatticeFilter separable_filter(const PeriodicFilter& f, int dim);

/// M~(xi) = prod_{j=0..p-1} M((A^T)^j xi).
LatticeFilter m_tilde(const LatticeFilter& M, const LatticeMatrix& A, int p);

/// Coset-sum identities: sum_i M(xi + (A^T)^{-1} r_i) = 1 over digits of
/// Z^d/A^T(Z^d), and sum_i M~(xi + B^{-1} r_i) = 1 over the system's digits,
/// both on a per-axis grid of grid_n points.
ValidationOutcome multidim_qmf_check(const LatticeFilter& M, const LatticeMatrix& A,
                                     const DigitSystem& sys, int grid_n);

/// Any complete set of coset representatives of Z^d / m(Z^d).
std::vector<IVec> coset_representatives(const IMat& m);

/// Masses P_xi^N(k) = prod_{j=1..N} M~(B^{-j}(xi + k)) over
/// Z_N = {k : n(k) <= N} (all digit strings of length N).
struct MdMassTable {
    int level = 0;
    std::vector<IVec> ks;
    std::vector<double> masses;
    double total() const;
};

MdMassTable multidim_p_table(const LatticeFilter& m_tilde, const DigitSystem& sys,
                             const std::vector<double>& xi, int level);

/// Smallest N(eps) with P_xi^{N(eps)+j}(Z_{N(eps)}) >= 1 - eps for all tested
/// j up to n_max.
struct MdTightness {
    int n_eps = -1;
    std::vector<double> retained; // retained mass on Z_{n_eps} per level tested
    std::string verdict;          // "tight", "not_tight", "inconclusive"
};

MdTightness multidim_tightness(const LatticeFilter& m_tilde, const DigitSystem& sys,
                               const std::vector<double>& xi, double eps, int n_max);

} // namespace scalecheck
