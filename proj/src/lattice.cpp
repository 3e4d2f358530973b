#include "scalecheck/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <ostream>
#include <random>
#include <unordered_map>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <json.hpp>

namespace scalecheck {

namespace {

constexpr double kSimilarityTol = 1e-9;

using DMat = std::vector<std::vector<double>>;
using DVec = std::vector<double>;

DMat to_double(const IMat& m) {
    DMat out(m.size(), std::vector<double>(m.size()));
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j)
            out[i][j] = static_cast<double>(m[i][j]);
    return out;
}

DVec mat_apply(const DMat& m, const DVec& v) {
    DVec out(v.size(), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j)
            out[i] += m[i][j] * v[j];
    return out;
}

DMat inverse_of(const IMat& m) {
    const long long d = mat_det(m);
    const IMat adj = mat_adjugate(m);
    DMat out = to_double(adj);
    for (auto& row : out)
        for (auto& x : row) x /= static_cast<double>(d);
    return out;
}

double sq_dist(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

// Grid-bucketed nearest-sample lookup with cell size tol.
class ProximityIndex {
public:
    ProximityIndex(const std::vector<double>& pts, int dim, double tol, DVec offset = {})
        : pts_(pts), dim_(dim), tol_(tol), offset_(std::move(offset)) {
        if (offset_.empty()) offset_.assign(dim, 0.0);
        shift_ = 63 / dim_;
        const std::size_t n = pts_.size() / dim_;
        for (std::size_t i = 0; i < n; ++i)
            cells_[cell_key(&pts_[i * dim_], true)].push_back(static_cast<std::uint32_t>(i));
    }

    bool near(const double* x) const {
        long long c[3] = {0, 0, 0};
        for (int i = 0; i < dim_; ++i)
            c[i] = static_cast<long long>(std::floor(x[i] / tol_));
        const double tol_sq = tol_ * tol_;
        long long nb[3];
        for (long long dx = -1; dx <= 1; ++dx) {
            nb[0] = c[0] + dx;
            for (long long dy = -1; dy <= (dim_ > 1 ? 1 : -1); ++dy) {
                nb[1] = c[1] + dy;
                for (long long dz = -1; dz <= (dim_ > 2 ? 1 : -1); ++dz) {
                    nb[2] = c[2] + dz;
                    const auto it = cells_.find(pack(nb));
                    if (it == cells_.end()) continue;
                    for (std::uint32_t idx : it->second) {
                        double shifted[3];
                        const double* p = &pts_[idx * dim_];
                        for (int i = 0; i < dim_; ++i) shifted[i] = p[i] + offset_[i];
                        if (sq_dist(x, shifted, dim_) <= tol_sq) return true;
                    }
                }
            }
        }
        return false;
    }

private:
    std::uint64_t cell_key(const double* p, bool apply_offset) const {
        long long c[3] = {0, 0, 0};
        for (int i = 0; i < dim_; ++i)
            c[i] = static_cast<long long>(
                std::floor((p[i] + (apply_offset ? offset_[i] : 0.0)) / tol_));
        return pack(c);
    }
    std::uint64_t pack(const long long* c) const {
        std::uint64_t key = 0;
        const std::uint64_t mask = (shift_ >= 63) ? ~0ULL : ((1ULL << shift_) - 1);
        for (int i = 0; i < dim_; ++i)
            key = (key << shift_) | (static_cast<std::uint64_t>(c[i]) & mask);
        return key;
    }

    const std::vector<double>& pts_;
    int dim_;
    double tol_;
    DVec offset_;
    int shift_;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

struct Box {
    DVec lo, hi;
    double volume() const {
        double v = 1.0;
        for (std::size_t i = 0; i < lo.size(); ++i) v *= std::max(0.0, hi[i] - lo[i]);
        return v;
    }
};

Box bounding_box(const std::vector<double>& pts, int dim, double pad, const DVec& offset) {
    Box box;
    box.lo.assign(dim, 0.0);
    box.hi.assign(dim, 0.0);
    const std::size_t n = pts.size() / dim;
    for (std::size_t i = 0; i < n; ++i)
        for (int j = 0; j < dim; ++j) {
            const double v = pts[i * dim + j] + offset[j];
            if (i == 0 || v < box.lo[j]) box.lo[j] = v;
            if (i == 0 || v > box.hi[j]) box.hi[j] = v;
        }
    for (int j = 0; j < dim; ++j) {
        box.lo[j] -= pad;
        box.hi[j] += pad;
    }
    return box;
}

double pick_tolerance(const DigitSystem& sys, const TileSample& sample, double tol_override) {
    if (tol_override > 0.0) return tol_override;
    const double cover = tile_ball_radius(sys) *
                         std::pow(sys.lambda_modulus, -sample.depth) * 1.001;
    if (!sample.monte_carlo) return cover;
    // Monte Carlo samples do not form a covering net; scale the radius to the
    // expected nearest-neighbour distance instead.
    const double diam = 2.0 * tile_ball_radius(sys);
    const double vol = std::pow(diam, sample.dim);
    const double nn = std::pow(vol / std::max<std::size_t>(1, sample.count()),
                               1.0 / sample.dim);
    return std::max(cover, 0.8 * nn);
}

} // namespace

IMat mat_identity(int d) {
    IMat m(d, IVec(d, 0));
    for (int i = 0; i < d; ++i) m[i][i] = 1;
    return m;
}

IMat mat_mul(const IMat& a, const IMat& b) {
    const std::size_t d = a.size();
    IMat out(d, IVec(d, 0));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t j = 0; j < d; ++j)
                out[i][j] += a[i][k] * b[k][j];
    return out;
}

IVec mat_vec(const IMat& a, const IVec& v) {
    const std::size_t d = a.size();
    IVec out(d, 0);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            out[i] += a[i][j] * v[j];
    return out;
}

IMat mat_pow(const IMat& a, int p) {
    IMat out = mat_identity(static_cast<int>(a.size()));
    for (int i = 0; i < p; ++i) out = mat_mul(out, a);
    return out;
}

IMat mat_transpose(const IMat& a) {
    const std::size_t d = a.size();
    IMat out(d, IVec(d, 0));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) out[j][i] = a[i][j];
    return out;
}

long long mat_det(const IMat& a) {
    const std::size_t d = a.size();
    if (d == 1) return a[0][0];
    if (d == 2) return a[0][0] * a[1][1] - a[0][1] * a[1][0];
    long long det = 0;
    for (std::size_t col = 0; col < d; ++col) {
        IMat minor(d - 1, IVec(d - 1, 0));
        for (std::size_t i = 1; i < d; ++i) {
            std::size_t mj = 0;
            for (std::size_t j = 0; j < d; ++j) {
                if (j == col) continue;
                minor[i - 1][mj++] = a[i][j];
            }
        }
        const long long cof = mat_det(minor);
        det += ((col % 2 == 0) ? 1 : -1) * a[0][col] * cof;
    }
    return det;
}

IMat mat_adjugate(const IMat& a) {
    const std::size_t d = a.size();
    if (d == 1) return {{1}};
    IMat adj(d, IVec(d, 0));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            IMat minor(d - 1, IVec(d - 1, 0));
            std::size_t mi = 0;
            for (std::size_t r = 0; r < d; ++r) {
                if (r == i) continue;
                std::size_t mj = 0;
                for (std::size_t c = 0; c < d; ++c) {
                    if (c == j) continue;
                    minor[mi][mj++] = a[r][c];
                }
                ++mi;
            }
            const long long cof = (((i + j) % 2 == 0) ? 1 : -1) * mat_det(minor);
            adj[j][i] = cof; // transpose of the cofactor matrix
        }
    return adj;
}

LatticeMatrix analyze_matrix(const IMat& entries) {
    LatticeMatrix m;
    m.dim = static_cast<int>(entries.size());
    if (m.dim < 1 || m.dim > kMaxDimension)
        throw std::invalid_argument("analyze_matrix: dimension must be 1.." +
                                    std::to_string(kMaxDimension));
    for (const auto& row : entries)
        if (static_cast<int>(row.size()) != m.dim)
            throw std::invalid_argument("analyze_matrix: matrix must be square");
    m.entries = entries;
    m.determinant = mat_det(entries);
    if (m.determinant == 0)
        throw std::invalid_argument("analyze_matrix: singular matrix");

    Eigen::MatrixXd em(m.dim, m.dim);
    for (int i = 0; i < m.dim; ++i)
        for (int j = 0; j < m.dim; ++j) em(i, j) = static_cast<double>(entries[i][j]);
    Eigen::EigenSolver<Eigen::MatrixXd> solver(em, false);
    for (int i = 0; i < m.dim; ++i)
        m.eigen_moduli.push_back(std::abs(solver.eigenvalues()[i]));
    std::sort(m.eigen_moduli.begin(), m.eigen_moduli.end());
    m.expansive = m.eigen_moduli.front() > 1.0;
    m.similarity = (m.eigen_moduli.back() - m.eigen_moduli.front()) <=
                   kSimilarityTol * m.eigen_moduli.back();
    m.modulus = m.similarity ? m.eigen_moduli.back() : 0.0;
    return m;
}

LatticeMatrix parse_matrix_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    IMat entries;
    for (const auto& row : j) entries.push_back(row.get<IVec>());
    return analyze_matrix(entries);
}

int choose_power(const LatticeMatrix& A) {
    if (!A.similarity || !A.expansive)
        throw std::invalid_argument("choose_power: requires a strictly expansive similarity");
    const double bound = 1.0 + std::sqrt(static_cast<double>(A.dim));
    int p = 1;
    double pow = A.modulus;
    while (pow <= bound) {
        pow *= A.modulus;
        ++p;
    }
    return p;
}

bool divisible_by(const DigitSystem& sys, const IVec& v) {
    const long long d = sys.b.determinant;
    const IVec y = mat_vec(sys.b_adjugate, v);
    for (long long yi : y)
        if (yi % d != 0) return false;
    return true;
}

DigitSystem build_digit_system(const LatticeMatrix& A) {
    DigitSystem sys;
    sys.base = A;
    sys.power = choose_power(A);
    sys.b = analyze_matrix(mat_pow(mat_transpose(A.entries), sys.power));
    sys.b_adjugate = mat_adjugate(sys.b.entries);
    sys.lambda_modulus = sys.b.modulus;

    const int d = A.dim;
    const long long det = sys.b.determinant;
    const long long abs_det = std::llabs(det);
    const IMat& adj = sys.b_adjugate;

    // x in B((-1/2,1/2]^d)  <=>  each coordinate of adj(B) x / det lies in
    // (-1/2, 1/2], checked as an exact integer inequality.
    auto in_cell = [&](const IVec& x) {
        const IVec y = mat_vec(adj, x);
        for (long long yi : y) {
            const long long v = (det > 0) ? yi : -yi;
            if (!(-abs_det < 2 * v && 2 * v <= abs_det)) return false;
        }
        return true;
    };

    // Candidates live inside the image of the half-open unit cell.
    IVec bound(d, 0);
    for (int i = 0; i < d; ++i) {
        long long s = 0;
        for (int j = 0; j < d; ++j) s += std::llabs(sys.b.entries[i][j]);
        bound[i] = s / 2 + 1;
    }
    IVec x(d, 0);
    std::vector<IVec> digits;
    std::function<void(int)> scan = [&](int axis) {
        if (axis == d) {
            if (in_cell(x)) digits.push_back(x);
            return;
        }
        for (long long v = -bound[axis]; v <= bound[axis]; ++v) {
            x[axis] = v;
            scan(axis + 1);
        }
    };
    scan(0);
    std::sort(digits.begin(), digits.end());
    sys.digits = std::move(digits);

    if (static_cast<long long>(sys.digits.size()) != abs_det)
        throw StructuralError("digit enumeration yielded " +
                              std::to_string(sys.digits.size()) + " digits, expected " +
                              std::to_string(abs_det));
    for (std::size_t i = 0; i < sys.digits.size(); ++i)
        for (std::size_t j = i + 1; j < sys.digits.size(); ++j) {
            IVec diff(d);
            for (int c = 0; c < d; ++c) diff[c] = sys.digits[i][c] - sys.digits[j][c];
            if (divisible_by(sys, diff))
                throw StructuralError("congruent digit pair found");
        }
    const double bound_needed = 1.0 + std::sqrt(static_cast<double>(d));
    if (!(sys.lambda_modulus > bound_needed))
        throw StructuralError("digit system violates |lambda| > 1 + sqrt(d)");
    return sys;
}

LatticeExpansion expand(const DigitSystem& sys, IVec k, int iteration_cap) {
    const int d = sys.base.dim;
    if (static_cast<int>(k.size()) != d)
        throw std::invalid_argument("expand: dimension mismatch");
    LatticeExpansion e;
    e.k = k;
    const long long det = sys.b.determinant;
    int iters = 0;
    while (std::any_of(k.begin(), k.end(), [](long long v) { return v != 0; })) {
        if (++iters > iteration_cap)
            throw StructuralError("expand: iteration cap reached (expansion hypothesis violated)");
        int found = -1;
        IVec next(d);
        for (std::size_t i = 0; i < sys.digits.size(); ++i) {
            IVec diff(d);
            for (int c = 0; c < d; ++c) diff[c] = k[c] - sys.digits[i][c];
            const IVec y = mat_vec(sys.b_adjugate, diff);
            bool ok = true;
            for (int c = 0; c < d; ++c)
                if (y[c] % det != 0) { ok = false; break; }
            if (ok) {
                found = static_cast<int>(i);
                for (int c = 0; c < d; ++c) next[c] = y[c] / det;
                break;
            }
        }
        if (found < 0) throw StructuralError("expand: no matching digit (incomplete coset set)");
        e.digit_indices.push_back(found);
        k = next;
    }
    return e;
}

IVec reconstruct(const DigitSystem& sys, const LatticeExpansion& e) {
    const int d = sys.base.dim;
    IVec k(d, 0);
    // Horner from the most significant digit.
    for (std::size_t j = e.digit_indices.size(); j-- > 0;) {
        k = mat_vec(sys.b.entries, k);
        const IVec& r = sys.digits[static_cast<std::size_t>(e.digit_indices[j])];
        for (int c = 0; c < d; ++c) k[c] += r[c];
    }
    return k;
}

double tile_ball_radius(const DigitSystem& sys) {
    const double lam = sys.lambda_modulus;
    return (std::sqrt(static_cast<double>(sys.base.dim)) / 2.0) * lam / (lam - 1.0);
}

TileSample sample_tile(const DigitSystem& sys, int depth, TileMode mode,
                       long long mc_count, std::uint64_t seed) {
    if (depth < 1) throw std::invalid_argument("sample_tile: depth must be >= 1");
    const int d = sys.base.dim;
    const auto q = static_cast<long long>(sys.digits.size());
    TileSample sample;
    sample.dim = d;
    sample.depth = depth;

    const DMat binv = inverse_of(sys.b.entries);
    DMat digits_d(sys.digits.size(), DVec(d));
    for (std::size_t i = 0; i < sys.digits.size(); ++i)
        for (int c = 0; c < d; ++c) digits_d[i][c] = static_cast<double>(sys.digits[i][c]);

    auto emit = [&](const std::vector<int>& string) {
        // point = B^{-1}(r_{i_1} + B^{-1}(r_{i_2} + ... + B^{-1} r_{i_J}))
        DVec v(d, 0.0);
        for (int j = depth - 1; j >= 0; --j) {
            for (int c = 0; c < d; ++c) v[c] += digits_d[string[j]][c];
            v = mat_apply(binv, v);
        }
        sample.points.insert(sample.points.end(), v.begin(), v.end());
    };

    if (mode == TileMode::Exhaustive) {
        double total = std::pow(static_cast<double>(q), depth);
        if (total > static_cast<double>(kDigitStringBudget))
            throw BudgetError("sample_tile: " + std::to_string(total) +
                              " digit strings exceed the exhaustive budget; use monte_carlo");
        std::vector<int> string(depth, 0);
        const auto count = static_cast<long long>(total);
        sample.points.reserve(static_cast<std::size_t>(count) * d);
        for (long long n = 0; n < count; ++n) {
            emit(string);
            for (int j = 0; j < depth; ++j) {
                if (++string[j] < q) break;
                string[j] = 0;
            }
        }
    } else {
        sample.monte_carlo = true;
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> pick(0, static_cast<int>(q) - 1);
        std::vector<int> string(depth);
        sample.points.reserve(static_cast<std::size_t>(mc_count) * d);
        for (long long n = 0; n < mc_count; ++n) {
            for (int j = 0; j < depth; ++j) string[j] = pick(rng);
            emit(string);
        }
    }
    return sample;
}

MeasureEstimate tile_measure_estimate(const DigitSystem& sys, const TileSample& sample,
                                      long long trials, std::uint64_t seed,
                                      double tol_override) {
    MeasureEstimate est;
    if (sample.count() == 0) {
        est.warning = "empty sample; estimate is vacuously 0";
        return est;
    }
    const int d = sample.dim;
    const double tol = pick_tolerance(sys, sample, tol_override);
    est.tolerance = tol;
    const DVec zero(d, 0.0);
    const Box box = bounding_box(sample.points, d, tol, zero);
    const ProximityIndex index(sample.points, d, tol);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    long long hits = 0;
    double x[3];
    for (long long t = 0; t < trials; ++t) {
        for (int j = 0; j < d; ++j)
            x[j] = box.lo[j] + (box.hi[j] - box.lo[j]) * unit(rng);
        if (index.near(x)) ++hits;
    }
    const double p = static_cast<double>(hits) / trials;
    est.value = p * box.volume();
    est.std_error = box.volume() * std::sqrt(p * (1.0 - p) / trials);
    return est;
}

MeasureEstimate tile_overlap_estimate(const DigitSystem& sys, const TileSample& sample,
                                      const IVec& shift, long long trials,
                                      std::uint64_t seed, double tol_override) {
    MeasureEstimate est;
    if (sample.count() == 0) {
        est.warning = "empty sample; estimate is vacuously 0";
        return est;
    }
    const int d = sample.dim;
    if (static_cast<int>(shift.size()) != d)
        throw std::invalid_argument("tile_overlap_estimate: shift dimension mismatch");
    const double tol = pick_tolerance(sys, sample, tol_override);
    est.tolerance = tol;
    DVec offset(d);
    for (int i = 0; i < d; ++i) offset[i] = static_cast<double>(shift[i]);

    const DVec zero(d, 0.0);
    const Box box_a = bounding_box(sample.points, d, tol, zero);
    const Box box_b = bounding_box(sample.points, d, tol, offset);
    Box box;
    box.lo.resize(d);
    box.hi.resize(d);
    for (int i = 0; i < d; ++i) {
        box.lo[i] = std::max(box_a.lo[i], box_b.lo[i]);
        box.hi[i] = std::min(box_a.hi[i], box_b.hi[i]);
        if (box.hi[i] <= box.lo[i]) return est; // disjoint boxes: overlap 0
    }
    const ProximityIndex index_a(sample.points, d, tol);
    const ProximityIndex index_b(sample.points, d, tol, offset);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    long long hits = 0;
    double x[3];
    for (long long t = 0; t < trials; ++t) {
        for (int j = 0; j < d; ++j)
            x[j] = box.lo[j] + (box.hi[j] - box.lo[j]) * unit(rng);
        if (index_a.near(x) && index_b.near(x)) ++hits;
    }
    const double p = static_cast<double>(hits) / trials;
    est.value = p * box.volume();
    est.std_error = box.volume() * std::sqrt(p * (1.0 - p) / trials);
    return est;
}

void write_tile_csv(std::ostream& out, const TileSample& sample) {
    for (int j = 0; j < sample.dim; ++j) out << (j ? ",x" : "x") << j;
    out << '\n';
    for (std::size_t i = 0; i < sample.count(); ++i) {
        for (int j = 0; j < sample.dim; ++j)
            out << (j ? "," : "") << sample.points[i * sample.dim + j];
        out << '\n';
    }
}

LatticeFilter separable_filter(const PeriodicFilter& f, int dim) {
    LatticeFilter lf;
    lf.dim = dim;
    lf.name = "separable-" + f.name();
    lf.eval = [f, dim](const std::vector<double>& xi) {
        double prod = 1.0;
        for (int i = 0; i < dim; ++i) prod *= f.evaluate(xi[i]);
        return prod;
    };
    return lf;
}

LatticeFilter m_tilde(const LatticeFilter& M, const LatticeMatrix& A, int p) {
    std::vector<DMat> powers;
    for (int j = 0; j < p; ++j)
        powers.push_back(to_double(mat_pow(mat_transpose(A.entries), j)));
    LatticeFilter out;
    out.dim = M.dim;
    out.name = M.name + "-tilde";
    out.eval = [M, powers](const std::vector<double>& xi) {
        double prod = 1.0;
        for (const auto& mat : powers) {
            prod *= M.eval(mat_apply(mat, xi));
            if (prod == 0.0) break;
        }
        return prod;
    };
    return out;
}

std::vector<IVec> coset_representatives(const IMat& m) {
    const int d = static_cast<int>(m.size());
    const long long det = mat_det(m);
    const long long q = std::llabs(det);
    const IMat adj = mat_adjugate(m);
    std::map<IVec, IVec> by_coset; // canonical key -> representative
    for (long long radius = 1; static_cast<long long>(by_coset.size()) < q; ++radius) {
        if (radius > 64) throw StructuralError("coset enumeration did not terminate");
        IVec x(d, 0);
        std::function<void(int)> scan = [&](int axis) {
            if (static_cast<long long>(by_coset.size()) == q) return;
            if (axis == d) {
                IVec key = mat_vec(adj, x);
                for (auto& v : key) v = ((v % q) + q) % q;
                by_coset.emplace(key, x);
                return;
            }
            for (long long v = -radius; v <= radius; ++v) {
                x[axis] = v;
                scan(axis + 1);
            }
        };
        scan(0);
    }
    std::vector<IVec> reps;
    for (auto& [key, rep] : by_coset) reps.push_back(rep);
    return reps;
}

ValidationOutcome multidim_qmf_check(const LatticeFilter& M, const LatticeMatrix& A,
                                     const DigitSystem& sys, int grid_n) {
    const int d = M.dim;
    if (d != A.dim) throw std::invalid_argument("multidim_qmf_check: dimension mismatch");
    ValidationOutcome out;
    out.pass = true;

    const double at_zero = M.eval(std::vector<double>(d, 0.0));
    if (std::abs(at_zero - 1.0) > 1e-12) {
        out.pass = false;
        out.worst_residual = std::abs(at_zero - 1.0);
        out.message = "M(0) != 1";
        return out;
    }

    // Level-A identity: sum over digits of Z^d / A^T(Z^d).
    const IMat at = mat_transpose(A.entries);
    const auto reps_a = coset_representatives(at);
    const DMat at_inv = inverse_of(at);
    std::vector<DVec> shifts_a;
    for (const auto& r : reps_a) {
        DVec rd(d);
        for (int i = 0; i < d; ++i) rd[i] = static_cast<double>(r[i]);
        shifts_a.push_back(mat_apply(at_inv, rd));
    }
    // Level-B identity: sum of M~ over the system's digits.
    const LatticeFilter mt = m_tilde(M, A, sys.power);
    const DMat b_inv = inverse_of(sys.b.entries);
    std::vector<DVec> shifts_b;
    for (const auto& r : sys.digits) {
        DVec rd(d);
        for (int i = 0; i < d; ++i) rd[i] = static_cast<double>(r[i]);
        shifts_b.push_back(mat_apply(b_inv, rd));
    }

    std::vector<int> idx(d, 0);
    std::vector<double> xi(d), arg(d);
    bool done = false;
    while (!done) {
        for (int i = 0; i < d; ++i) xi[i] = static_cast<double>(idx[i]) / grid_n;
        double sum_a = 0.0;
        for (const auto& s : shifts_a) {
            for (int i = 0; i < d; ++i) arg[i] = xi[i] + s[i];
            sum_a += M.eval(arg);
        }
        double sum_b = 0.0;
        for (const auto& s : shifts_b) {
            for (int i = 0; i < d; ++i) arg[i] = xi[i] + s[i];
            sum_b += mt.eval(arg);
        }
        const double r = std::max(std::abs(sum_a - 1.0), std::abs(sum_b - 1.0));
        if (r > out.worst_residual) {
            out.worst_residual = r;
            out.worst_xi = xi[0];
        }
        done = true;
        for (int i = 0; i < d; ++i) {
            if (++idx[i] < grid_n) { done = false; break; }
            idx[i] = 0;
        }
    }
    if (out.worst_residual > 1e-9) {
        out.pass = false;
        out.message = "coset-sum identity violated";
    }
    return out;
}

namespace {

// All k = sum_{j<N} B^j r_{i_j} over digit strings of length N, exact.
std::vector<IVec> enumerate_zn(const DigitSystem& sys, int level) {
    const int d = sys.base.dim;
    const auto q = static_cast<long long>(sys.digits.size());
    double total = std::pow(static_cast<double>(q), level);
    if (total > static_cast<double>(kDigitStringBudget))
        throw BudgetError("Z_N enumeration exceeds the digit-string budget");
    std::vector<IMat> b_pow;
    for (int j = 0; j < level; ++j) b_pow.push_back(mat_pow(sys.b.entries, j));
    std::vector<IVec> ks;
    ks.reserve(static_cast<std::size_t>(total));
    std::vector<int> string(level, 0);
    const auto count = static_cast<long long>(total);
    for (long long n = 0; n < count; ++n) {
        IVec k(d, 0);
        for (int j = 0; j < level; ++j) {
            const IVec term = mat_vec(b_pow[j], sys.digits[string[j]]);
            for (int c = 0; c < d; ++c) k[c] += term[c];
        }
        ks.push_back(std::move(k));
        for (int j = 0; j < level; ++j) {
            if (++string[j] < q) break;
            string[j] = 0;
        }
    }
    return ks;
}

} // namespace

double MdMassTable::total() const {
    double s = 0.0;
    for (double m : masses) s += m;
    return s;
}

MdMassTable multidim_p_table(const LatticeFilter& m_tilde, const DigitSystem& sys,
                             const std::vector<double>& xi, int level) {
    if (level < 1) throw std::invalid_argument("multidim_p_table: level must be >= 1");
    const int d = sys.base.dim;
    if (static_cast<int>(xi.size()) != d)
        throw std::invalid_argument("multidim_p_table: xi dimension mismatch");
    MdMassTable table;
    table.level = level;
    table.ks = enumerate_zn(sys, level);
    const DMat binv = inverse_of(sys.b.entries);
    table.masses.reserve(table.ks.size());
    std::vector<double> v(d);
    for (const auto& k : table.ks) {
        for (int c = 0; c < d; ++c) v[c] = xi[c] + static_cast<double>(k[c]);
        double prod = 1.0;
        std::vector<double> w = v;
        for (int j = 1; j <= level && prod != 0.0; ++j) {
            w = mat_apply(binv, w);
            prod *= m_tilde.eval(w);
        }
        table.masses.push_back(prod);
    }
    return table;
}

MdTightness multidim_tightness(const LatticeFilter& m_tilde, const DigitSystem& sys,
                               const std::vector<double>& xi, double eps, int n_max) {
    const int d = sys.base.dim;
    if (static_cast<int>(xi.size()) != d)
        throw std::invalid_argument("multidim_tightness: xi dimension mismatch");
    const DMat binv = inverse_of(sys.b.entries);
    MdTightness result;
    result.verdict = "inconclusive";
    double last_best = 0.0;
    for (int level = 1; level <= n_max; ++level) {
        const auto ks = enumerate_zn(sys, level);
        // Prefix products give P^{level+j}(Z_level) for every deeper level.
        std::vector<double> retained(static_cast<std::size_t>(n_max - level + 1), 0.0);
        std::vector<double> v(d);
        for (const auto& k : ks) {
            for (int c = 0; c < d; ++c) v[c] = xi[c] + static_cast<double>(k[c]);
            double prod = 1.0;
            std::vector<double> w = v;
            for (int j = 1; j <= n_max; ++j) {
                if (prod != 0.0) {
                    w = mat_apply(binv, w);
                    prod *= m_tilde.eval(w);
                }
                if (j >= level) retained[static_cast<std::size_t>(j - level)] += prod;
            }
        }
        const double worst = *std::min_element(retained.begin(), retained.end());
        last_best = std::max(last_best, worst);
        if (worst >= 1.0 - eps) {
            result.n_eps = level;
            result.retained = retained;
            result.verdict = "tight";
            return result;
        }
        if (level == n_max) result.retained = retained;
    }
    if (last_best < (1.0 - eps) - 0.25) result.verdict = "not_tight";
    return result;
}

} // namespace scalecheck
