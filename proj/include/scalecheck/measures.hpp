#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "scalecheck/filter.hpp"

namespace scalecheck {

/// Thrown when a requested computation exceeds a configured size cap.
struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Accumulation { Compensated, LogSpace };

inline constexpr int kMaxTableLevel = 24;

/// Q_xi^N(k) = prod_{j=1..N} M((xi + k)/2^j), for 0 <= k < 2^N.
/// xi is reduced mod 1 at entry.  Exact 0 whenever a factor vanishes.
double q_mass(const PeriodicFilter& filter, double xi, int level, long long k,
              Accumulation acc = Accumulation::Compensated);

/// Q~_eta^N(l) = prod_{j=1..N} M(-(eta + l)/2^j).  eta is taken literally
/// (the assembled measure needs eta = 1 - xi, which may equal 1).
double reflected_q_mass(const PeriodicFilter& filter, double eta, int level, long long l,
                        Accumulation acc = Accumulation::Compensated);

/// The assembled probability P_xi^N on k in [-2^N, 2^N): N+1 filter factors
/// per point, positive side from M, negative side from the reflected filter
/// at parameter 1 - xi.
class ProductMeasureTable {
public:
    ProductMeasureTable(PeriodicFilter filter, double xi, int level,
                        Accumulation acc = Accumulation::Compensated,
                        bool validate_filter = true);

    int level() const { return level_; }
    double xi() const { return xi_; }
    const PeriodicFilter& filter() const { return filter_; }
    Accumulation accumulation() const { return acc_; }

    /// P_xi^N(k); throws std::out_of_range outside [-2^N, 2^N).
    double mass(long long k) const;
    double total() const;

    /// Sum of masses over k with msb_index(k) >= n.
    double tail_mass(int n) const;

    /// Dense storage, index k + 2^level.
    const std::vector<double>& masses() const { return masses_; }

    /// Rows "k,mass".
    void write_csv(std::ostream& out) const;

private:
    PeriodicFilter filter_;
    double xi_;
    int level_;
    Accumulation acc_;
    std::vector<double> masses_;
};

ProductMeasureTable p_table(const PeriodicFilter& filter, double xi, int level,
                            Accumulation acc = Accumulation::Compensated);

/// Largest violation of the refinement identity between a level-N table and
/// the level-(N+1) table at the same xi:
///   P^N(k) = P^{N+1}(k) + P^{N+1}(k -+ 2^{N+1})   (partner sign by side of k).
double consistency_residual(const ProductMeasureTable& coarse, const ProductMeasureTable& fine);

/// Truncated infinite product P_xi(k) = prod_{j>=1} M((xi + k)/2^j).
struct LimitMassEstimate {
    long long k = 0;
    double value = 0.0;
    int truncation_level = 0;
    bool converged = false;
};

LimitMassEstimate limit_mass(const PeriodicFilter& filter, double xi, long long k,
                             int j_max, double tol = 1e-12);

void write_limit_masses_json(std::ostream& out, const std::vector<LimitMassEstimate>& estimates);

} // namespace scalecheck
