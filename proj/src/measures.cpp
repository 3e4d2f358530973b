#include "scalecheck/measures.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include <json.hpp>

#include "scalecheck/dyadic.hpp"

namespace scalecheck {

namespace {

// Running product with a first-order correction term; keeps ~1e-15 relative
// error over thousands of factors.
class CompensatedProduct {
public:
    void multiply(double f) {
        const double p = hi_ * f;
        if (p != 0.0) {
            const double e = std::fma(hi_, f, -p);
            rel_err_ += e / p;
        }
        hi_ = p;
    }
    double value() const { return hi_ * (1.0 + rel_err_); }

private:
    double hi_ = 1.0;
    double rel_err_ = 0.0;
};

// Factors M(start / 2^j), j = 1..level, where start = xi + k (or its
// reflection).  Any exact-zero factor short-circuits to exact 0.
double product_chain(const PeriodicFilter& filter, double start, int level, bool reflect_arg,
                     Accumulation acc) {
    double t = start;
    if (acc == Accumulation::LogSpace) {
        long double log_sum = 0.0L;
        for (int j = 1; j <= level; ++j) {
            t *= 0.5;
            const double f = filter.evaluate(reflect_arg ? -t : t);
            if (f == 0.0) return 0.0;
            log_sum += std::log(static_cast<long double>(f));
        }
        return static_cast<double>(std::exp(log_sum));
    }
    CompensatedProduct prod;
    for (int j = 1; j <= level; ++j) {
        t *= 0.5;
        const double f = filter.evaluate(reflect_arg ? -t : t);
        if (f == 0.0) return 0.0;
        prod.multiply(f);
    }
    return prod.value();
}

void check_level(int level) {
    if (level < 0) throw std::invalid_argument("level must be nonnegative");
    if (level > kMaxTableLevel)
        throw BudgetError("table level " + std::to_string(level) + " exceeds cap " +
                          std::to_string(kMaxTableLevel));
}

} // namespace

double q_mass(const PeriodicFilter& filter, double xi, int level, long long k, Accumulation acc) {
    if (level < 1 || level > 62) throw std::invalid_argument("q_mass: level out of range");
    if (k < 0 || k >= (1LL << level)) throw std::domain_error("q_mass: k outside [0, 2^N)");
    return product_chain(filter, frac1(xi) + static_cast<double>(k), level, false, acc);
}

double reflected_q_mass(const PeriodicFilter& filter, double eta, int level, long long l,
                        Accumulation acc) {
    if (level < 1 || level > 62) throw std::invalid_argument("reflected_q_mass: level out of range");
    if (l < 0 || l >= (1LL << level)) throw std::domain_error("reflected_q_mass: l outside [0, 2^N)");
    return product_chain(filter, eta + static_cast<double>(l), level, true, acc);
}

ProductMeasureTable::ProductMeasureTable(PeriodicFilter filter, double xi, int level,
                                         Accumulation acc, bool validate_filter)
    : filter_(std::move(filter)), xi_(frac1(xi)), level_(level), acc_(acc) {
    check_level(level);
    if (validate_filter) {
        const auto v = filter_.validate_qmf(512, 1e-9);
        if (!v.pass)
            throw std::invalid_argument("p_table: filter fails QMF validation near xi = " +
                                        std::to_string(v.worst_xi));
    }
    const long long half = 1LL << level_;
    masses_.resize(static_cast<std::size_t>(2 * half));
    const double eta = 1.0 - xi_;
    for (long long k = -half; k < half; ++k) {
        const double m = (k >= 0)
            ? product_chain(filter_, xi_ + static_cast<double>(k), level_ + 1, false, acc_)
            : product_chain(filter_, eta + static_cast<double>(-(k + 1)), level_ + 1, true, acc_);
        masses_[static_cast<std::size_t>(k + half)] = m;
    }
}

double ProductMeasureTable::mass(long long k) const {
    const long long half = 1LL << level_;
    if (k < -half || k >= half) throw std::out_of_range("mass: k outside [-2^N, 2^N)");
    return masses_[static_cast<std::size_t>(k + half)];
}

double ProductMeasureTable::total() const {
    double sum = 0.0;
    for (double m : masses_) sum += m;
    return sum;
}

double ProductMeasureTable::tail_mass(int n) const {
    if (n < 1) throw std::invalid_argument("tail_mass: n must be >= 1");
    const long long half = 1LL << level_;
    double sum = 0.0;
    for (long long k = -half; k < half; ++k)
        if (msb_index(k) >= n) sum += masses_[static_cast<std::size_t>(k + half)];
    return sum;
}

void ProductMeasureTable::write_csv(std::ostream& out) const {
    const long long half = 1LL << level_;
    out << "k,mass\n";
    for (long long k = -half; k < half; ++k)
        out << k << ',' << masses_[static_cast<std::size_t>(k + half)] << '\n';
}

ProductMeasureTable p_table(const PeriodicFilter& filter, double xi, int level, Accumulation acc) {
    return ProductMeasureTable(filter, xi, level, acc, true);
}

double consistency_residual(const ProductMeasureTable& coarse, const ProductMeasureTable& fine) {
    if (fine.level() != coarse.level() + 1)
        throw std::invalid_argument("consistency_residual: levels must be N and N+1");
    const long long half = 1LL << coarse.level();
    const long long step = 2 * half; // 2^{N+1}
    double worst = 0.0;
    for (long long k = -half; k < half; ++k) {
        const long long partner = (k >= 0) ? k - step : k + step;
        const double lhs = coarse.mass(k);
        const double rhs = fine.mass(k) + fine.mass(partner);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

LimitMassEstimate limit_mass(const PeriodicFilter& filter, double xi, long long k,
                             int j_max, double tol) {
    if (j_max < 1) throw std::invalid_argument("limit_mass: j_max must be >= 1");
    constexpr int kBlock = 8;
    LimitMassEstimate est;
    est.k = k;
    CompensatedProduct prod;
    double t = frac1(xi) + static_cast<double>(k);
    double block = 1.0;
    for (int j = 1; j <= j_max; ++j) {
        t *= 0.5;
        const double f = filter.evaluate(t);
        if (f == 0.0) {
            est.value = 0.0;
            est.truncation_level = j;
            est.converged = true;
            return est;
        }
        prod.multiply(f);
        block *= f;
        if (j % kBlock == 0 && j != j_max) block = 1.0;
    }
    // Converged when the factors of the final block barely move the value.
    est.value = prod.value();
    est.truncation_level = j_max;
    est.converged = block >= 1.0 - tol;
    return est;
}

void write_limit_masses_json(std::ostream& out, const std::vector<LimitMassEstimate>& estimates) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : estimates) {
        arr.push_back({{"k", e.k},
                       {"value", e.value},
                       {"truncation_level", e.truncation_level},
                       {"converged", e.converged}});
    }
    out << arr.dump(2) << '\n';
}

} // namespace scalecheck
