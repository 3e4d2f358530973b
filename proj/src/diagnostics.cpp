#include "scalecheck/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "scalecheck/parallel.hpp"

namespace scalecheck {

namespace {

double retained_limit_mass(const PeriodicFilter& filter, double xi, long long K, int j_max) {
    double sum = 0.0;
    for (long long k = -K; k <= K; ++k)
        sum += limit_mass(filter, xi, k, j_max).value;
    return sum;
}

} // namespace

nlohmann::json ScanConfig::to_json() const {
    return {{"xi_grid_size", xi_grid.size()},
            {"xi_grid", xi_grid},
            {"n_max", n_max},
            {"eps", eps},
            {"k_window", k_window},
            {"j_max", j_max},
            {"convergence_tol", convergence_tol},
            {"condition_c_floor", condition_c_floor},
            {"dyadic_k_lo", dyadic_k_lo},
            {"dyadic_k_hi", dyadic_k_hi},
            {"dyadic_j_max", dyadic_j_max},
            {"isolated_fraction", isolated_fraction}};
}

std::vector<double> make_grid(int uniform_count, const std::vector<double>& probes) {
    std::set<double> pts;
    for (int i = 0; i < uniform_count; ++i)
        pts.insert(static_cast<double>(i) / uniform_count);
    for (double p : probes) pts.insert(frac1(p));
    return {pts.begin(), pts.end()};
}

std::string verdict_name(TightVerdict v) {
    switch (v) {
    case TightVerdict::Tight: return "tight";
    case TightVerdict::NotTight: return "not_tight";
    case TightVerdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

std::string tristate_name(TriState t) {
    switch (t) {
    case TriState::Pass: return "pass";
    case TriState::Fail: return "fail";
    case TriState::Inconclusive: return "inconclusive";
    }
    return "?";
}

TightnessReport tightness_scan(const PeriodicFilter& filter, const ScanConfig& cfg) {
    if (cfg.xi_grid.empty()) throw std::invalid_argument("tightness_scan: empty grid");
    if (cfg.n_max < 1 || cfg.n_max > kMaxTableLevel)
        throw std::invalid_argument("tightness_scan: n_max out of range");
    const auto qmf = filter.validate_qmf(512, 1e-9);
    if (!qmf.pass)
        throw std::invalid_argument("tightness_scan: filter fails QMF validation");

    const double eps_max = *std::max_element(cfg.eps.begin(), cfg.eps.end());
    TightnessReport report;
    report.per_xi.resize(cfg.xi_grid.size());

    parallel_for(cfg.xi_grid.size(), [&](std::size_t gi) {
        XiTightness row;
        row.xi = cfg.xi_grid[gi];
        row.tail_curve.assign(static_cast<std::size_t>(cfg.n_max), 0.0);
        for (int level = 1; level <= cfg.n_max; ++level) {
            ProductMeasureTable table(filter, row.xi, level, Accumulation::Compensated, false);
            for (int n = 1; n <= cfg.n_max; ++n) {
                const double t = table.tail_mass(n);
                auto& cur = row.tail_curve[static_cast<std::size_t>(n - 1)];
                cur = std::max(cur, t);
            }
        }
        for (double eps : cfg.eps) {
            int found = -1;
            for (int n = 1; n <= cfg.n_max; ++n) {
                if (row.tail_curve[static_cast<std::size_t>(n - 1)] <= eps) {
                    found = n;
                    break;
                }
            }
            row.n_eps.push_back(found);
        }
        row.retained = retained_limit_mass(filter, row.xi, cfg.k_window, cfg.j_max);

        const bool all_found =
            std::all_of(row.n_eps.begin(), row.n_eps.end(), [](int n) { return n >= 0; });
        if (all_found) {
            row.verdict = TightVerdict::Tight;
        } else if (row.retained < (1.0 - eps_max) - 0.25) {
            row.verdict = TightVerdict::NotTight;
        } else {
            row.verdict = TightVerdict::Inconclusive;
        }
        report.per_xi[gi] = std::move(row);
    }, cfg.threads);

    for (const auto& row : report.per_xi) {
        if (row.verdict == TightVerdict::NotTight) report.failing_xi.push_back(row.xi);
        if (row.verdict == TightVerdict::Inconclusive) report.inconclusive_xi.push_back(row.xi);
    }
    if (!report.failing_xi.empty())
        report.aggregate = TightVerdict::NotTight;
    else if (!report.inconclusive_xi.empty())
        report.aggregate = TightVerdict::Inconclusive;
    else
        report.aggregate = TightVerdict::Tight;
    return report;
}

ConditionCReport condition_c_scan(const PeriodicFilter& filter, const ScanConfig& cfg) {
    if (cfg.xi_grid.empty()) throw std::invalid_argument("condition_c_scan: empty grid");
    if (cfg.k_window < 1) throw std::invalid_argument("condition_c_scan: K must be >= 1");
    ConditionCReport report;
    report.per_xi.resize(cfg.xi_grid.size());

    parallel_for(cfg.xi_grid.size(), [&](std::size_t gi) {
        XiWitness w;
        w.xi = cfg.xi_grid[gi];
        w.witness_mass = -1.0;
        for (long long k = -cfg.k_window; k <= cfg.k_window; ++k) {
            const double m = limit_mass(filter, w.xi, k, cfg.j_max).value;
            if (m > w.witness_mass) {
                w.witness_mass = m;
                w.witness_k = k;
            }
        }
        report.per_xi[gi] = w;
    }, cfg.threads);

    report.delta_hat = 1.0;
    for (const auto& w : report.per_xi) {
        report.delta_hat = std::min(report.delta_hat, w.witness_mass);
        if (w.witness_mass < cfg.condition_c_floor) report.failing_xi.push_back(w.xi);
    }
    // Cohen-style witness data: maximal runs of consecutive grid points whose
    // witness mass stays above delta_hat / 2.
    const double cut = report.delta_hat / 2.0;
    std::size_t i = 0;
    while (i < report.per_xi.size()) {
        if (report.per_xi[i].witness_mass >= cut) {
            std::size_t j = i;
            while (j + 1 < report.per_xi.size() && report.per_xi[j + 1].witness_mass >= cut) ++j;
            report.witness_intervals.push_back({report.per_xi[i].xi, report.per_xi[j].xi});
            i = j + 1;
        } else {
            ++i;
        }
    }
    return report;
}

DyadicLimitReport dyadic_limit_scan(const PeriodicFilter& filter, const ScanConfig& cfg,
                                    bool store_sequences) {
    if (cfg.xi_grid.empty()) throw std::invalid_argument("dyadic_limit_scan: empty grid");
    if (cfg.dyadic_j_max < 1) throw std::invalid_argument("dyadic_limit_scan: j_max must be >= 1");
    DyadicLimitReport report;
    report.per_xi.resize(cfg.xi_grid.size());

    parallel_for(cfg.xi_grid.size(), [&](std::size_t gi) {
        XiDyadicLimits row;
        row.xi = cfg.xi_grid[gi];
        row.plus_ok = true;
        row.minus_ok = true;
        for (long long k = cfg.dyadic_k_lo; k <= cfg.dyadic_k_hi; ++k) {
            DyadicLimitEntry entry;
            entry.k = k;
            const double theta = row.xi + static_cast<double>(k);
            for (int j = 1; j <= cfg.dyadic_j_max; ++j) {
                // |phi_hat(theta / 2^j)|^2, truncated at j_max filter factors.
                // Split the real argument into integer and fractional parts so
                // the product runs at the true (possibly negative) argument.
                const double x = theta / std::pow(2.0, j);
                const double fl = std::floor(x);
                const double v =
                    limit_mass(filter, x - fl, static_cast<long long>(fl), cfg.j_max).value;
                if (store_sequences) entry.sequence.push_back(v);
                if (j == cfg.dyadic_j_max) entry.final_value = v;
            }
            entry.converged = std::abs(entry.final_value - 1.0) <= cfg.convergence_tol;
            if (!entry.converged) {
                if (k >= 0) row.plus_ok = false;
                if (k <= -1) row.minus_ok = false;
            }
            row.per_k.push_back(std::move(entry));
        }
        report.per_xi[gi] = std::move(row);
    }, cfg.threads);

    std::size_t plus = 0, minus = 0;
    for (const auto& row : report.per_xi) {
        if (row.plus_ok) ++plus;
        if (row.minus_ok) ++minus;
    }
    report.l_plus_fraction = static_cast<double>(plus) / report.per_xi.size();
    report.l_minus_fraction = static_cast<double>(minus) / report.per_xi.size();
    return report;
}

OrthonormalityVerdict orthonormality_verdict(const PeriodicFilter& filter, const ScanConfig& cfg) {
    OrthonormalityVerdict v;
    v.tightness = tightness_scan(filter, cfg);
    v.dyadic = dyadic_limit_scan(filter, cfg);
    v.caveat = "almost-everywhere statements tested on a finite grid; "
               "measure-zero exceptional sets off the grid are invisible";

    v.b_failing_xi = v.tightness.failing_xi;
    const double fail_frac =
        static_cast<double>(v.tightness.failing_xi.size()) / v.tightness.per_xi.size();
    const bool has_inconclusive = !v.tightness.inconclusive_xi.empty();
    if (v.tightness.failing_xi.empty() && !has_inconclusive)
        v.b_ok = TriState::Pass;
    else if (!v.tightness.failing_xi.empty() && fail_frac <= cfg.isolated_fraction &&
             !has_inconclusive)
        v.b_ok = TriState::Pass; // isolated exceptional points; holds a.e. on the grid
    else if (!v.tightness.failing_xi.empty() && fail_frac > cfg.isolated_fraction)
        v.b_ok = TriState::Fail;
    else
        v.b_ok = TriState::Inconclusive;

    // (c''): both L+ and L- must carry positive measure.  All flags resolve
    // (converged or not), so zero fraction is a definite failure on the grid.
    if (v.dyadic.l_plus_fraction > 0.0 && v.dyadic.l_minus_fraction > 0.0)
        v.c_ok = TriState::Pass;
    else
        v.c_ok = TriState::Fail;

    if (v.b_ok == TriState::Pass && v.c_ok == TriState::Pass)
        v.low_pass = "yes";
    else if (v.b_ok == TriState::Fail || v.c_ok == TriState::Fail)
        v.low_pass = "no";
    else
        v.low_pass = "inconclusive";
    return v;
}

std::vector<double> orthonormality_check(const PeriodicFilter& filter, const ScanConfig& cfg) {
    std::vector<double> residuals(cfg.xi_grid.size(), 0.0);
    parallel_for(cfg.xi_grid.size(), [&](std::size_t gi) {
        residuals[gi] =
            1.0 - retained_limit_mass(filter, cfg.xi_grid[gi], cfg.k_window, cfg.j_max);
    }, cfg.threads);
    return residuals;
}

nlohmann::json make_report(const PeriodicFilter& filter, const ScanConfig& cfg,
                           const TightnessReport* tight, const ConditionCReport* condc,
                           const DyadicLimitReport* dyadic, const OrthonormalityVerdict* verdict,
                           const std::vector<double>* residuals) {
    nlohmann::json j;
    j["filter"] = filter.name();
    j["config"] = cfg.to_json();
    nlohmann::json per_xi = nlohmann::json::array();
    for (std::size_t i = 0; i < cfg.xi_grid.size(); ++i) {
        nlohmann::json row;
        row["xi"] = cfg.xi_grid[i];
        if (tight && i < tight->per_xi.size()) {
            row["tail_curve"] = tight->per_xi[i].tail_curve;
            row["n_eps"] = tight->per_xi[i].n_eps;
            row["retained"] = tight->per_xi[i].retained;
            row["tight"] = verdict_name(tight->per_xi[i].verdict);
        }
        if (condc && i < condc->per_xi.size()) {
            row["witness_k"] = condc->per_xi[i].witness_k;
            row["witness_mass"] = condc->per_xi[i].witness_mass;
        }
        if (dyadic && i < dyadic->per_xi.size()) {
            nlohmann::json limits = nlohmann::json::array();
            for (const auto& e : dyadic->per_xi[i].per_k)
                limits.push_back({{"k", e.k},
                                  {"value", e.final_value},
                                  {"converged", e.converged}});
            row["dyadic_limits"] = limits;
        }
        if (residuals && i < residuals->size()) row["residual"] = (*residuals)[i];
        per_xi.push_back(std::move(row));
    }
    j["per_xi"] = std::move(per_xi);

    nlohmann::json agg;
    if (condc) {
        agg["delta_hat"] = condc->delta_hat;
        nlohmann::json ivals = nlohmann::json::array();
        for (const auto& iv : condc->witness_intervals)
            ivals.push_back({{"lo", iv.lo}, {"hi", iv.hi}});
        agg["witness_intervals"] = std::move(ivals);
    }
    if (tight) {
        agg["tightness"] = verdict_name(tight->aggregate);
        agg["not_tight_xi"] = tight->failing_xi;
        agg["inconclusive_xi"] = tight->inconclusive_xi;
    }
    if (dyadic) {
        agg["l_plus_fraction"] = dyadic->l_plus_fraction;
        agg["l_minus_fraction"] = dyadic->l_minus_fraction;
    }
    if (verdict) {
        agg["verdict"] = verdict->low_pass;
        agg["b_ok"] = tristate_name(verdict->b_ok);
        agg["c_ok"] = tristate_name(verdict->c_ok);
        agg["b_failing_xi"] = verdict->b_failing_xi;
        agg["caveat"] = verdict->caveat;
        // Introduction conditions (1) and (2), from the same limit-mass data:
        // (1) inf over the grid of |phi_hat(xi)|^2, (2) inf of the best
        // translate witness.
        double cond1 = 1.0;
        for (double xi : cfg.xi_grid)
            cond1 = std::min(cond1,
                             limit_mass(filter, xi, 0, cfg.j_max).value);
        agg["cond1_delta"] = cond1;
        if (condc) agg["cond2_delta"] = condc->delta_hat;
    }
    j["aggregate"] = std::move(agg);
    return j;
}

void write_tail_curves_csv(std::ostream& out, const TightnessReport& report) {
    out << "xi,n,sup_tail_mass\n";
    for (const auto& row : report.per_xi)
        for (std::size_t n = 0; n < row.tail_curve.size(); ++n)
            out << row.xi << ',' << (n + 1) << ',' << row.tail_curve[n] << '\n';
}

void write_phi_samples_csv(std::ostream& out, const PeriodicFilter& filter, double lo, double hi,
                           int count, int j_max) {
    out << "xi,phi_hat_sq\n";
    for (int i = 0; i < count; ++i) {
        const double xi = lo + (hi - lo) * i / std::max(1, count - 1);
        // |phi_hat(xi)|^2 = prod_j M(xi / 2^j); limit_mass at integer 0 with
        // the fractional offset folded into its xi argument would reduce mod 1,
        // so evaluate the product directly here.
        double t = xi;
        double prod = 1.0;
        for (int j = 1; j <= j_max && prod != 0.0; ++j) {
            t *= 0.5;
            prod *= filter.evaluate(t);
        }
        out << xi << ',' << prod << '\n';
    }
}

} // namespace scalecheck
