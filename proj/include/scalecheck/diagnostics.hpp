#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "scalecheck/filter.hpp"
#include "scalecheck/measures.hpp"

namespace scalecheck {

/// Shared knobs for the per-xi scans.  "Almost everywhere" is operationalized
/// as "at every sampled xi of this grid"; reports always name failing samples.
struct ScanConfig {
    std::vector<double> xi_grid;
    int n_max = 14;                          // deepest table level
    std::vector<double> eps = {1e-2, 1e-4};  // tightness thresholds
    long long k_window = 64;                 // |k| <= K truncation for limit sums
    int j_max = 200;                         // factors in truncated infinite products
    double convergence_tol = 1e-6;           // dyadic-limit convergence tolerance
    double condition_c_floor = 1e-3;         // witness mass below this is flagged
    long long dyadic_k_lo = -4;              // k range for the dyadic-limit scan
    long long dyadic_k_hi = 4;
    int dyadic_j_max = 16;
    double isolated_fraction = 0.02;         // failures below this grid fraction
                                             // count as isolated exceptional points
    int threads = 0;                         // 0 = hardware default

    nlohmann::json to_json() const;
};

/// Uniform n-point grid on [0,1) plus explicit probe points, sorted.
std::vector<double> make_grid(int uniform_count, const std::vector<double>& probes);

enum class TightVerdict { Tight, NotTight, Inconclusive };
std::string verdict_name(TightVerdict v);

struct XiTightness {
    double xi = 0.0;
    std::vector<double> tail_curve; // entry n-1: sup_{N <= n_max} tail_mass(P^N, n)
    std::vector<int> n_eps;         // per eps; -1 when no level works
    double retained = 0.0;          // sum_{|k| <= K} P_xi(k) at j_max factors
    TightVerdict verdict = TightVerdict::Inconclusive;
};

struct TightnessReport {
    std::vector<XiTightness> per_xi;
    TightVerdict aggregate = TightVerdict::Inconclusive;
    std::vector<double> failing_xi;      // NotTight samples
    std::vector<double> inconclusive_xi;
};

TightnessReport tightness_scan(const PeriodicFilter& filter, const ScanConfig& cfg);

struct XiWitness {
    double xi = 0.0;
    long long witness_k = 0;
    double witness_mass = 0.0;
};

struct WitnessInterval {
    double lo = 0.0, hi = 0.0;
};

struct ConditionCReport {
    std::vector<XiWitness> per_xi;
    double delta_hat = 0.0;           // inf over the grid of the witness mass
    std::vector<double> failing_xi;   // witness mass below the floor
    std::vector<WitnessInterval> witness_intervals; // runs with mass >= delta_hat/2
};

ConditionCReport condition_c_scan(const PeriodicFilter& filter, const ScanConfig& cfg);

struct DyadicLimitEntry {
    long long k = 0;
    double final_value = 0.0;
    bool converged = false;
    std::vector<double> sequence; // only filled when store_sequences
};

struct XiDyadicLimits {
    double xi = 0.0;
    std::vector<DyadicLimitEntry> per_k;
    bool plus_ok = false;  // every k >= 0 in range converges to 1
    bool minus_ok = false; // every k <= -1 in range converges to 1
};

struct DyadicLimitReport {
    std::vector<XiDyadicLimits> per_xi;
    double l_plus_fraction = 0.0;  // grid-measure estimate of L+
    double l_minus_fraction = 0.0; // grid-measure estimate of L-
};

DyadicLimitReport dyadic_limit_scan(const PeriodicFilter& filter, const ScanConfig& cfg,
                                    bool store_sequences = false);

enum class TriState { Pass, Fail, Inconclusive };
std::string tristate_name(TriState t);

struct OrthonormalityVerdict {
    TriState b_ok = TriState::Inconclusive;
    TriState c_ok = TriState::Inconclusive;
    std::string low_pass = "inconclusive"; // "yes", "no", "inconclusive"
    std::vector<double> b_failing_xi;      // exceptional sample points
    std::string caveat;                    // finite-grid disclaimer
    TightnessReport tightness;
    DyadicLimitReport dyadic;
};

OrthonormalityVerdict orthonormality_verdict(const PeriodicFilter& filter, const ScanConfig& cfg);

/// Residual of the orthonormality sum, per grid xi:
///   1 - sum_{|k| <= K} P_xi(k)  (the truncated translate sum).
std::vector<double> orthonormality_check(const PeriodicFilter& filter, const ScanConfig& cfg);

/// Assembled JSON report matching the documented schema.
nlohmann::json make_report(const PeriodicFilter& filter, const ScanConfig& cfg,
                           const TightnessReport* tight, const ConditionCReport* condc,
                           const DyadicLimitReport* dyadic, const OrthonormalityVerdict* verdict,
                           const std::vector<double>* residuals);

void write_tail_curves_csv(std::ostream& out, const TightnessReport& report);
void write_phi_samples_csv(std::ostream& out, const PeriodicFilter& filter, double lo, double hi,
                           int count, int j_max);

} // namespace scalecheck
