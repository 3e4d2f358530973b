#include "scalecheck/filter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace scalecheck {

namespace {

constexpr double kPi = 3.14159265358979323846;

// h(0) = 0, h increasing, h(d) ~ 1/log(1/d) near 0.  The slow vanishing is
// what makes the deficit sums sum_k (1 - M(1/3 + eps 2^-k)) diverge.
double cusp_h(double d) {
    if (d <= 0.0) return 0.0;
    return 1.0 / std::log(std::exp(1.0) + 1.0 / d);
}

// Deficit profile of the cusp at 1/3: q(delta) = 2 (1 - M(1/3 +- delta)),
// written as a function of the dyadic scale L = log2(1/delta).  Monotone
// nonincreasing in L with sum_k q(eps 2^-k) = inf (the 1/L tail), which is
// the divergence the counterexample requires.  The profile is front-loaded:
// full deficit through L = 16 (so escaping-band masses decay geometrically
// over observable table levels), then a fast roll-off across the scales a
// double can still resolve near 1/3 (so the resolution-limited zero misses
// at xi = fl(1/3) still suppress mass hard).
double cusp_q(double delta) {
    if (delta <= 0.0) return 0.0;
    const double L = -std::log2(delta);
    if (L <= 16.0) return 1.0;
    if (L <= 56.0) return std::exp2(-(L - 16.0) / 5.0);
    return std::exp2(-8.0) * 4.0 / (L - 52.0);
}

// Cusp deficit amplitude.  1 - M dips to kCuspDepth on the near side of the
// cusp; anything above 1/2 makes escaping-band mass shrink strictly faster
// than the band's integer multiplicity doubles per level, so tails decay
// geometrically instead of stalling.
constexpr double kCuspDepth = 0.8;

// Smooth step with all derivatives vanishing at 0 and value 1 at t = 1.
double flat_sigmoid(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

// M on [0, 1/2] for the cusp counterexample: zeros at 1/6 and 1/2, value 1
// at 0 and 1/3, cusp at 1/3 shaped by cusp_q above.  On the cusp pieces
// M = 1 - q/2, so by the half-shift reflection M(5/6 +- delta) = q(delta)/2:
// the same profile that drives escaping-band decay also sets how hard a
// resolution-limited near-miss of the 5/6 zero suppresses mass.  The 1/6
// pieces use a squared log ratio for the same reason.
double cusp_half(double x) {
    constexpr double a1 = 1.0 / 24.0;
    constexpr double w = 1.0 / 96.0; // cusp piece half-width
    constexpr double a2 = 1.0 / 3.0 - w;
    constexpr double a3 = 1.0 / 3.0 + w;
    constexpr double sixth = 1.0 / 6.0;
    constexpr double third = 1.0 / 3.0;
    auto sq = [](double v) { return v * v; };
    if (x <= a1) return 1.0;
    if (x <= sixth) return sq(cusp_h(sixth - x) / cusp_h(sixth - a1));
    if (x <= a2)
        return (1.0 - kCuspDepth) * sq(cusp_h(x - sixth) / cusp_h(a2 - sixth));
    if (x <= third) return 1.0 - kCuspDepth * cusp_q(third - x);
    if (x <= a3) return 1.0 - kCuspDepth * cusp_q(x - third);
    if (x < 0.5) return (1.0 - kCuspDepth) * flat_sigmoid((0.5 - x) / (0.5 - a3));
    return 0.0;
}

} // namespace

double frac1(double x) {
    double r = x - std::floor(x);
    return (r >= 1.0) ? 0.0 : r;
}

double PeriodicFilter::evaluate_raw(double x) const {
    switch (kind_) {
    case FilterKind::Haar: {
        const double c = std::cos(kPi * x);
        return c * c;
    }
    case FilterKind::Shannon:
        return (x < 0.25 || x >= 0.75) ? 1.0 : 0.0;
    case FilterKind::DaubechiesD4: {
        const double c = std::cos(kPi * x);
        const double s = std::sin(kPi * x);
        const double c2 = c * c;
        return c2 * c2 * (1.0 + 2.0 * s * s);
    }
    case FilterKind::CuspCounterexample:
        return (x < 0.5) ? cusp_half(x) : 1.0 - cusp_half(x - 0.5);
    case FilterKind::HalfInterval:
        return (x < 0.5) ? 1.0 : 0.0;
    case FilterKind::Sampled: {
        const auto n = samples_.size();
        const double t = x * static_cast<double>(n);
        const auto i = static_cast<std::size_t>(t);
        const double w = t - static_cast<double>(i);
        const double lo = samples_[i % n];
        const double hi = samples_[(i + 1) % n];
        return lo + w * (hi - lo);
    }
    }
    return 0.0;
}

double PeriodicFilter::evaluate(double xi) const {
    if (reflected_) xi = -xi;
    const double v = evaluate_raw(frac1(xi));
    return std::clamp(v, 0.0, 1.0);
}

ValidationOutcome PeriodicFilter::validate_qmf(int grid_n, double tol) const {
    if (grid_n < 2 || grid_n % 2 != 0)
        throw std::invalid_argument("validate_qmf: grid_n must be even and >= 2");
    ValidationOutcome out;
    out.pass = true;
    const double at_zero = evaluate(0.0);
    if (std::abs(at_zero - 1.0) > tol) {
        out.pass = false;
        out.worst_xi = 0.0;
        out.worst_residual = std::abs(at_zero - 1.0);
        out.message = "M(0) != 1";
        return out;
    }
    for (int j = 0; j < grid_n; ++j) {
        const double xi = static_cast<double>(j) / grid_n;
        const double r = std::abs(evaluate(xi) + evaluate(xi + 0.5) - 1.0);
        if (r > out.worst_residual) {
            out.worst_residual = r;
            out.worst_xi = xi;
        }
    }
    if (out.worst_residual > tol) {
        out.pass = false;
        out.message = "QMF identity violated";
    }
    return out;
}

PeriodicFilter PeriodicFilter::builtin(FilterKind kind) {
    if (kind == FilterKind::Sampled)
        throw std::invalid_argument("builtin: Sampled requires sample data");
    PeriodicFilter f;
    f.kind_ = kind;
    f.name_ = kind_name(kind);
    switch (kind) {
    case FilterKind::Haar:
        f.note_ = "trigonometric polynomial, analytic";
        break;
    case FilterKind::Shannon:
        f.note_ = "indicator filter, values in {0,1}";
        break;
    case FilterKind::DaubechiesD4:
        f.note_ = "trigonometric polynomial, analytic";
        break;
    case FilterKind::CuspCounterexample:
        f.note_ = "smooth near 0 and 1/2, logarithmic cusps at 1/3 and 2/3";
        break;
    case FilterKind::HalfInterval:
        f.note_ = "indicator filter; infinite product is the indicator of [0,1)";
        break;
    default:
        break;
    }
    return f;
}

PeriodicFilter PeriodicFilter::sampled(std::vector<double> samples, bool symmetrize) {
    if (samples.size() < 2 || samples.size() % 2 != 0)
        throw std::invalid_argument("sampled: grid size must be even and >= 2");
    for (double v : samples)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("sampled: values must lie in [0,1]");
    if (symmetrize) {
        const auto half = samples.size() / 2;
        for (std::size_t i = 0; i < half; ++i)
            samples[i + half] = 1.0 - samples[i];
    }
    PeriodicFilter f;
    f.kind_ = FilterKind::Sampled;
    f.name_ = "sampled";
    f.note_ = "piecewise linear";
    f.samples_ = std::move(samples);
    return f;
}

PeriodicFilter PeriodicFilter::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open filter file: " + path);
    nlohmann::json j;
    in >> j;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "sampled") {
        auto samples = j.at("samples").get<std::vector<double>>();
        const bool sym = j.value("symmetrize", false);
        return sampled(std::move(samples), sym);
    }
    return from_spec(kind);
}

PeriodicFilter PeriodicFilter::from_spec(const std::string& name_or_path) {
    const std::string& s = name_or_path;
    if (s == "haar") return builtin(FilterKind::Haar);
    if (s == "shannon") return builtin(FilterKind::Shannon);
    if (s == "d4" || s == "daubechies-d4") return builtin(FilterKind::DaubechiesD4);
    if (s == "cusp") return builtin(FilterKind::CuspCounterexample);
    if (s == "half-interval") return builtin(FilterKind::HalfInterval);
    return from_json_file(s);
}

PeriodicFilter reflect(PeriodicFilter f) {
    f.reflected_ = !f.reflected_;
    return f;
}

std::vector<FilterKind> builtin_kinds() {
    return {FilterKind::Haar, FilterKind::Shannon, FilterKind::DaubechiesD4,
            FilterKind::CuspCounterexample, FilterKind::HalfInterval};
}

std::string kind_name(FilterKind kind) {
    switch (kind) {
    case FilterKind::Haar: return "haar";
    case FilterKind::Shannon: return "shannon";
    case FilterKind::DaubechiesD4: return "d4";
    case FilterKind::CuspCounterexample: return "cusp";
    case FilterKind::HalfInterval: return "half-interval";
    case FilterKind::Sampled: return "sampled";
    }
    return "?";
}

} // namespace scalecheck
