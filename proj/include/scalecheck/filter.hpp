#pragma once

#include <string>
#include <vector>

namespace scalecheck {

/// Squared-modulus low-pass filter candidates M(xi) = |m(2 pi xi)|^2,
/// stored in one-periodic form on [0,1).
enum class FilterKind {
    Haar,               // M(xi) = cos^2(pi xi)
    Shannon,            // indicator of [0,1/4) u [3/4,1)
    DaubechiesD4,       // M(xi) = cos^4(pi xi)(1 + 2 sin^2(pi xi))
    CuspCounterexample, // continuous filter with log-cusps at 1/3 and 2/3
    HalfInterval,       // indicator of [0,1/2); its infinite product is chi_[0,1)
    Sampled,            // uniform grid on [0,1), linear interpolation
};

struct ValidationOutcome {
    bool pass = false;
    double worst_residual = 0.0;
    double worst_xi = 0.0;
    std::string message;
};

/// Reduce to [0,1).
double frac1(double x);

/// One-periodic filter with values in [0,1] and M(0) = 1 for valid inputs.
/// Immutable after construction; evaluate() is pure and thread-safe.
class PeriodicFilter {
public:
    static PeriodicFilter builtin(FilterKind kind);
    static PeriodicFilter sampled(std::vector<double> samples, bool symmetrize = false);
    static PeriodicFilter from_json_file(const std::string& path);
    /// Accepts a builtin name ("haar", "shannon", "d4", "cusp", "half-interval")
    /// or a path to a filter definition file.
    static PeriodicFilter from_spec(const std::string& name_or_path);

    /// M(xi mod 1), clamped to [0,1]. Reflected filters evaluate M(-xi).
    double evaluate(double xi) const;
    double operator()(double xi) const { return evaluate(xi); }

    /// Checks |M(j/n) + M(j/n + 1/2) - 1| <= tol on the grid and M(0) = 1.
    ValidationOutcome validate_qmf(int grid_n, double tol) const;

    FilterKind kind() const { return kind_; }
    bool reflected() const { return reflected_; }
    const std::string& name() const { return name_; }
    const std::string& smoothness_note() const { return note_; }

    friend PeriodicFilter reflect(PeriodicFilter f);

private:
    PeriodicFilter() = default;
    double evaluate_raw(double x) const; // x in [0,1)

    FilterKind kind_ = FilterKind::Haar;
    bool reflected_ = false;
    std::string name_;
    std::string note_;
    std::vector<double> samples_;
};

/// M~(xi) = M(-xi).
PeriodicFilter reflect(PeriodicFilter f);

/// Thin view pairing a base filter with its reflection, for call sites that
/// want both M and M~ side by side.
struct ReflectedFilter {
    PeriodicFilter base;
    double evaluate(double xi) const { return base.evaluate(-xi); }
};

std::vector<FilterKind> builtin_kinds();
std::string kind_name(FilterKind kind);

} // namespace scalecheck
