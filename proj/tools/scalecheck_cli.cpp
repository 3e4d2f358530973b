// Command-line front end: filter validation, tightness / condition scans,
// orthonormality verdicts, and the integer-lattice dilation tools.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "scalecheck/diagnostics.hpp"
#include "scalecheck/dyadic.hpp"
#include "scalecheck/lattice.hpp"
#include "scalecheck/measures.hpp"

namespace {

using namespace scalecheck;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitBudget = 3;

struct CommonOpts {
    std::string filter = "haar";
    int grid = 1024;
    std::vector<double> probes;
    long long K = 64;
    int n_max = 14;
    int j_max = 200;
    std::vector<double> eps;
    int threads = 0;
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "json";
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_filter = true) {
    if (with_filter)
        cmd->add_option("--filter", o.filter, "Builtin filter name or definition file path");
    cmd->add_option("--grid", o.grid, "Uniform xi grid size");
    cmd->add_option("--probe", o.probes, "Extra xi probe points");
    cmd->add_option("--K", o.K, "Translate window |k| <= K");
    cmd->add_option("--N-max", o.n_max, "Deepest table level");
    cmd->add_option("--J-max", o.j_max, "Factors in truncated infinite products");
    cmd->add_option("--eps", o.eps, "Tightness thresholds");
    cmd->add_option("--threads", o.threads, "Worker thread cap (0 = hardware)");
    cmd->add_option("--seed", o.seed, "Random seed");
    cmd->add_option("--out", o.out, "Output file (default: stdout)");
    cmd->add_option("--format", o.format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
}

ScanConfig to_scan_config(const CommonOpts& o) {
    ScanConfig cfg;
    cfg.xi_grid = make_grid(o.grid, o.probes);
    cfg.n_max = o.n_max;
    if (!o.eps.empty()) cfg.eps = o.eps;
    cfg.k_window = o.K;
    cfg.j_max = o.j_max;
    cfg.threads = o.threads;
    return cfg;
}

std::string resolve_out(const std::string& path) {
    if (path.empty() || path.front() == '/') return path;
    if (const char* dir = std::getenv("SCALECHECK_OUT_DIR"))
        return std::string(dir) + "/" + path;
    return path;
}

// Writes to --out (resolved against $SCALECHECK_OUT_DIR) or stdout.
void emit(const CommonOpts& o, const std::function<void(std::ostream&)>& writer) {
    const std::string path = resolve_out(o.out);
    if (path.empty()) {
        writer(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open output file: " + path);
    writer(out);
}

void emit_json(const CommonOpts& o, const json& j) {
    emit(o, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

LatticeMatrix matrix_from_arg(const std::string& arg) {
    try {
        return parse_matrix_json(arg);
    } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument("matrix must be a JSON row-major integer array");
    }
}

IVec ivec_from_arg(const std::string& arg, int dim) {
    IVec v;
    try {
        v = nlohmann::json::parse(arg).get<IVec>();
    } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument("vector must be a JSON integer array, e.g. [1,-1]");
    }
    if (static_cast<int>(v.size()) != dim)
        throw std::invalid_argument("vector dimension does not match the matrix");
    return v;
}

json matrix_report(const LatticeMatrix& m) {
    return json{{"dim", m.dim},
                {"entries", m.entries},
                {"determinant", m.determinant},
                {"eigen_moduli", m.eigen_moduli},
                {"expansive", m.expansive},
                {"similarity", m.similarity},
                {"modulus", m.modulus}};
}

json estimate_report(const MeasureEstimate& est) {
    json j{{"value", est.value},
           {"std_error", est.std_error},
           {"tolerance", est.tolerance}};
    if (!est.warning.empty()) j["warning"] = est.warning;
    return j;
}

int run(int argc, char** argv) {
    CLI::App app{"Numerical checks for orthonormal scale-function filters"};
    app.require_subcommand(1);

    CommonOpts o;

    auto* validate = app.add_subcommand("validate", "Check the QMF identity on a grid");
    double validate_tol = 1e-12;
    add_common(validate, o);
    validate->add_option("--tol", validate_tol, "Residual tolerance");

    auto* tight = app.add_subcommand("tightness", "Tail-mass tightness scan over xi");
    add_common(tight, o);
    auto* condc = app.add_subcommand("condition-c", "Witness-mass (condition C) scan");
    add_common(condc, o);
    auto* dyadic = app.add_subcommand("dyadic-limits", "Dyadic limits of |phi-hat|^2 at integers");
    add_common(dyadic, o);
    auto* verdict = app.add_subcommand("verdict", "Full orthonormality verdict");
    add_common(verdict, o);

    std::string matrix_arg, vec_arg, shift_arg, mode_arg = "exhaustive";
    int depth = 6;
    long long mc_count = 100000, trials = 200000;
    std::vector<double> xi_md;

    auto* manalyze = app.add_subcommand("matrix-analyze", "Spectral data of a dilation matrix");
    add_common(manalyze, o, false);
    manalyze->add_option("--matrix", matrix_arg, "JSON row-major integer matrix")->required();

    auto* digits = app.add_subcommand("digits", "Digit set of the induced radix system");
    add_common(digits, o, false);
    digits->add_option("--matrix", matrix_arg)->required();

    auto* expand_cmd = app.add_subcommand("expand", "Radix expansion of a lattice point");
    add_common(expand_cmd, o, false);
    expand_cmd->add_option("--matrix", matrix_arg)->required();
    expand_cmd->add_option("--k", vec_arg, "JSON integer vector")->required();

    auto* tile = app.add_subcommand("tile", "Sample the self-affine tile (CSV point cloud)");
    add_common(tile, o, false);
    tile->add_option("--matrix", matrix_arg)->required();
    tile->add_option("--depth", depth, "Digit-string length");
    tile->add_option("--mode", mode_arg)->check(CLI::IsMember({"exhaustive", "monte-carlo"}));
    tile->add_option("--count", mc_count, "Monte Carlo sample count");

    auto* tmeasure = app.add_subcommand("tile-measure", "Estimate tile measure (or translate overlap)");
    add_common(tmeasure, o, false);
    tmeasure->add_option("--matrix", matrix_arg)->required();
    tmeasure->add_option("--depth", depth);
    tmeasure->add_option("--mode", mode_arg)->check(CLI::IsMember({"exhaustive", "monte-carlo"}));
    tmeasure->add_option("--count", mc_count);
    tmeasure->add_option("--trials", trials, "Monte Carlo trial points");
    tmeasure->add_option("--shift", shift_arg, "Integer shift: estimate |T n (T+shift)|");

    auto* mdqmf = app.add_subcommand("md-qmf", "Multidimensional coset-sum identity check");
    add_common(mdqmf, o);
    mdqmf->add_option("--matrix", matrix_arg)->required();

    auto* mdtight = app.add_subcommand("md-tightness", "Multidimensional tightness at one xi");
    add_common(mdtight, o);
    mdtight->add_option("--matrix", matrix_arg)->required();
    mdtight->add_option("--xi", xi_md, "xi coordinates")->required();

    CLI11_PARSE(app, argc, argv);

    if (*validate) {
        const PeriodicFilter f = PeriodicFilter::from_spec(o.filter);
        const ValidationOutcome v = f.validate_qmf(o.grid, validate_tol);
        emit_json(o, json{{"filter", f.name()},
                          {"pass", v.pass},
                          {"worst_residual", v.worst_residual},
                          {"worst_xi", v.worst_xi},
                          {"message", v.message}});
        return kExitOk;
    }
    if (*tight || *condc || *dyadic || *verdict) {
        const PeriodicFilter f = PeriodicFilter::from_spec(o.filter);
        const ScanConfig cfg = to_scan_config(o);
        if (*tight) {
            const TightnessReport r = tightness_scan(f, cfg);
            if (o.format == "csv")
                emit(o, [&](std::ostream& out) { write_tail_curves_csv(out, r); });
            else
                emit_json(o, make_report(f, cfg, &r, nullptr, nullptr, nullptr, nullptr));
        } else if (*condc) {
            const ConditionCReport r = condition_c_scan(f, cfg);
            emit_json(o, make_report(f, cfg, nullptr, &r, nullptr, nullptr, nullptr));
        } else if (*dyadic) {
            const DyadicLimitReport r = dyadic_limit_scan(f, cfg);
            emit_json(o, make_report(f, cfg, nullptr, nullptr, &r, nullptr, nullptr));
        } else {
            const OrthonormalityVerdict v = orthonormality_verdict(f, cfg);
            const ConditionCReport c = condition_c_scan(f, cfg);
            const std::vector<double> residuals = orthonormality_check(f, cfg);
            emit_json(o, make_report(f, cfg, &v.tightness, &c, &v.dyadic, &v, &residuals));
        }
        return kExitOk;
    }
    if (*manalyze) {
        const LatticeMatrix m = matrix_from_arg(matrix_arg);
        json j = matrix_report(m);
        if (m.similarity && m.expansive) j["power"] = choose_power(m);
        emit_json(o, j);
        return kExitOk;
    }
    if (*digits) {
        const DigitSystem sys = build_digit_system(matrix_from_arg(matrix_arg));
        emit_json(o, json{{"matrix", matrix_report(sys.base)},
                          {"power", sys.power},
                          {"b", matrix_report(sys.b)},
                          {"digits", sys.digits}});
        return kExitOk;
    }
    if (*expand_cmd) {
        const DigitSystem sys = build_digit_system(matrix_from_arg(matrix_arg));
        const IVec k = ivec_from_arg(vec_arg, sys.base.dim);
        const LatticeExpansion e = expand(sys, k);
        json digits_out = json::array();
        for (int idx : e.digit_indices) digits_out.push_back(sys.digits[idx]);
        emit_json(o, json{{"k", k},
                          {"digit_indices", e.digit_indices},
                          {"digits", digits_out},
                          {"reconstructed", reconstruct(sys, e)}});
        return kExitOk;
    }
    if (*tile || *tmeasure) {
        const DigitSystem sys = build_digit_system(matrix_from_arg(matrix_arg));
        const TileMode mode =
            (mode_arg == "exhaustive") ? TileMode::Exhaustive : TileMode::MonteCarlo;
        const TileSample sample = sample_tile(sys, depth, mode, mc_count, o.seed);
        if (*tile) {
            emit(o, [&](std::ostream& out) { write_tile_csv(out, sample); });
            return kExitOk;
        }
        MeasureEstimate est;
        if (shift_arg.empty())
            est = tile_measure_estimate(sys, sample, trials, o.seed + 1);
        else
            est = tile_overlap_estimate(sys, sample, ivec_from_arg(shift_arg, sys.base.dim),
                                        trials, o.seed + 1);
        emit_json(o, estimate_report(est));
        return kExitOk;
    }
    if (*mdqmf || *mdtight) {
        const DigitSystem sys = build_digit_system(matrix_from_arg(matrix_arg));
        const PeriodicFilter f = PeriodicFilter::from_spec(o.filter);
        const LatticeFilter M = separable_filter(f, sys.base.dim);
        if (*mdqmf) {
            const ValidationOutcome v = multidim_qmf_check(M, sys.base, sys, o.grid);
            emit_json(o, json{{"filter", M.name},
                              {"pass", v.pass},
                              {"worst_residual", v.worst_residual},
                              {"message", v.message}});
            return kExitOk;
        }
        if (static_cast<int>(xi_md.size()) != sys.base.dim)
            throw std::invalid_argument("--xi must supply one coordinate per dimension");
        const LatticeFilter mt = m_tilde(M, sys.base, sys.power);
        const double eps = o.eps.empty() ? 1e-2 : o.eps.front();
        const MdTightness t = multidim_tightness(mt, sys, xi_md, eps, o.n_max);
        emit_json(o, json{{"filter", mt.name},
                          {"xi", xi_md},
                          {"eps", eps},
                          {"n_eps", t.n_eps},
                          {"retained", t.retained},
                          {"verdict", t.verdict}});
        return kExitOk;
    }
    return kExitInput;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const scalecheck::BudgetError& e) {
        std::cerr << "budget exceeded: " << e.what() << '\n';
        return kExitBudget;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
}
