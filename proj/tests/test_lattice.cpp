#include <cmath>
#include <random>
#include <sstream>

#include <doctest.h>

#include "scalecheck/lattice.hpp"
#include "scalecheck/measures.hpp"

using namespace scalecheck;

namespace {

const IMat kDyadic1d = {{2}};
const IMat kQuincunx = {{1, 1}, {-1, 1}};

} // namespace

TEST_CASE("matrix analysis") {
    const auto two = analyze_matrix(kDyadic1d);
    CHECK(two.determinant == 2);
    CHECK(two.expansive);
    CHECK(two.similarity);
    CHECK(two.modulus == doctest::Approx(2.0));
    CHECK(choose_power(two) == 2); // 2^2 > 1 + sqrt(1)

    const auto quin = analyze_matrix(kQuincunx);
    CHECK(quin.determinant == 2);
    CHECK(quin.similarity);
    CHECK(quin.modulus == doctest::Approx(std::sqrt(2.0)));
    CHECK(choose_power(quin) == 3); // sqrt(2)^3 > 1 + sqrt(2)

    const auto three = analyze_matrix({{3}});
    CHECK(choose_power(three) == 1);

    CHECK_THROWS_AS(analyze_matrix({{0}}), std::invalid_argument);
    CHECK_THROWS_AS(choose_power(analyze_matrix(mat_identity(2))), std::invalid_argument);
}

TEST_CASE("exact determinant and adjugate") {
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 50; ++rep) {
        const int d = 1 + static_cast<int>(rng() % 3);
        IMat m(d, IVec(d));
        for (auto& row : m)
            for (auto& x : row) x = static_cast<long long>(rng() % 11) - 5;
        const long long det = mat_det(m);
        if (det == 0) continue;
        const IMat prod = mat_mul(mat_adjugate(m), m);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                CHECK(prod[i][j] == (i == j ? det : 0));
    }
}

TEST_CASE("digit systems for the two reference dilations") {
    const auto dyadic = build_digit_system(analyze_matrix(kDyadic1d));
    CHECK(dyadic.power == 2);
    CHECK(dyadic.b.entries == IMat{{4}});
    REQUIRE(dyadic.digits.size() == 4);
    CHECK(dyadic.digits == std::vector<IVec>{{-1}, {0}, {1}, {2}});

    const auto quin = build_digit_system(analyze_matrix(kQuincunx));
    CHECK(quin.power == 3);
    CHECK(std::llabs(quin.b.determinant) == 8);
    CHECK(quin.digits.size() == 8);
    // pairwise non-congruent mod B by construction; spot-check the exact test
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = i + 1; j < 8; ++j) {
            IVec diff(2);
            for (int c = 0; c < 2; ++c) diff[c] = quin.digits[i][c] - quin.digits[j][c];
            CHECK_FALSE(divisible_by(quin, diff));
        }
}

TEST_CASE("expansion round trip and uniqueness, d = 1 and quincunx") {
    for (const IMat& entries : {kDyadic1d, kQuincunx}) {
        const auto sys = build_digit_system(analyze_matrix(entries));
        const int d = sys.base.dim;
        std::vector<std::vector<int>> seen;
        IVec k(d, 0);
        std::function<void(int)> scan = [&](int axis) {
            if (axis == d) {
                const auto e = expand(sys, k);
                CHECK(reconstruct(sys, e) == k);
                seen.push_back(e.digit_indices);
                return;
            }
            for (long long v = -20; v <= 20; ++v) {
                k[axis] = v;
                scan(axis + 1);
            }
        };
        scan(0);
        std::sort(seen.begin(), seen.end());
        CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end()); // injective
    }
}

TEST_CASE("known 1-d expansions in base B = 4, digits {-1,0,1,2}") {
    const auto sys = build_digit_system(analyze_matrix(kDyadic1d));
    auto digits_of = [&](long long k) {
        std::vector<long long> out;
        for (int idx : expand(sys, {k}).digit_indices) out.push_back(sys.digits[idx][0]);
        return out;
    };
    CHECK(digits_of(5) == std::vector<long long>{1, 1});    // 5 = 1 + 4*1
    CHECK(digits_of(-3) == std::vector<long long>{1, -1});  // -3 = 1 + 4*(-1)
    CHECK(digits_of(0).empty());
}

TEST_CASE("expansion length respects the norm bound") {
    const auto sys = build_digit_system(analyze_matrix(kQuincunx));
    const double lam = sys.lambda_modulus;
    const double radius = tile_ball_radius(sys);
    for (long long x = -20; x <= 20; x += 3)
        for (long long y = -20; y <= 20; y += 3) {
            const auto e = expand(sys, {x, y});
            const double norm = std::sqrt(static_cast<double>(x * x + y * y));
            const int bound =
                static_cast<int>(std::ceil(std::log(norm / radius + 1.0) / std::log(lam))) + 2;
            CHECK(static_cast<int>(e.digit_indices.size()) <= bound);
        }
}

TEST_CASE("tile samples stay inside the covering ball") {
    for (const IMat& entries : {kDyadic1d, kQuincunx}) {
        const auto sys = build_digit_system(analyze_matrix(entries));
        const double radius = tile_ball_radius(sys);
        const auto sample = sample_tile(sys, 5, TileMode::Exhaustive);
        CHECK(sample.count() == static_cast<std::size_t>(std::pow(sys.digits.size(), 5)));
        for (std::size_t i = 0; i < sample.count(); ++i) {
            double norm_sq = 0.0;
            for (int c = 0; c < sample.dim; ++c) {
                const double v = sample.points[i * sample.dim + c];
                norm_sq += v * v;
            }
            CHECK(std::sqrt(norm_sq) <= radius + 1e-12);
        }
    }
}

TEST_CASE("exhaustive tile budget") {
    const auto quin = build_digit_system(analyze_matrix(kQuincunx));
    CHECK_THROWS_AS(sample_tile(quin, 9, TileMode::Exhaustive), BudgetError); // 8^9 > 1e7
}

TEST_CASE("1-d tile is the interval [-1/3, 2/3]") {
    const auto sys = build_digit_system(analyze_matrix(kDyadic1d));
    const int depth = 8;
    const auto sample = sample_tile(sys, depth, TileMode::Exhaustive);
    double lo = 1e9, hi = -1e9;
    for (double v : sample.points) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double slack = std::pow(4.0, -depth);
    CHECK(std::abs(lo - (-1.0 / 3.0)) <= slack);
    CHECK(std::abs(hi - 2.0 / 3.0) <= slack);

    const auto est = tile_measure_estimate(sys, sample, 200000);
    CHECK(est.value == doctest::Approx(1.0).epsilon(0.05));

    const auto overlap = tile_overlap_estimate(sys, sample, {1}, 200000);
    CHECK(overlap.value <= 0.02);
}

TEST_CASE("Monte Carlo tile sampling is seed-reproducible") {
    const auto sys = build_digit_system(analyze_matrix(kQuincunx));
    const auto a = sample_tile(sys, 12, TileMode::MonteCarlo, 500, 42);
    const auto b = sample_tile(sys, 12, TileMode::MonteCarlo, 500, 42);
    const auto c = sample_tile(sys, 12, TileMode::MonteCarlo, 500, 43);
    CHECK(a.points == b.points);
    CHECK(a.points != c.points);
}

TEST_CASE("tile CSV has one row per point") {
    const auto sys = build_digit_system(analyze_matrix(kQuincunx));
    const auto sample = sample_tile(sys, 2, TileMode::Exhaustive);
    std::ostringstream out;
    write_tile_csv(out, sample);
    const std::string s = out.str();
    CHECK(std::count(s.begin(), s.end(), '\n') == 65); // header + 8^2 points
}

TEST_CASE("coset representatives of A^T are complete") {
    const auto reps = coset_representatives(mat_transpose(kQuincunx));
    CHECK(reps.size() == 2);
    const auto reps4 = coset_representatives({{4}});
    CHECK(reps4.size() == 4);
}

TEST_CASE("separable filter and m_tilde") {
    const auto haar = PeriodicFilter::builtin(FilterKind::Haar);
    const auto M2 = separable_filter(haar, 2);
    CHECK(M2.eval({0.0, 0.0}) == doctest::Approx(1.0));
    CHECK(M2.eval({0.25, 0.5}) == doctest::Approx(0.0));
    CHECK(M2.eval({0.25, 0.25}) == doctest::Approx(0.25));

    // p = 1 leaves the filter unchanged
    const auto A = analyze_matrix({{3}});
    const auto M1 = separable_filter(haar, 1);
    const auto mt1 = m_tilde(M1, A, 1);
    for (double xi = 0.0; xi < 1.0; xi += 0.1)
        CHECK(mt1.eval({xi}) == doctest::Approx(M1.eval({xi})));

    // d = 1, A = [2], p = 2: M~(xi) = cos^2(pi xi) cos^2(2 pi xi)
    const auto A2 = analyze_matrix(kDyadic1d);
    const auto mt2 = m_tilde(M1, A2, 2);
    for (double xi = 0.05; xi < 1.0; xi += 0.1) {
        const double expected = haar(xi) * haar(2.0 * xi);
        CHECK(mt2.eval({xi}) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("telescoping: products of m_tilde against the base filter") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (const IMat& entries : {kDyadic1d, kQuincunx}) {
        const auto A = analyze_matrix(entries);
        const auto sys = build_digit_system(A);
        const int d = A.dim;
        const auto haar = PeriodicFilter::builtin(FilterKind::Haar);
        const auto M = separable_filter(haar, d);
        const auto mt = m_tilde(M, A, sys.power);

        // double-valued inverses of A^T and B for the argument chains
        const auto at = mat_transpose(A.entries);
        const auto at_adj = mat_adjugate(at);
        const long long at_det = mat_det(at);
        auto apply_inv = [&](const IMat& adj, long long det, std::vector<double> v) {
            std::vector<double> out(v.size(), 0.0);
            for (std::size_t i = 0; i < v.size(); ++i)
                for (std::size_t j = 0; j < v.size(); ++j)
                    out[i] += static_cast<double>(adj[i][j]) * v[j] / static_cast<double>(det);
            return out;
        };

        for (int rep = 0; rep < 50; ++rep) {
            std::vector<double> xi(d);
            for (auto& x : xi) x = unit(rng);
            const int J = 1 + static_cast<int>(rng() % 8);

            std::vector<double> v = xi;
            double lhs = 1.0;
            for (int j = 0; j < J; ++j) {
                for (int s = 0; s < sys.power; ++s) v = apply_inv(at_adj, at_det, v);
                lhs *= mt.eval(v);
            }
            std::vector<double> w = xi;
            double rhs = 1.0;
            for (int j = 0; j < sys.power * J; ++j) {
                w = apply_inv(at_adj, at_det, w);
                rhs *= M.eval(w);
            }
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        }
    }
}

TEST_CASE("multidimensional QMF check on A = 2I with separable Haar") {
    const auto A = analyze_matrix({{2, 0}, {0, 2}});
    const auto sys = build_digit_system(A);
    const auto M = separable_filter(PeriodicFilter::builtin(FilterKind::Haar), 2);
    const auto v = multidim_qmf_check(M, A, sys, 16);
    CAPTURE(v.worst_residual);
    CHECK(v.pass);
}

TEST_CASE("multidim tables: d = 1 reduction agrees with the scalar oracle") {
    const auto A = analyze_matrix(kDyadic1d);
    const auto sys = build_digit_system(A);
    const auto haar = PeriodicFilter::builtin(FilterKind::Haar);
    const auto M = separable_filter(haar, 1);
    const auto mt = m_tilde(M, A, sys.power);

    const double xi = 0.29;
    const int level = 3; // B-levels; 4^3 = 64 digit strings
    const auto table = multidim_p_table(mt, sys, {xi}, level);
    CHECK(table.total() == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t i = 0; i < table.ks.size(); ++i) {
        // prod_{j<=level} M~(B^-j(xi+k)) telescopes to the 2*level-factor scalar product
        const long long k = table.ks[i][0];
        double scalar = 1.0;
        for (int j = 1; j <= 2 * level; ++j)
            scalar *= haar((xi + static_cast<double>(k)) / std::ldexp(1.0, j));
        CHECK(table.masses[i] == doctest::Approx(scalar).epsilon(1e-10));
    }
}

TEST_CASE("multidim tables: point mass at 0 when xi = 0") {
    const auto A = analyze_matrix(kQuincunx);
    const auto sys = build_digit_system(A);
    const auto mt = m_tilde(separable_filter(PeriodicFilter::builtin(FilterKind::Haar), 2),
                            A, sys.power);
    const auto table = multidim_p_table(mt, sys, {0.0, 0.0}, 2);
    double at_zero = 0.0;
    for (std::size_t i = 0; i < table.ks.size(); ++i)
        if (table.ks[i] == IVec{0, 0}) at_zero = table.masses[i];
    CHECK(at_zero == doctest::Approx(1.0));
    CHECK(table.total() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("multidim tightness on the separable system") {
    const auto A = analyze_matrix({{2, 0}, {0, 2}});
    const auto sys = build_digit_system(A);
    const auto mt = m_tilde(separable_filter(PeriodicFilter::builtin(FilterKind::Haar), 2),
                            A, sys.power);
    const auto t = multidim_tightness(mt, sys, {0.3, 0.7}, 1e-2, 5);
    CHECK(t.verdict == "tight");
    CHECK(t.n_eps >= 1);
    for (double r : t.retained) CHECK(r >= 1.0 - 1e-2);
}
