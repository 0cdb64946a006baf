#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lcarma/errors.hpp"
#include "lcarma/fft.hpp"
#include "lcarma/field.hpp"

using namespace lcarma;
using MP = MultiPolynomial;

namespace {

CellNoise zero_noise(const GridSpec& g) {
    CellNoise n;
    n.grid = g;
    n.values.assign(g.size(), 0.0);
    return n;
}

LevyTriplet gaussian() { return {1.0, 0.0, make_zero_measure()}; }

}  // namespace

TEST_CASE("bump") {
    auto g = GridSpec::centered({201}, {0.05});
    auto b = bump({0.0}, 1.0, 2.0, g);
    CHECK(b.phi.values[center_index(201)] == doctest::Approx(2.0 * std::exp(-1.0)));
    // int exp(-1/(1-x^2)) over (-1, 1) = 0.443993816...
    CHECK(b.integral == doctest::Approx(2.0 * 0.4439938161680794).epsilon(1e-5));
    CHECK(b.phi.values[center_index(201) + 20] == 0.0);
    CHECK_THROWS_AS(bump({4.0}, 1.0, 1.0, g), PreconditionError);
    CHECK_THROWS_AS(bump({0.0, 0.0}, 1.0, 1.0, g), ArgumentError);

    // Smooth: the spectral derivative at the center vanishes.
    Fft fft(g.counts);
    auto d = apply_operator(MP::parse("x1"), b.phi, false, 2, &fft);
    double mx = 0.0;
    for (double v : d.values) mx = std::max(mx, std::abs(v));
    CHECK(std::abs(d.values[center_index(201)]) <= 1e-8 * mx);
}

TEST_CASE("mild field from single jumps") {
    auto g = GridSpec::centered({801}, {0.05});
    auto K = kernel_carma1d(Carma1dStateSpace::from_polynomials(MP::parse("1 + x1"), MP::constant(1, 1.0)), g,
                            JumpValue::midpoint);
    auto n = zero_noise(g);
    CHECK(simulate_mild(K, n).field.values == std::vector<double>(g.size(), 0.0));

    // One jump of size 1.5 at x0: X(t) = 1.5 G(t - x0).
    const std::size_t j0 = 150;
    n.values[j0] = 1.5;
    auto X = simulate_mild(K, n).field;
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const long lag = long(i) - long(j0);
        if (std::abs(lag) > 400) continue;
        err = std::max(err, std::abs(X.values[i] - 1.5 * K.value_at_lag({lag})));
    }
    CHECK(err <= 1e-12);

    // Mismatched grids and wrap-around.
    CHECK_THROWS_AS(simulate_mild(K, zero_noise(GridSpec::centered({801}, {0.04}))), ArgumentError);
    auto small = GridSpec::centered({41}, {0.05});
    auto Ks = kernel_carma1d(Carma1dStateSpace::from_polynomials(MP::parse("1 + x1"), MP::constant(1, 1.0)), small);
    CHECK_THROWS_AS(simulate_mild(Ks, zero_noise(small)), WrapAroundError);
}

TEST_CASE("CARMA(1,0) variance") {
    // a(z) = z + 2: Var X = 1/(2 lambda) = 0.25 under unit Gaussian noise.
    auto g = GridSpec::centered({4001}, {0.02});
    auto K = kernel_carma1d(Carma1dStateSpace::from_polynomials(MP::parse("2 + x1"), MP::constant(1, 1.0)), g,
                            JumpValue::midpoint);
    double s2 = 0.0;
    std::size_t m = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto X = simulate_mild(K, simulate_cells(gaussian(), g, 0.01, seed, 0)).field;
        for (double v : X.values) s2 += v * v;
        m += X.values.size();
    }
    CHECK(s2 / double(m) == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("pairings") {
    auto g = GridSpec::centered({401}, {0.1});
    auto n = simulate_cells(gaussian(), g, 0.01, 7, 0);
    auto a = bump({0.5}, 1.0, 1.0, g), b = bump({-1.0}, 2.0, 3.0, g);
    GridFunction sum{g, a.phi.values};
    for (std::size_t i = 0; i < g.size(); ++i) sum.values[i] = 2.0 * a.phi.values[i] - b.phi.values[i];
    CHECK(pair_whitenoise(n, sum) ==
          doctest::Approx(2.0 * pair_whitenoise(n, a) - pair_whitenoise(n, b)).epsilon(1e-12));

    // p = q = 1: <L, K_psi * psi phi> equals <L, phi>.
    const MP one = MP::constant(1, 1.0);
    auto Kpsi = kernel_regularized(one, one, 1, g);
    CHECK(pair_generalized(Kpsi, 1, n, a) == doctest::Approx(pair_whitenoise(n, a)).epsilon(1e-10));
    CHECK_THROWS_AS(pair_generalized(Kpsi, 2, n, a), ArgumentError);
    CHECK_THROWS_AS(pair_whitenoise(zero_noise(GridSpec::centered({401}, {0.2})), a), ArgumentError);

    // Translation: shifting phi and the noise by whole cells leaves the pairing unchanged.
    auto Kp = kernel_regularized(MP::parse("1 + x1"), one, 1, g);
    auto shifted = bump({0.8}, 1.0, 1.0, g);
    CellNoise ns = n;
    for (std::size_t i = 0; i < g.size(); ++i) ns.values[(i + 3) % g.size()] = n.values[i];
    CHECK(pair_generalized(Kp, 1, ns, shifted) == doctest::Approx(pair_generalized(Kp, 1, n, a)).epsilon(1e-10));
}

TEST_CASE("SPDE residual") {
    // (1 - Delta) s = L in d = 2 on odd grids.
    const MP p = MP::parse("1 - x1^2 - x2^2"), one = MP::constant(2, 1.0);
    for (std::size_t N : {161, 175}) {
        auto g = GridSpec::centered(2, N, 0.2);
        auto Kpsi = kernel_regularized(p, one, 1, g);
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            auto n = simulate_cells(gaussian(), g, 0.01, seed, 0);
            auto r = spde_residual(p, one, Kpsi, 1, n, bump({0.3, -0.2}, 1.5, 1.0, g));
            CHECK(r.relative() <= 1e-8);
        }
        // A perturbed kernel is caught.
        auto bad = inject_symbol_fault(Kpsi, {1, 0}, 1e-3);
        auto n = simulate_cells(gaussian(), g, 0.01, 11, 0);
        CHECK(spde_residual(p, one, bad, 1, n, bump({0.3, -0.2}, 1.5, 1.0, g)).relative() > 1e-5);
    }
}

TEST_CASE("Fubini") {
    auto g = GridSpec::centered({701}, {0.05});
    auto K = kernel_carma1d(Carma1dStateSpace::from_polynomials(MP::parse("1 + x1"), MP::constant(1, 1.0)), g,
                            JumpValue::midpoint);
    auto phi = bump({0.0}, 2.0, 1.0, g);
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed)
        worst = std::max(worst, fubini_check(K, simulate_cells(gaussian(), g, 0.01, seed, 0), phi).diff);
    CHECK(worst <= 1e-10);
}
