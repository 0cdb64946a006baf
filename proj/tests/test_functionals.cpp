#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lcarma/errors.hpp"
#include "lcarma/functionals.hpp"

using namespace lcarma;

namespace {

GridSpec line(std::size_t n, double h) { return GridSpec::centered({n}, {h}); }

KernelGrid indicator(const GridSpec& g) {
    return kernel_from_function(g, [](const double* x) { return x[0] >= 0.0 && x[0] < 1.0 ? 1.0 : 0.0; },
                                Envelope::compact(1.0, 1.0));
}

// |[x - R, x + R] cap [a, b]|
double overlap(double x, double R, double a, double b) { return std::max(0.0, std::min(x + R, b) - std::max(x - R, a)); }

}  // namespace

TEST_CASE("indicator kernel") {
    const double h = 0.01, R = 0.25;
    auto g = line(801, h);
    auto F = kernel_functionals(indicator(g), R);

    // Oracle: G_R from the exact interval overlap (the sampled indicator covers
    // [-h/2, 1 - h/2]), d by counting on a fine x grid, h by the trapezoid rule.
    const double a = -h / 2, b = 1.0 - h / 2;
    auto d_oracle = [&](double alpha) {
        const int n = 200000;
        const double lo = -1.0, hi = 2.0, dx = (hi - lo) / n;
        int c = 0;
        for (int i = 0; i < n; ++i) c += overlap(lo + (i + 0.5) * dx, R, a, b) > alpha;
        return c * dx;
    };
    for (double alpha : {0.01, 0.1, 0.2, 0.3, 0.45, 0.49, 0.6}) CHECK(std::abs(F.distribution(alpha) - d_oracle(alpha)) <= 3 * h);
    auto h_oracle = [&](double x) {
        const int n = 400;
        const double top = 1.0 / x;
        double s = 0.5 * (d_oracle(1e-9) + d_oracle(top));
        for (int i = 1; i < n; ++i) s += d_oracle(top * i / n);
        return x * s * top / n;
    };
    for (double x : {1.0, 1.5, 2.0, 4.0, 50.0}) CHECK(std::abs(F.h(x) - h_oracle(x)) <= 4 * h);
    // Closed form of the same trapezoid: h(x) = 2R x below x = 1/(2R), 1 + 2R - 1/x above.
    CHECK(F.h(1.0) == doctest::Approx(2 * R).epsilon(0.03));
    CHECK(F.h(50.0) == doctest::Approx(1 + 2 * R - 1 / 50.0).epsilon(0.01));
    // ||G_R||_1 = |B_R| ||G||_1.
    CHECK(F.l1() == doctest::Approx(2 * R).epsilon(1e-9));

    // As R -> 0, G_R / (2R) -> G: with R = h/2 each cell sees only itself.
    auto F0 = kernel_functionals(indicator(g), h / 2);
    CHECK(F0.distribution(0.5 * h) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(F0.distribution(0.999 * h) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(F0.distribution(1.001 * h) == 0.0);
}

TEST_CASE("zero kernel") {
    auto g = line(201, 0.05);
    auto z = kernel_from_function(g, [](const double*) { return 0.0; }, Envelope::compact(0.0, 0.0));
    auto F = kernel_functionals(z, 1.0);
    for (double alpha : {1e-12, 1e-3, 1.0}) CHECK(F.distribution(alpha) == 0.0);
    for (double x : {1.0, 10.0, 1e6}) {
        CHECK(F.h(x) == 0.0);
        CHECK(F.upper(x) == 0.0);
        CHECK(F.lower_second(x) == 0.0);
    }
    auto w = F.h_weight();
    REQUIRE(w);
    CHECK((*w)(1e9) == 0.0);
}

TEST_CASE("scaling and monotonicity") {
    auto g = line(1601, 0.025);
    auto e1 = kernel_from_function(g, [](const double* x) { return std::exp(-std::abs(x[0])); },
                                   Envelope::exponential(1.0, 1.0));
    auto e2 = kernel_from_function(g, [](const double* x) { return 2.0 * std::exp(-std::abs(x[0])); },
                                   Envelope::exponential(2.0, 1.0));
    auto F1 = kernel_functionals(e1, 0.5), F2 = kernel_functionals(e2, 0.5);
    for (double alpha : {1e-9, 1e-6, 1e-3, 0.05, 0.3, 0.8})
        CHECK(F2.distribution(alpha) == doctest::Approx(F1.distribution(alpha / 2)).epsilon(1e-9));

    double prev_d = INFINITY, prev_hx = INFINITY;
    for (int i = 0; i <= 80; ++i) {
        const double alpha = std::pow(10.0, -12.0 + 0.15 * i);
        const double d = F1.distribution(alpha);
        CHECK(d <= prev_d);
        prev_d = d;
        const double x = std::pow(10.0, 0.1 * i), hx = F1.h(x) / x;
        CHECK(hx <= prev_hx * (1 + 1e-12));
        prev_hx = hx;
    }
}

TEST_CASE("tail correction") {
    // G = e^{-|x|}, R = 1/2: G_R(x) = 2 sinh(R) e^{-|x|} for |x| >= R, so
    // d(alpha) = 2 log(2 sinh(R) / alpha) for small alpha.
    const double R = 0.5;
    auto exact_d = [&](double alpha) { return 2.0 * std::log(2.0 * std::sinh(R) / alpha); };
    auto narrow = kernel_from_function(line(401, 0.025), [](const double* x) { return std::exp(-std::abs(x[0])); },
                                       Envelope::exponential(1.0, 1.0));
    auto F = kernel_functionals(narrow, R);
    // The grid covers |x| <= 5.5; below alpha ~ 4e-3 the shell bound takes over.
    // It uses |B_R| e^{R} e^{-|x|} >= G_R, so it overestimates by 2 log(R e^R / sinh R).
    const double bias = 2.0 * std::log(R * std::exp(R) / std::sinh(R));
    for (double alpha : {1e-4, 1e-8, 1e-12}) {
        CHECK(F.distribution(alpha) >= exact_d(alpha) - 0.05);
        CHECK(F.distribution(alpha) <= exact_d(alpha) + bias + 0.05);
    }
    auto w = F.h_weight();
    REQUIRE(w);
    CHECK(w->asymptotic().kind == TailGrowth::Kind::log_power);
    CHECK(w->asymptotic().exponent == 1.0);
    // h_R(x) ~ log x: doubling log x roughly doubles h.
    CHECK(F.h(1e8) / F.h(1e4) == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("power envelopes and refusals") {
    auto g = line(801, 0.05);
    auto slow = kernel_from_function(g, [](const double* x) { return 1.0 / (1.0 + x[0] * x[0]); },
                                     Envelope::power(1.0, 2.0));
    auto F = kernel_functionals(slow, 1.0);
    // d/beta = 1/2: every weight finite, growing like x^{1/2}.
    REQUIRE(F.h_weight());
    CHECK(F.h_weight()->asymptotic().exponent == 0.5);
    CHECK(F.distribution_weight()->asymptotic().exponent == 0.5);
    CHECK(F.upper_weight()->asymptotic().exponent == 1.0);

    auto heavy = kernel_from_function(g, [](const double* x) { return 1.0 / std::sqrt(1.0 + x[0] * x[0]); },
                                      Envelope::power(1.0, 1.0 / 1.5));
    auto H = kernel_functionals(heavy, 1.0);
    // d/beta = 1.5: G_R is not integrable, h is infinite, the second weight is not.
    CHECK_FALSE(H.h_weight());
    CHECK(std::isinf(H.h(10.0)));
    REQUIRE(H.lower_second_weight());
    CHECK(H.lower_second_weight()->asymptotic().exponent == doctest::Approx(1.5));
    CHECK(H.upper_weight()->asymptotic().exponent == doctest::Approx(1.5));

    KernelGrid bare = slow;
    bare.envelope = {};
    CHECK_THROWS_AS(kernel_functionals(bare, 1.0), PreconditionError);
    CHECK_THROWS_AS(kernel_functionals(slow, 0.0), ArgumentError);
}

TEST_CASE("functionals in two dimensions") {
    // Unit-disc indicator: G_R is radial, ||G_R||_1 = pi R^2 * pi, and d(alpha)
    // for alpha just below max G_R = pi R^2 (R <= 1) is the disc of radius 1 - R.
    auto g = GridSpec::centered(2, 161, 0.025);
    auto disc = kernel_from_function(g, [](const double* x) { return x[0] * x[0] + x[1] * x[1] <= 1.0 ? 1.0 : 0.0; },
                                     Envelope::compact(1.0, 1.0));
    const double R = 0.5, pi = std::numbers::pi;
    auto F = kernel_functionals(disc, R);
    double gsum = 0.0;
    for (double v : disc.values) gsum += v;
    CHECK(F.l1() == doctest::Approx(pi * R * R * gsum * g.cell_volume()).epsilon(2e-3));
    CHECK(F.distribution(0.999 * pi * R * R) == doctest::Approx(pi * 0.25).epsilon(0.1));
    CHECK(F.distribution(1.01 * pi * R * R) == 0.0);
}
