#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <complex>
#include <numbers>

#include "lcarma/errors.hpp"
#include "lcarma/levy.hpp"

using namespace lcarma;
using cd = std::complex<double>;

namespace {

LevyTriplet triplet(double a, double gamma, LevyMeasurePtr nu) {
    LevyTriplet t;
    t.a = a;
    t.gamma = gamma;
    t.nu = nu ? nu : make_zero_measure();
    return t;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v) {
    double m = mean_of(v), s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

// Independent oracle: compensated integral by brute quadrature on a truncated range.
cd oracle_exponent(const std::function<double(double)>& dens, double lo, double hi, double z) {
    using Q = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto re = [&](double r) { return (std::cos(r * z) - 1.0) * dens(r); };
    auto im = [&](double r) { return (std::sin(r * z) - (std::abs(r) <= 1.0 ? r * z : 0.0)) * dens(r); };
    double a = 0, b = 0;
    std::vector<double> cuts{lo};
    for (double c : {-1.0, 0.0, 1.0})
        if (c > lo && c < hi) cuts.push_back(c);
    cuts.push_back(hi);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        a += Q::integrate(re, cuts[i], cuts[i + 1], 20, 1e-13);
        b += Q::integrate(im, cuts[i], cuts[i + 1], 20, 1e-13);
    }
    return {a, b};
}

// Two-sample Kolmogorov-Smirnov p-value (asymptotic series).
double ks_pvalue(std::vector<double> x, std::vector<double> y) {
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
    while (i < x.size() && j < y.size()) {
        double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(i / n - j / m));
    }
    double en = std::sqrt(n * m / (n + m));
    double lam = (en + 0.12 + 0.11 / en) * d;
    double p = 0.0;
    for (int k = 1; k < 200; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace

TEST_CASE("characteristic exponent: closed forms") {
    CHECK(std::abs(char_exponent(triplet(1, 0, nullptr), 2.0) - cd(-2.0, 0.0)) < 1e-15);
    CHECK(std::abs(char_exponent(triplet(0, 3, nullptr), 1.0) - cd(0.0, 3.0)) < 1e-15);
    const double c = 1.7;
    auto t = triplet(0, 0, make_atomic({{1.0, c}}));
    for (double z : {-3.0, -0.4, 0.0, 0.9, 5.0}) {
        cd expect = c * (std::exp(cd(0.0, z)) - 1.0 - cd(0.0, z));
        CHECK(std::abs(char_exponent(t, z) - expect) < 1e-14);
    }
}

TEST_CASE("characteristic exponent: families against an independent quadrature") {
    SUBCASE("gamma subordinator") {
        auto t = triplet(0, 0, make_gamma(1.5, 2.0));
        auto dens = [](double r) { return r > 0 ? 1.5 * std::exp(-2.0 * r) / r : 0.0; };
        for (double z : {-4.0, 0.3, 2.5}) {
            cd o = oracle_exponent(dens, 0.0, 60.0, z);
            CHECK(std::abs(char_exponent(t, z) - o) < 1e-9);
        }
    }
    SUBCASE("compound Poisson with normal jumps") {
        auto t = triplet(0, 0, make_compound_poisson(2.0, {JumpLaw::Kind::normal, 0.3, 0.8}));
        auto dens = [](double r) {
            double u = (r - 0.3) / 0.8;
            return 2.0 * std::exp(-0.5 * u * u) / (0.8 * std::sqrt(2 * std::numbers::pi));
        };
        for (double z : {-2.0, 0.7, 3.1}) CHECK(std::abs(char_exponent(t, z) - oracle_exponent(dens, -12, 12, z)) < 1e-9);
    }
    SUBCASE("compound Poisson with uniform and exponential jumps") {
        auto tu = triplet(0, 0, make_compound_poisson(1.0, {JumpLaw::Kind::uniform, -0.5, 2.0}));
        auto du = [](double r) { return (r >= -0.5 && r <= 2.0) ? 0.4 : 0.0; };
        auto te = triplet(0, 0, make_compound_poisson(1.0, {JumpLaw::Kind::exponential, 3.0, 0.0}));
        auto de = [](double r) { return r >= 0 ? 3.0 * std::exp(-3.0 * r) : 0.0; };
        for (double z : {-2.0, 1.3}) {
            CHECK(std::abs(char_exponent(tu, z) - oracle_exponent(du, -0.5, 2.0, z)) < 1e-9);
            CHECK(std::abs(char_exponent(te, z) - oracle_exponent(de, 0.0, 40.0, z)) < 1e-9);
        }
    }
    SUBCASE("two-sided Pareto") {
        // theta = 3 has a finite mean so truncating the oracle at r = 2000 costs < 1e-6 in the imaginary part.
        auto t = triplet(0, 0, make_pareto(3.0, 0.5, 1.0, 0.5));
        auto dens = [](double r) {
            double a = std::abs(r);
            if (a <= 0.5) return 0.0;
            return (r > 0 ? 1.0 : 0.5) * 3.0 * std::pow(0.5, 3.0) * std::pow(a, -4.0);
        };
        for (double z : {-1.5, 0.2, 4.0}) {
            cd o = oracle_exponent(dens, -2000, 2000, z);
            // Tail beyond 2000 of the real part: <= 2 * nu(|r| > 2000) ~ 3e-11.
            CHECK(std::abs(char_exponent(t, z).real() - o.real()) < 1e-8);
            CHECK(std::abs(char_exponent(t, z).imag() - o.imag()) < 1e-6);
        }
    }
    SUBCASE("tabulated") {
        auto t = triplet(0, 0, make_tabulated({-2, -1, 0.5, 3}, {0.1, 0.4, 0.2, 0.0}, -2, 3));
        auto dens = [](double r) {
            if (r < -2 || r > 3) return 0.0;
            if (r < -1) return 0.1 + (r + 2) * 0.3;
            if (r < 0.5) return 0.4 - (r + 1) / 1.5 * 0.2;
            return 0.2 - (r - 0.5) / 2.5 * 0.2;
        };
        for (double z : {-1.0, 2.2}) CHECK(std::abs(char_exponent(t, z) - oracle_exponent(dens, -2, 3, z)) < 1e-9);
    }
}

TEST_CASE("characteristic exponent: structural properties") {
    std::vector<LevyTriplet> ts{
        triplet(0.5, -1.0, make_gamma(2.0, 1.0)),
        triplet(0.0, 0.3, make_pareto(1.5, 1.0, 1.0, 1.0)),
        triplet(0.0, 0.0, make_pareto(0.7, 2.0, 0.2, 1.0)),
        triplet(0.1, 0.0, make_log_pareto(1.0, 2.0)),
        triplet(0.0, 0.0, make_atomic({{-2.0, 1.0}, {0.4, 3.0}})),
    };
    for (const auto& t : ts) {
        CHECK(char_exponent(t, 0.0) == cd(0.0, 0.0));
        for (double z = -6.0; z <= 6.0; z += 0.75) {
            cd p = char_exponent(t, z), m = char_exponent(t, -z);
            CHECK(p.real() <= 1e-10);
            CHECK(std::abs(p - std::conj(m)) < 1e-9 * (1.0 + std::abs(p)));
        }
    }
}

TEST_CASE("nu integrals") {
    auto atom = make_atomic({{2.0, 3.0}});
    auto r = nu_integral(*atom, Weight::log_power(2));
    CHECK(r.finite);
    CHECK(r.value == doctest::Approx(3.0 * std::pow(std::log(2.0), 2)).epsilon(1e-14));
    CHECK(r.value == doctest::Approx(1.4411).epsilon(1e-3));

    auto par = make_pareto(2.0, 1.0, 1.0, 0.0);
    auto p1 = nu_integral(*par, Weight::power(1.0));
    CHECK(p1.finite);
    CHECK(p1.value == doctest::Approx(2.0).epsilon(1e-14));
    auto p25 = nu_integral(*par, Weight::power(2.5));
    CHECK_FALSE(p25.finite);
    CHECK(std::isinf(p25.value));
    CHECK_FALSE(nu_integral(*par, Weight::power(2.0)).finite);

    // log^k against Pareto: theta int_1^inf log(r)^k r^{-1-theta} dr = k! / theta^k.
    auto lk = nu_integral(*par, Weight::log_power(3.0));
    CHECK(lk.value == doctest::Approx(6.0 / 8.0).epsilon(1e-12));

    // A tabulated weight r^{0.5} with declared power growth matches the closed form.
    std::vector<double> xs, ws;
    for (double x = 1.0; x <= 1e4; x *= 1.3) {
        xs.push_back(x);
        ws.push_back(std::sqrt(x));
    }
    auto tab = nu_integral(*par, Weight::table(xs, ws, TailGrowth::power(0.5)));
    CHECK(tab.finite);
    CHECK(tab.value == doctest::Approx(2.0 / 1.5).epsilon(2e-3));
    CHECK_FALSE(nu_integral(*par, Weight::table(xs, ws, TailGrowth::power(2.0))).finite);

    auto lp = make_log_pareto(1.0, 1.0);
    CHECK_FALSE(nu_integral(*lp, Weight::power(0.01)).finite);
    CHECK(nu_integral(*lp, Weight::log_power(0.5)).value == doctest::Approx(2.0));
    CHECK_FALSE(nu_integral(*lp, Weight::log_power(1.0)).finite);

    auto gam = make_gamma(1.0, 1.0);
    auto gi = nu_integral(*gam, Weight::power(1.0));
    CHECK(gi.value == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));

    auto bad = make_tabulated({-1, 0.5, 2}, {0.1, 0.1, 0.1}, -1, 5);
    CHECK_THROWS_AS(nu_integral(*bad, Weight::indicator()), ConfigError);
}

TEST_CASE("cell moments") {
    auto m = cell_moments(triplet(1, 0, nullptr), 2.0);
    CHECK(*m.mean == 0.0);
    CHECK(*m.variance == 2.0);

    // Oracle: quadrature of the one-sided Pareto density.
    using Q = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto p3 = cell_moments(triplet(0, 0, make_pareto(3.0, 1.0, 1.0, 0.0)), 1.0);
    double om = Q::integrate([](double r) { return r * 3.0 * std::pow(r, -4.0); }, 1.0, INFINITY, 15, 1e-13);
    double ov = Q::integrate([](double r) { return r * r * 3.0 * std::pow(r, -4.0); }, 1.0, INFINITY, 15, 1e-13);
    CHECK(*p3.mean == doctest::Approx(om).epsilon(1e-10));
    CHECK(*p3.mean == doctest::Approx(1.5));
    CHECK(*p3.variance == doctest::Approx(ov).epsilon(1e-6));

    auto p15 = cell_moments(triplet(0, 0, make_pareto(1.5, 1.0, 1.0, 0.0)), 1.0);
    CHECK(p15.mean.has_value());
    CHECK_FALSE(p15.variance.has_value());
    CHECK_FALSE(cell_moments(triplet(0, 0, make_pareto(0.8, 1.0, 1.0, 0.0)), 1.0).mean.has_value());
}

TEST_CASE("construction rejects invalid measures") {
    CHECK_THROWS_AS(make_atomic({{0.0, 1.0}}), ConfigError);
    CHECK_THROWS_AS(make_atomic({{1.0, -1.0}}), ConfigError);
    CHECK_THROWS_AS(make_pareto(0.0, 1.0, 1.0, 0.0), ConfigError);
    CHECK_THROWS_AS(make_gamma(1.0, 0.0), ConfigError);
    CHECK_THROWS_AS(make_tabulated({0, 1}, {1}, 0, 1), ConfigError);
    CHECK_THROWS_AS(measure_from_json({{"family", "stable"}}), ConfigError);
    LevyTriplet t = triplet(-1, 0, nullptr);
    CHECK_THROWS_AS(t.validate(), ConfigError);
}

TEST_CASE("json round trip") {
    std::vector<LevyMeasurePtr> ms{make_zero_measure(), make_atomic({{2.0, 3.0}, {-0.5, 1.0}}),
                                   make_compound_poisson(2.0, {JumpLaw::Kind::uniform, -1, 1}),
                                   make_gamma(1.0, 2.0), make_pareto(1.5, 2.0, 0.3, 0.7),
                                   make_log_pareto(2.0, 0.5), make_tabulated({-1, 0, 1}, {0, 1, 0}, -1, 1)};
    for (const auto& m : ms) {
        auto t = triplet(0.25, -0.5, m);
        auto back = LevyTriplet::from_json(t.to_json());
        CHECK(back.to_json() == t.to_json());
        CHECK(char_exponent(back, 1.3) == char_exponent(t, 1.3));
    }
}

TEST_CASE("simulate_cells: moments and exact degenerate case") {
    const std::size_t n = 100000;
    auto g = GridSpec::centered({n}, {0.01});
    auto gauss = simulate_cells(triplet(1, 0, nullptr), g, 0.01, 7, 0);
    CHECK(std::abs(mean_of(gauss.values)) < 4.0 * 0.1 / std::sqrt(double(n)));
    CHECK(var_of(gauss.values) == doctest::Approx(0.01).epsilon(0.03));

    auto g2 = GridSpec::centered({n}, {0.5});
    auto at = simulate_cells(triplet(0, 0, make_atomic({{1.0, 2.0}})), g2, 0.5, 11, 0);
    CHECK(std::abs(mean_of(at.values)) < 0.03);
    CHECK(var_of(at.values) == doctest::Approx(1.0).epsilon(0.03));

    auto zero = simulate_cells(triplet(0, 0, nullptr), GridSpec::centered({64, 32}, {0.1, 0.1}), 0.01, 3, 1);
    CHECK(std::all_of(zero.values.begin(), zero.values.end(), [](double x) { return x == 0.0; }));
}

TEST_CASE("simulate_cells: errors") {
    auto g = GridSpec::centered({16}, {1.0});
    CHECK_THROWS_AS(simulate_cells(triplet(1, 0, nullptr), g, 0.0, 1, 0), ArgumentError);
    CHECK_THROWS_AS(simulate_cells(triplet(1, 0, nullptr), g, 1.5, 1, 0), ArgumentError);
    // Pareto with theta = 1.9 and scale 1e-3: nu(|r| > 1e-3) = 2, so cells of volume 1e5 expect 2e5 jumps.
    auto heavy = triplet(0, 0, make_pareto(1.9, 1e-3, 1.0, 1.0));
    CHECK_THROWS_AS(simulate_cells(heavy, GridSpec::centered({4}, {1e5}), 1e-3, 1, 0), ResourceError);
    SimulationBudget big{1e12};
    CHECK_NOTHROW(simulate_cells(triplet(0, 0, make_pareto(1.9, 1e-3, 1.0, 1.0)), GridSpec::centered({4}, {1.0}), 1e-2, 1, 0, big));
}

TEST_CASE("simulate_cells: reproducibility and stream independence") {
    auto t = triplet(0.3, 0.1, make_gamma(2.0, 1.0));
    auto g = GridSpec::centered({40, 30}, {0.2, 0.3});
    auto a = simulate_cells(t, g, 0.01, 42, 5);
    auto b = simulate_cells(t, g, 0.01, 42, 5);
    CHECK(a.values == b.values);
    auto c = simulate_cells(t, g, 0.01, 42, 6);
    auto d = simulate_cells(t, g, 0.01, 43, 5);
    CHECK(a.values != c.values);
    CHECK(a.values != d.values);
}

TEST_CASE("simulate_cells: empirical characteristic function") {
    const std::size_t n = 100000;
    const double v = 0.2, delta = 0.01;
    std::vector<LevyTriplet> ts{triplet(0.5, 0.2, make_gamma(1.0, 2.0)),
                                triplet(0.0, 0.0, make_pareto(1.2, 0.1, 1.0, 0.4)),
                                triplet(0.0, -0.3, make_compound_poisson(3.0, {JumpLaw::Kind::normal, 0.5, 1.0}))};
    auto g = GridSpec::centered({n}, {v});
    for (std::size_t k = 0; k < ts.size(); ++k) {
        auto cells = simulate_cells(ts[k], g, delta, 1234 + k, 0);
        double worst = 0.0;
        for (double z = -5.0; z <= 5.0; z += 0.25) {
            cd emp = 0.0;
            for (double x : cells.values) emp += std::exp(cd(0.0, z * x));
            emp /= double(n);
            worst = std::max(worst, std::abs(emp - std::exp(v * char_exponent(ts[k], z))));
        }
        double tol = 4.0 / std::sqrt(double(n)) + small_jump_cf_bound(ts[k], delta, v, 5.0);
        INFO("triplet " << k << " sup error " << worst << " tol " << tol);
        CHECK(worst <= tol);
    }
}

TEST_CASE("simulate_cells: additivity in law over disjoint grids") {
    auto t = triplet(0.2, 0.0, make_pareto(1.5, 0.2, 1.0, 1.0));
    const double h = 0.1;
    // Sums over blocks of 4 cells from one grid versus sums of 2+2 cells from two disjoint grids.
    const std::size_t blocks = 20000;
    auto whole = simulate_cells(t, GridSpec::centered({4 * blocks}, {h}), 0.01, 9, 0);
    auto left = simulate_cells(t, GridSpec::centered({2 * blocks}, {h}), 0.01, 9, 1);
    auto right = simulate_cells(t, GridSpec::centered({2 * blocks}, {h}), 0.01, 9, 2);
    std::vector<double> s1(blocks), s2(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
        s1[b] = whole.values[4 * b] + whole.values[4 * b + 1] + whole.values[4 * b + 2] + whole.values[4 * b + 3];
        s2[b] = left.values[2 * b] + left.values[2 * b + 1] + right.values[2 * b] + right.values[2 * b + 1];
    }
    CHECK(ks_pvalue(s1, s2) > 0.01);
}
