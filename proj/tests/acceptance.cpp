// Acceptance run: one pass/fail line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "lcarma/conditions.hpp"
#include "lcarma/errors.hpp"
#include "lcarma/field.hpp"
#include "lcarma/stats.hpp"
#include "lcarma/symbols.hpp"

using namespace lcarma;
using MP = MultiPolynomial;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char b[64];
    std::snprintf(b, sizeof b, f, a);
    return b;
}

LevyTriplet gaussian(double a = 1.0) { return {a, 0.0, make_zero_measure()}; }

KernelGrid carma(const MP& p, const MP& q, const GridSpec& g) {
    return kernel_carma1d(Carma1dStateSpace::from_polynomials(p, q), g, JumpValue::midpoint);
}

std::vector<FieldRealization> fields(const KernelGrid& K, const LevyTriplet& t, std::size_t m) {
    std::vector<FieldRealization> out;
    for (std::uint64_t s = 1; s <= m; ++s) out.push_back(simulate_mild(K, simulate_cells(t, K.grid, 0.01, s, 0)));
    return out;
}

// 1. kernel_fft against the state-space kernel, 1/(lambda + i xi).
Outcome kernel_1d() {
    const auto t0 = std::chrono::steady_clock::now();
    auto g = GridSpec::centered({16384}, {80.0 / 16384});
    double worst = 0.0;
    for (double lambda : {0.5, 1.0, 2.0}) {
        auto p = MP::parse(std::to_string(lambda) + " + x1"), q = MP::constant(1, 1.0);
        auto F = kernel_fft(p, q, g);
        auto C = carma(p, q, g);
        for (long i = 0; double(i) * g.spacing[0] <= 10.0; ++i)
            worst = std::max(worst, std::abs(F.value_at_lag({i}) - C.value_at_lag({i})));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {worst <= 1e-4 && secs <= 10.0, "sup error " + fmt("%.3g", worst) + " (<= 1e-4), " + fmt("%.1f", secs) + " s (<= 10)"};
}

// 2. kernel_fft against the closed form e^{-sqrt(lambda) r}/(4 pi r) on 128^3.
Outcome kernel_3d() {
    const auto t0 = std::chrono::steady_clock::now();
    auto g = GridSpec::centered(3, 128, 0.2);
    auto F = kernel_fft(MP::parse("1 - x1^2 - x2^2 - x3^2"), MP::constant(3, 1.0), g);
    auto M = kernel_matern3(1.0, g);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = g.norm_at(i);
        if (r < 0.2 - 1e-9 || r > 3.0 + 1e-9) continue;
        worst = std::max(worst, std::abs(F.values[i] - M.values[i]) / std::abs(M.values[i]));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {worst <= 1e-2 && secs <= 120.0,
            "max relative error " + fmt("%.3g", worst) + " on 0.2 <= |x| <= 3 (<= 1e-2), " + fmt("%.1f", secs) + " s (<= 120)"};
}

// 3. <s, p(D)* phi> = <L, q(D)* phi> for p = -1 + Delta.
Outcome spde_identity() {
    double worst = 0.0, weakest_fault = INFINITY;
    const double eps = 0.25;
    for (std::size_t d : {1, 2}) {
        const auto g = d == 1 ? GridSpec::centered({401}, {0.1}) : GridSpec::centered(2, 201, 0.2);
        const MP p = d == 1 ? MP::parse("-1 + x1^2") : MP::parse("-1 + x1^2 + x2^2");
        const auto phi = d == 1 ? bump({0.3}, 1.5, 1.0, g) : bump({0.3, -0.2}, 1.5, 1.0, g);
        for (const MP& q : {MP::constant(d, 1.0), MP::parse("1 + x1", d)}) {
            const int alpha = select_alpha(p, q, eps);
            auto K = kernel_regularized(p, q, alpha, g);
            for (std::uint64_t s = 1; s <= 20; ++s)
                worst = std::max(worst, spde_residual(p, q, K, alpha, simulate_cells(gaussian(), g, 0.01, s, 0), phi).relative());
            std::vector<long> k(d, 0);
            k[0] = 1;
            auto bad = inject_symbol_fault(K, k, 1e-3);
            weakest_fault = std::min(
                weakest_fault, spde_residual(p, q, bad, alpha, simulate_cells(gaussian(), g, 0.01, 99, 0), phi).relative());
        }
    }
    return {worst <= 1e-8 && weakest_fault > 1e-5,
            "max relative residual " + fmt("%.3g", worst) + " (<= 1e-8) over 80 runs, smallest faulted residual " +
                fmt("%.3g", weakest_fault) + " (> 1e-5)"};
}

// 4. sum X phi cellvol = sum (G(-.) * phi) dL.
Outcome fubini() {
    auto g1 = GridSpec::centered({701}, {0.05});
    auto K1 = carma(MP::parse("1 + x1"), MP::constant(1, 1.0), g1);
    auto phi1 = bump({0.0}, 2.0, 1.0, g1);
    auto g2 = GridSpec::centered(2, 161, 0.2);
    auto K2 = kernel_fft(MP::parse("1 - x1^2 - x2^2"), MP::constant(2, 1.0), g2);
    auto phi2 = bump({0.5, 0.0}, 2.0, 1.0, g2);
    double worst = 0.0;
    for (std::uint64_t s = 1; s <= 100; ++s) {
        worst = std::max(worst, fubini_check(K1, simulate_cells(gaussian(), g1, 0.01, s, 0), phi1).diff);
        worst = std::max(worst, fubini_check(K2, simulate_cells(gaussian(), g2, 0.01, s, 0), phi2).diff);
    }
    return {worst <= 1e-10, "max relative difference " + fmt("%.3g", worst) + " (<= 1e-10) over 200 runs"};
}

// 5. Empirical CF of <s, phi> against exp(int psi(u w)).
Outcome char_functional() {
    const auto t0 = std::chrono::steady_clock::now();
    auto g = GridSpec::centered({401}, {0.1});
    const MP p = MP::parse("1 + x1"), q = MP::constant(1, 1.0);
    const int alpha = select_alpha(p, q, 0.25);
    auto w = generalized_weight(kernel_regularized(p, q, alpha, g), alpha, bump({0.0}, 1.0, 1.0, g).phi);
    std::vector<double> u;
    for (int k = -30; k <= 30; ++k) u.push_back(0.1 * k);
    const std::size_t N = 5000;
    std::string detail;
    bool pass = true;
    const std::vector<std::pair<const char*, LevyTriplet>> triplets{
        {"gaussian", gaussian()},
        {"compound Poisson", {0.0, 0.0, make_compound_poisson(2.0, {JumpLaw::Kind::normal, 0.5, 1.0})}}};
    for (const auto& [name, t] : triplets) {
        std::vector<double> s;
        for (std::uint64_t k = 0; k < N; ++k) s.push_back(pair_whitenoise(simulate_cells(t, g, 0.01, 17, k), w));
        auto r = char_functional_test(t, w, s, u);
        pass &= r.sup_deviation <= r.tolerance();
        detail += std::string(detail.empty() ? "" : ", ") + name + " sup " + fmt("%.3g", r.sup_deviation);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {pass && secs <= 300.0, detail + " (<= 4/sqrt(5000) = " + fmt("%.3g", 4.0 / std::sqrt(double(N))) + "), " +
                                       fmt("%.1f", secs) + " s"};
}

// 6. Averaged periodogram against sigma2 |q/p|^2.
Outcome spectral() {
    auto g = GridSpec::centered({4096}, {0.05});
    const std::vector<std::pair<MP, MP>> models{{MP::parse("1 + x1"), MP::constant(1, 1.0)},
                                                {MP::parse("2 + 3 x1 + x1^2"), MP::parse("0.5 + x1")}};
    double worst = 0.0;
    std::string detail;
    for (const auto& [p, q] : models) {
        auto r = periodogram_compare(fields(carma(p, q, g), gaussian(), 200), p, q, 1.0);
        worst = std::max(worst, r.relative_l1);
        detail += std::string(detail.empty() ? "" : ", ") + "CARMA(" + std::to_string(p.degree()) + "," +
                  std::to_string(q.degree()) + ") " + fmt("%.3g", r.relative_l1);
    }
    // The sampled jump kernels carry an aliasing bias of about 6% on this band
    // and M = 200 adds about 5.6% Monte Carlo error, so 0.1 is marginal.
    return {worst <= 0.1, "relative L1 on band: " + detail + " (<= 0.1; max(0.1, 4/sqrt(M)) would be " +
                              fmt("%.3g", mc_tolerance(0.1, 200)) + ")"};
}

// 7. Lag-0 variance against sigma2/(2 lambda).
Outcome autocovariance() {
    auto g = GridSpec::centered({100000}, {0.05});
    auto K = carma(MP::parse("1 + x1"), MP::constant(1, 1.0), g);
    auto rows = autocovariance_compare(fields(K, gaussian(), 50), K, 1.0, {{0}});
    const double rel = std::abs(rows[0].empirical - 0.5) / 0.5;
    return {rel <= 0.05, "variance " + fmt("%.4f", rows[0].empirical) + " vs 0.5, relative " + fmt("%.3g", rel) + " (<= 0.05)"};
}

// 8. Newtonian kernel in d = 5: verdicts flip at theta = 5/3.
Outcome threshold() {
    auto N = kernel_newtonian(GridSpec::centered(5, 11, 0.4));
    auto F = functionals_at(N, default_radii());
    const MP lap = MP::parse("x1^2 + x2^2 + x3^2 + x4^2 + x5^2");
    const double target = 5.0 / 3.0;
    double flip_nec = NAN, flip_ell = NAN;
    bool consistent = true;
    Verdict prev_nec = Verdict::inconclusive, prev_ell = Verdict::inconclusive;
    for (int k = 0; k <= 30; ++k) {
        const double theta = 1.0 + 0.05 * k;
        LevyTriplet t{0.0, 0.0, make_pareto(theta, 1.0, 0.5, 0.5)};
        auto nec = check_necessary(N, F, t).verdict;
        auto t1 = check_sufficient_T1(N, F, t).verdict;
        auto ell = check_elliptic(lap, t).verdict;
        if (nec == Verdict::fails && t1 == Verdict::holds) consistent = false;
        if (k && prev_nec == Verdict::fails && nec == Verdict::holds) flip_nec = theta;
        if (k && prev_ell == Verdict::fails && ell == Verdict::holds) flip_ell = theta;
        prev_nec = nec;
        prev_ell = ell;
    }
    // The flip sits at the first holding theta; the threshold lies in the step before it.
    const bool ok_nec = flip_nec - 0.05 <= target && target <= flip_nec;
    const bool ok_ell = flip_ell - 0.05 <= target && target <= flip_ell;
    return {ok_nec && ok_ell && consistent, "necessary flips at " + fmt("%.2f", flip_nec) + ", elliptic at " +
                                                fmt("%.2f", flip_ell) + " (5/3 within the preceding step), necessary-fails => T1-not-holds " +
                                                (consistent ? "on all 31" : "VIOLATED")};
}

// 9. Isotropic kernel symbol constant.
Outcome bm_symbol() {
    auto f1 = bm_symbol_check({{-1.0}, {}, 1}, GridSpec::centered({8192}, {0.01}), 20.0);
    bool pass = std::abs(f1.c + 1.0) <= 0.01 && f1.residual <= 1e-3;
    std::string detail = "c1 = " + fmt("%.5f", f1.c) + ", residual " + fmt("%.2g", f1.residual);
    const std::vector<std::pair<GridSpec, double>> setups{{GridSpec::centered({8192}, {0.01}), 20.0},
                                                          {GridSpec::centered(2, 256, 0.1), 8.0},
                                                          {GridSpec::centered(3, 128, 0.25), 4.0}};
    for (std::size_t d = 1; d <= 3; ++d) {
        const auto& [g, xi] = setups[d - 1];
        auto a = bm_symbol_check({{-1.0}, {}, d}, g, xi), b = bm_symbol_check({{-2.0}, {}, d}, g, xi);
        const double spread = std::abs(a.c - b.c) / std::abs(a.c);
        pass &= spread <= 0.01;
        detail += "; d=" + std::to_string(d) + " c = " + fmt("%.4f", a.c) + "/" + fmt("%.4f", b.c) + " (" + fmt("%.2g", spread) + ")";
    }
    return {pass, detail};
}

// 10. beta = 2 moments stable; beta = 3 divergence flag for the d = 3 Matern kernel.
Outcome moments() {
    const MP p = MP::parse("1 + x1"), q = MP::constant(1, 1.0);
    auto stable = moment_scan({fields(carma(p, q, GridSpec::centered({2001}, {0.05})), gaussian(), 20),
                               fields(carma(p, q, GridSpec::centered({4001}, {0.025})), gaussian(), 20)},
                              {2.0});
    const double r2 = stable[0].ratios[0];
    const bool ok2 = r2 >= 0.8 && r2 <= 1.25 && !stable[0].divergence_suspected;

    LevyTriplet jumps{0.0, 0.0, make_compound_poisson(1.0, {JumpLaw::Kind::normal, 0.0, 1.0})};
    std::vector<std::vector<FieldRealization>> levels;
    for (double h : {0.2, 0.1, 0.05}) {
        const std::size_t n = std::size_t(std::lround(9.0 / h)) | 1;
        levels.push_back(fields(kernel_matern3(36.0, GridSpec::centered(3, n, h)), jumps, 4));
    }
    auto m3 = moment_scan(levels, {3.0});
    std::string ratios;
    for (double r : m3[0].ratios) ratios += (ratios.empty() ? "" : ", ") + fmt("%.2f", r);
    return {ok2 && m3[0].divergence_suspected,
            "beta=2 ratio " + fmt("%.3f", r2) + " (in [0.8, 1.25]); beta=3 Matern ratios " + ratios +
                (m3[0].divergence_suspected ? " (flag raised)" : " (flag NOT raised: growth is logarithmic in 1/h)")};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"kernel oracle 1-D", kernel_1d},         {"kernel oracle 3-D", kernel_3d},
        {"SPDE identity", spde_identity},         {"Fubini consistency", fubini},
        {"characteristic functional", char_functional}, {"spectral density", spectral},
        {"autocovariance", autocovariance},       {"condition threshold d=5", threshold},
        {"isotropic kernel symbol", bm_symbol},   {"moment behaviour", moments}};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("[%s] %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    return failed ? 1 : 0;
}
