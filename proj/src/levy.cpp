#include "lcarma/levy.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "lcarma/errors.hpp"

namespace lcarma {

using cd = std::complex<double>;
using json = nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuadTol = 1e-10;

double gk(const std::function<double(double)>& f, double a, double b) {
    if (!(b > a)) return 0.0;
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-12, &err);
    if (!std::isfinite(v)) throw NumericalError("quadrature returned a non-finite value");
    if (err > std::max(kQuadTol, 1e-8 * std::abs(v)))
        throw NumericalError("quadrature failed to reach tolerance on [" + std::to_string(a) + ", " +
                             std::to_string(b) + "]: error estimate " + std::to_string(err));
    return v;
}

// Integral of w(x) * density(x) over [lo, hi] (lo >= 1), split at table nodes.
double integrate_weighted(const Weight& w, const std::function<double(double)>& density, double lo,
                          double hi) {
    if (!(hi > lo)) return 0.0;
    std::vector<double> cuts{lo};
    if (w.kind == Weight::Kind::table)
        for (double x : w.xs)
            if (x > lo && x < hi) cuts.push_back(x);
    cuts.push_back(hi);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        total += gk([&](double x) { return w(x) * density(x); }, cuts[k], cuts[k + 1]);
    return total;
}

// Fourier integrals int_shift^inf e^{i w u} g(u - shift) du for w > 0 via Ooura's
// double-exponential rules on [0, inf).
cd shifted_fourier(const std::function<double(double)>& g, double shift, double omega) {
    thread_local boost::math::quadrature::ooura_fourier_cos<double> cosq(1e-11);
    thread_local boost::math::quadrature::ooura_fourier_sin<double> sinq(1e-11);
    auto [c, ec] = cosq.integrate(g, omega);
    auto [s, es] = sinq.integrate(g, omega);
    if (!std::isfinite(c) || !std::isfinite(s)) throw NumericalError("oscillatory quadrature diverged");
    const double cs = std::cos(omega * shift), sn = std::sin(omega * shift);
    return {cs * c - sn * s, sn * c + cs * s};
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

// ---- zero ----

class ZeroMeasure final : public LevyMeasure {
public:
    std::string family() const override { return "zero"; }
    json to_json() const override { return {{"family", "zero"}}; }
    bool is_zero() const override { return true; }
    cd exponent(double) const override { return 0.0; }
    double mass_above(double) const override { return 0.0; }
    double small_variance(double) const override { return 0.0; }
    double mid_mean(double) const override { return 0.0; }
    double truncated_second_moment() const override { return 0.0; }
    double sample_jump(double, SplitMix64&) const override {
        throw NumericalError("zero measure has no jumps");
    }
    NuIntegral tail_integral(const Weight&) const override { return {0.0, true, "empty measure"}; }
    std::optional<double> signed_tail_mean() const override { return 0.0; }
    std::optional<double> second_moment() const override { return 0.0; }
};

// ---- finite atomic ----

class AtomicMeasure final : public LevyMeasure {
public:
    explicit AtomicMeasure(std::vector<std::pair<double, double>> atoms) : atoms_(std::move(atoms)) {
        for (auto [r, c] : atoms_) {
            require(std::isfinite(r) && std::isfinite(c), "finite_atomic: atoms must be finite");
            require(r != 0.0, "finite_atomic: an atom at r = 0 is not allowed");
            require(c > 0.0, "finite_atomic: masses must be positive");
        }
    }
    std::string family() const override { return "finite_atomic"; }
    json to_json() const override {
        json a = json::array();
        for (auto [r, c] : atoms_) a.push_back({r, c});
        return {{"family", "finite_atomic"}, {"atoms", a}};
    }
    bool is_zero() const override { return atoms_.empty(); }
    cd exponent(double z) const override {
        cd s = 0.0;
        for (auto [r, c] : atoms_) {
            double comp = std::abs(r) <= 1.0 ? r * z : 0.0;
            s += c * (std::exp(cd(0.0, r * z)) - 1.0 - cd(0.0, comp));
        }
        return s;
    }
    double mass_above(double delta) const override {
        double m = 0.0;
        for (auto [r, c] : atoms_)
            if (std::abs(r) > delta) m += c;
        return m;
    }
    double small_variance(double delta) const override {
        double m = 0.0;
        for (auto [r, c] : atoms_)
            if (std::abs(r) <= delta) m += c * r * r;
        return m;
    }
    double mid_mean(double delta) const override {
        double m = 0.0;
        for (auto [r, c] : atoms_)
            if (std::abs(r) > delta && std::abs(r) <= 1.0) m += c * r;
        return m;
    }
    double truncated_second_moment() const override {
        double m = 0.0;
        for (auto [r, c] : atoms_) m += c * std::min(1.0, r * r);
        return m;
    }
    double sample_jump(double delta, SplitMix64& rng) const override {
        double u = rng.uniform01() * mass_above(delta);
        double last = 0.0;
        for (auto [r, c] : atoms_) {
            if (std::abs(r) <= delta) continue;
            last = r;
            u -= c;
            if (u <= 0.0) return r;
        }
        return last;
    }
    NuIntegral tail_integral(const Weight& w) const override {
        double s = 0.0;
        for (auto [r, c] : atoms_)
            if (std::abs(r) > 1.0) s += c * w(std::abs(r));
        return {s, std::isfinite(s), "atom sum"};
    }
    std::optional<double> signed_tail_mean() const override {
        double s = 0.0;
        for (auto [r, c] : atoms_)
            if (std::abs(r) > 1.0) s += c * r;
        return s;
    }
    std::optional<double> second_moment() const override { return small_variance(kInf); }

private:
    std::vector<std::pair<double, double>> atoms_;
};

// ---- compound Poisson with a smooth jump law ----

class CompoundPoissonMeasure final : public LevyMeasure {
public:
    CompoundPoissonMeasure(double c, JumpLaw law) : c_(c), law_(law) {
        require(std::isfinite(c) && c >= 0.0, "compound_poisson: intensity must be >= 0");
        switch (law.kind) {
            case JumpLaw::Kind::normal:
                require(std::isfinite(law.p1) && law.p2 > 0.0, "compound_poisson: normal law needs sd > 0");
                lo_ = law.p1 - 40.0 * law.p2;
                hi_ = law.p1 + 40.0 * law.p2;
                break;
            case JumpLaw::Kind::exponential:
                require(law.p1 > 0.0, "compound_poisson: exponential law needs rate > 0");
                lo_ = 0.0;
                hi_ = 800.0 / law.p1;
                break;
            case JumpLaw::Kind::uniform:
                require(law.p1 < law.p2, "compound_poisson: uniform law needs lo < hi");
                lo_ = law.p1;
                hi_ = law.p2;
                break;
        }
        // Mass of the law inside (-1, 1) (and near 0 for the normal law) is fine: jumps
        // at exactly 0 have probability zero.
    }
    std::string family() const override { return "compound_poisson"; }
    json to_json() const override {
        json law;
        switch (law_.kind) {
            case JumpLaw::Kind::normal: law = {{"law", "normal"}, {"mean", law_.p1}, {"sd", law_.p2}}; break;
            case JumpLaw::Kind::exponential: law = {{"law", "exponential"}, {"rate", law_.p1}}; break;
            case JumpLaw::Kind::uniform: law = {{"law", "uniform"}, {"lo", law_.p1}, {"hi", law_.p2}}; break;
        }
        return {{"family", "compound_poisson"}, {"intensity", c_}, {"jump", law}};
    }
    bool is_zero() const override { return c_ == 0.0; }

    double density(double r) const {
        switch (law_.kind) {
            case JumpLaw::Kind::normal: {
                double u = (r - law_.p1) / law_.p2;
                return std::exp(-0.5 * u * u) / (law_.p2 * std::sqrt(2.0 * std::numbers::pi));
            }
            case JumpLaw::Kind::exponential: return r >= 0.0 ? law_.p1 * std::exp(-law_.p1 * r) : 0.0;
            default: return (r >= law_.p1 && r <= law_.p2) ? 1.0 / (law_.p2 - law_.p1) : 0.0;
        }
    }
    cd law_cf(double z) const {
        switch (law_.kind) {
            case JumpLaw::Kind::normal:
                return std::exp(cd(-0.5 * law_.p2 * law_.p2 * z * z, law_.p1 * z));
            case JumpLaw::Kind::exponential: return law_.p1 / cd(law_.p1, -z);
            default: {
                if (z == 0.0) return 1.0;
                return (std::exp(cd(0.0, law_.p2 * z)) - std::exp(cd(0.0, law_.p1 * z))) /
                       cd(0.0, z * (law_.p2 - law_.p1));
            }
        }
    }
    // int_{a<=r<=b} r^k f(r) dr clipped to the law's effective support.
    double moment(int k, double a, double b) const {
        a = std::max(a, lo_);
        b = std::min(b, hi_);
        if (!(b > a)) return 0.0;
        auto f = [&](double r) { return std::pow(r, k) * density(r); };
        // Split at 0 and +-1 so kinks and the normal bulk are resolved.
        std::vector<double> cuts{a};
        for (double x : {-1.0, 0.0, 1.0, law_.p1})
            if (x > a && x < b) cuts.push_back(x);
        cuts.push_back(b);
        std::sort(cuts.begin(), cuts.end());
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) s += gk(f, cuts[i], cuts[i + 1]);
        return s;
    }
    double abs_moment(int k, double a_abs, double b_abs) const {
        return moment(k, a_abs, b_abs) + (k % 2 ? -1.0 : 1.0) * moment(k, -b_abs, -a_abs);
    }
    cd exponent(double z) const override {
        if (c_ == 0.0) return 0.0;
        double comp = moment(1, -1.0, 1.0);
        return c_ * (law_cf(z) - 1.0) - cd(0.0, c_ * comp * z);
    }
    double mass_above(double delta) const override {
        return c_ * (1.0 - moment(0, -delta, delta));
    }
    double small_variance(double delta) const override { return c_ * moment(2, -delta, delta); }
    double mid_mean(double delta) const override {
        if (delta >= 1.0) return 0.0;
        return c_ * (moment(1, delta, 1.0) + moment(1, -1.0, -delta));
    }
    double truncated_second_moment() const override {
        return c_ * (moment(2, -1.0, 1.0) + 1.0 - moment(0, -1.0, 1.0));
    }
    double draw(SplitMix64& rng) const {
        switch (law_.kind) {
            case JumpLaw::Kind::normal: {
                boost::random::normal_distribution<double> n(law_.p1, law_.p2);
                return n(rng);
            }
            case JumpLaw::Kind::exponential: return -std::log(rng.uniform01()) / law_.p1;
            default: return law_.p1 + (law_.p2 - law_.p1) * rng.uniform01();
        }
    }
    double sample_jump(double delta, SplitMix64& rng) const override {
        for (int tries = 0; tries < 1000000; ++tries) {
            double r = draw(rng);
            if (std::abs(r) > delta) return r;
        }
        throw NumericalError("compound_poisson: rejection sampler for |r| > delta did not terminate");
    }
    NuIntegral tail_integral(const Weight& w) const override {
        auto f = [&](double r) { return density(r) + density(-r); };
        double hi = std::max(std::abs(lo_), std::abs(hi_));
        double v = c_ * integrate_weighted(w, f, 1.0, std::max(hi, 1.0));
        return {v, true, "quadrature (light-tailed jump law)"};
    }
    std::optional<double> signed_tail_mean() const override {
        return c_ * (moment(1, 1.0, kInf) + moment(1, -kInf, -1.0));
    }
    std::optional<double> second_moment() const override { return c_ * moment(2, -kInf, kInf); }

private:
    double c_;
    JumpLaw law_;
    double lo_ = 0.0, hi_ = 0.0;
};

// ---- gamma subordinator: a r^{-1} e^{-b r} dr on r > 0 ----

class GammaMeasure final : public LevyMeasure {
public:
    GammaMeasure(double shape, double rate) : a_(shape), b_(rate) {
        require(shape > 0.0 && std::isfinite(shape), "gamma_subordinator: shape must be > 0");
        require(rate > 0.0 && std::isfinite(rate), "gamma_subordinator: rate must be > 0");
        require(std::isfinite(truncated_second_moment()), "gamma_subordinator: int min(1, r^2) nu is not finite");
    }
    std::string family() const override { return "gamma_subordinator"; }
    json to_json() const override { return {{"family", "gamma_subordinator"}, {"shape", a_}, {"rate", b_}}; }
    cd exponent(double z) const override {
        return -a_ * std::log(cd(1.0, -z / b_)) - cd(0.0, z * a_ * (1.0 - std::exp(-b_)) / b_);
    }
    double mass_above(double delta) const override { return a_ * boost::math::expint(1, b_ * delta); }
    double small_variance(double delta) const override {
        double x = b_ * delta;
        // 1 - e^{-x}(1 + x) without cancellation for small x.
        double g = x < 1e-3 ? x * x / 2.0 - x * x * x / 3.0 : 1.0 - std::exp(-x) * (1.0 + x);
        return a_ * g / (b_ * b_);
    }
    double mid_mean(double delta) const override {
        if (delta >= 1.0) return 0.0;
        return a_ * (std::exp(-b_ * delta) - std::exp(-b_)) / b_;
    }
    double truncated_second_moment() const override { return small_variance(1.0) + mass_above(1.0); }
    double sample_jump(double delta, SplitMix64& rng) const override {
        // Mixture: log-uniform proposal on (delta, 1], shifted exponential beyond.
        double inner = delta < 1.0 ? a_ * (boost::math::expint(1, b_ * delta) - boost::math::expint(1, b_)) : 0.0;
        double outer = a_ * boost::math::expint(1, b_ * std::max(delta, 1.0));
        double lo = std::max(delta, 1.0);
        for (int tries = 0; tries < 1000000; ++tries) {
            if (rng.uniform01() * (inner + outer) < inner) {
                double r = delta * std::pow(1.0 / delta, rng.uniform01());
                if (rng.uniform01() <= std::exp(-b_ * (r - delta))) return r;
            } else {
                double r = lo - std::log(rng.uniform01()) / b_;
                if (rng.uniform01() <= lo / r) return r;
            }
        }
        throw NumericalError("gamma_subordinator: jump sampler did not terminate");
    }
    NuIntegral tail_integral(const Weight& w) const override {
        auto f = [&](double r) { return a_ * std::exp(-b_ * r) / r; };
        double hi = 1.0 + 800.0 / b_;
        return {integrate_weighted(w, f, 1.0, hi), true, "quadrature (exponential tail)"};
    }
    std::optional<double> signed_tail_mean() const override { return a_ * std::exp(-b_) / b_; }
    std::optional<double> second_moment() const override { return a_ / (b_ * b_); }

private:
    double a_, b_;
};

// ---- two-sided Pareto ----

class ParetoMeasure final : public LevyMeasure {
public:
    ParetoMeasure(double theta, double s, double wp, double wm) : th_(theta), s_(s), wp_(wp), wm_(wm) {
        require(theta > 0.0 && std::isfinite(theta), "two_sided_pareto: theta must be > 0");
        require(s > 0.0 && std::isfinite(s), "two_sided_pareto: scale must be > 0");
        require(wp >= 0.0 && wm >= 0.0 && std::isfinite(wp + wm), "two_sided_pareto: weights must be >= 0");
    }
    std::string family() const override { return "two_sided_pareto"; }
    json to_json() const override {
        return {{"family", "two_sided_pareto"}, {"theta", th_}, {"scale", s_}, {"weight_plus", wp_},
                {"weight_minus", wm_}};
    }
    bool is_zero() const override { return wp_ + wm_ == 0.0; }

    // theta s^theta int_a^b r^{k-1-theta} dr, a >= s.
    double power_int(double k, double a, double b) const {
        if (!(b > a)) return 0.0;
        double e = k - th_;
        double pre = th_ * std::pow(s_, th_);
        if (std::abs(e) < 1e-14) return pre * (std::log(b) - std::log(a));
        if (std::isinf(b)) return e < 0.0 ? pre * -std::pow(a, e) / e : kInf;
        return pre * (std::pow(b, e) - std::pow(a, e)) / e;
    }
    cd side_cf_minus_one(double z) const {
        // theta int_1^inf (e^{i omega u} - 1) u^{-1-theta} du, omega = s z.
        double omega = s_ * z;
        if (omega == 0.0) return 0.0;
        double w = std::abs(omega);
        auto g = [this](double t) { return std::pow(1.0 + t, -1.0 - th_); };
        cd f = th_ * shifted_fourier(g, 1.0, w) - 1.0;
        return omega > 0 ? f : std::conj(f);
    }
    cd exponent(double z) const override {
        cd s = wp_ * side_cf_minus_one(z) + wm_ * side_cf_minus_one(-z);
        return s - cd(0.0, z * mid_mean(0.0));
    }
    double mass_above(double delta) const override {
        return (wp_ + wm_) * std::pow(s_ / std::max(s_, delta), th_);
    }
    double small_variance(double delta) const override {
        return (wp_ + wm_) * power_int(2.0, s_, std::max(s_, delta));
    }
    double mid_mean(double delta) const override {
        double m = std::max(s_, delta);
        return (wp_ - wm_) * power_int(1.0, m, 1.0);
    }
    double truncated_second_moment() const override { return small_variance(1.0) + mass_above(1.0); }
    double sample_jump(double delta, SplitMix64& rng) const override {
        double m = std::max(s_, delta);
        double sign = rng.uniform01() * (wp_ + wm_) < wp_ ? 1.0 : -1.0;
        return sign * m * std::pow(rng.uniform01(), -1.0 / th_);
    }
    NuIntegral tail_integral(const Weight& w) const override {
        const double m1 = std::max(1.0, s_), wt = wp_ + wm_;
        const double pre = wt * th_ * std::pow(s_, th_);
        if (wt == 0.0) return {0.0, true, "empty measure"};
        auto divergent = [](const std::string& why) { return NuIntegral{kInf, false, why}; };
        switch (w.kind) {
            case Weight::Kind::power:
                if (w.exponent >= th_) return divergent("analytic: power weight beta >= theta");
                return {wt * power_int(w.exponent, m1, kInf), true, "closed form"};
            case Weight::Kind::log_power: {
                double L = std::log(m1), k = w.exponent;
                double v = pre * boost::math::tgamma(k + 1.0, th_ * L) / std::pow(th_, k + 1.0);
                return {v, true, "closed form (incomplete gamma)"};
            }
            case Weight::Kind::indicator: return {mass_above(1.0), true, "closed form"};
            case Weight::Kind::table: {
                const double xm = std::max(w.xs.back(), m1);
                auto dens = [&](double r) { return pre * std::pow(r, -1.0 - th_); };
                double body = integrate_weighted(w, dens, m1, xm);
                const double wx = w(xm);
                const auto g = w.growth;
                double tail = 0.0;
                if (g.kind == TailGrowth::Kind::power) {
                    if (g.exponent >= th_) return divergent("analytic: weight grows like r^" +
                                                            std::to_string(g.exponent) + " >= r^theta");
                    tail = wx * pre * std::pow(xm, -th_) / (th_ - g.exponent);
                } else if (g.kind == TailGrowth::Kind::log_power) {
                    double L = std::log(xm), k = g.exponent;
                    tail = L > 0.0 ? wx / std::pow(L, k) * pre * boost::math::tgamma(k + 1.0, th_ * L) /
                                         std::pow(th_, k + 1.0)
                                   : 0.0;
                } else {
                    tail = wx * pre * std::pow(xm, -th_) / th_;
                }
                return {body + tail, true, "table quadrature + analytic tail"};
            }
        }
        return {};
    }
    std::optional<double> signed_tail_mean() const override {
        if (th_ <= 1.0) return std::nullopt;
        return (wp_ - wm_) * power_int(1.0, std::max(1.0, s_), kInf);
    }
    std::optional<double> second_moment() const override {
        if (th_ <= 2.0) return std::nullopt;
        return (wp_ + wm_) * power_int(2.0, s_, kInf);
    }

private:
    double th_, s_, wp_, wm_;
};

// ---- log-Pareto: c kappa / (r log(r)^{1+kappa}) on r > e ----

class LogParetoMeasure final : public LevyMeasure {
public:
    LogParetoMeasure(double kappa, double mass) : k_(kappa), c_(mass) {
        require(kappa > 0.0 && std::isfinite(kappa), "log_pareto: kappa must be > 0");
        require(mass >= 0.0 && std::isfinite(mass), "log_pareto: mass must be >= 0");
    }
    std::string family() const override { return "log_pareto"; }
    json to_json() const override { return {{"family", "log_pareto"}, {"kappa", k_}, {"mass", c_}}; }
    bool is_zero() const override { return c_ == 0.0; }
    double dens(double r) const { return c_ * k_ / (r * std::pow(std::log(r), 1.0 + k_)); }
    cd exponent(double z) const override {
        if (z == 0.0 || c_ == 0.0) return 0.0;
        const double e = std::numbers::e;
        auto g = [this, e](double t) { return k_ / ((e + t) * std::pow(std::log(e + t), 1.0 + k_)); };
        cd f = shifted_fourier(g, e, std::abs(z)) - 1.0;
        return c_ * (z > 0 ? f : std::conj(f));
    }
    double mass_above(double delta) const override { return delta < std::numbers::e ? c_ : c_ * std::pow(std::log(delta), -k_); }
    double small_variance(double delta) const override {
        if (delta <= std::numbers::e) return 0.0;
        return gk([this](double r) { return r * r * dens(r); }, std::numbers::e, delta);
    }
    double mid_mean(double) const override { return 0.0; }
    double truncated_second_moment() const override { return c_; }
    double sample_jump(double delta, SplitMix64& rng) const override {
        double lo = std::max(1.0, std::log(std::max(delta, std::numbers::e)));
        double v = lo * std::pow(rng.uniform01(), -1.0 / k_);
        double r = std::exp(v);
        if (!std::isfinite(r)) throw NumericalError("log_pareto: sampled jump overflows double precision");
        return r;
    }
    NuIntegral tail_integral(const Weight& w) const override {
        if (c_ == 0.0) return {0.0, true, "empty measure"};
        auto divergent = [](const std::string& why) { return NuIntegral{kInf, false, why}; };
        auto log_moment = [&](double k) -> NuIntegral {
            if (k >= k_) return divergent("analytic: log^k weight with k >= kappa");
            return {c_ * k_ / (k_ - k), true, "closed form"};
        };
        switch (w.kind) {
            case Weight::Kind::power:
                if (w.exponent > 0.0) return divergent("analytic: any power weight diverges");
                return {c_, true, "closed form"};
            case Weight::Kind::log_power: return log_moment(w.exponent);
            case Weight::Kind::indicator: return {c_, true, "closed form"};
            case Weight::Kind::table: {
                const auto g = w.growth;
                if (g.kind == TailGrowth::Kind::power && g.exponent > 0.0)
                    return divergent("analytic: weight grows polynomially");
                if (g.kind == TailGrowth::Kind::log_power && g.exponent >= k_)
                    return divergent("analytic: weight grows like log^k with k >= kappa");
                const double e = std::numbers::e;
                const double xm = std::max(w.xs.back(), e);
                // u = log r turns the density into c kappa u^{-1-kappa} du.
                double body = 0.0;
                {
                    std::vector<double> cuts{1.0};
                    for (double x : w.xs)
                        if (x > e && x < xm) cuts.push_back(std::log(x));
                    cuts.push_back(std::log(xm));
                    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
                        body += gk([&](double u) { return w(std::exp(u)) * c_ * k_ * std::pow(u, -1.0 - k_); },
                                   cuts[i], cuts[i + 1]);
                }
                const double L = std::log(xm), wx = w(xm);
                double k = g.kind == TailGrowth::Kind::log_power ? g.exponent : 0.0;
                double tail = wx / std::pow(L, k) * c_ * k_ * std::pow(L, k - k_) / (k_ - k);
                return {body + tail, true, "table quadrature + analytic tail"};
            }
        }
        return {};
    }
    std::optional<double> signed_tail_mean() const override {
        if (c_ == 0.0) return 0.0;
        return std::nullopt;
    }
    std::optional<double> second_moment() const override {
        if (c_ == 0.0) return 0.0;
        return std::nullopt;
    }

private:
    double k_, c_;
};

// ---- tabulated piecewise-linear density ----

class TabulatedMeasure final : public LevyMeasure {
public:
    TabulatedMeasure(std::vector<double> r, std::vector<double> f, double lo, double hi)
        : r_(std::move(r)), f_(std::move(f)), lo_(lo), hi_(hi) {
        require(r_.size() >= 2 && r_.size() == f_.size(), "tabulated: need >= 2 nodes with matching densities");
        for (std::size_t i = 0; i < r_.size(); ++i) {
            require(std::isfinite(r_[i]) && std::isfinite(f_[i]) && f_[i] >= 0.0,
                    "tabulated: nodes and densities must be finite, densities >= 0");
            if (i) require(r_[i] > r_[i - 1], "tabulated: nodes must be strictly increasing");
        }
        require(lo <= hi, "tabulated: support lower bound exceeds upper bound");
    }
    std::string family() const override { return "tabulated"; }
    json to_json() const override {
        return {{"family", "tabulated"}, {"r", r_}, {"density", f_}, {"support", {lo_, hi_}}};
    }
    void check_support() const {
        if (lo_ < r_.front() || hi_ > r_.back())
            throw ConfigError("tabulated: declared support [" + std::to_string(lo_) + ", " + std::to_string(hi_) +
                              "] extends beyond the table [" + std::to_string(r_.front()) + ", " +
                              std::to_string(r_.back()) + "]");
    }
    double dens(double x) const {
        if (x < r_.front() || x > r_.back()) return 0.0;
        auto it = std::upper_bound(r_.begin(), r_.end(), x);
        if (it == r_.end()) return f_.back();
        std::size_t i = static_cast<std::size_t>(it - r_.begin());
        double t = (x - r_[i - 1]) / (r_[i] - r_[i - 1]);
        return f_[i - 1] + t * (f_[i] - f_[i - 1]);
    }
    // int_a^b g(r) density(r) dr split at the nodes.
    double integrate(const std::function<double(double)>& g, double a, double b) const {
        a = std::max(a, r_.front());
        b = std::min(b, r_.back());
        if (!(b > a)) return 0.0;
        double s = 0.0;
        double x0 = a;
        for (std::size_t i = 1; i < r_.size() && x0 < b; ++i) {
            if (r_[i] <= x0) continue;
            double x1 = std::min(r_[i], b);
            s += boost::math::quadrature::gauss<double, 15>::integrate(
                [&](double x) { return g(x) * dens(x); }, x0, x1);
            x0 = x1;
        }
        return s;
    }
    double sym(const std::function<double(double)>& g, double a, double b) const {
        return integrate(g, a, b) + integrate(g, -b, -a);
    }
    cd exponent(double z) const override {
        check_support();
        std::vector<double> cuts(r_);
        for (double c : {-1.0, 1.0})
            if (c > r_.front() && c < r_.back()) cuts.push_back(c);
        std::sort(cuts.begin(), cuts.end());
        auto re = [&](double r) { return (std::cos(r * z) - 1.0) * dens(r); };
        auto im = [&](double r) { return (std::sin(r * z) - (std::abs(r) <= 1.0 ? r * z : 0.0)) * dens(r); };
        cd s = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) s += cd(gk(re, cuts[i], cuts[i + 1]), gk(im, cuts[i], cuts[i + 1]));
        return s;
    }
    double mass_above(double delta) const override {
        check_support();
        return sym([](double) { return 1.0; }, delta, kInf);
    }
    double small_variance(double delta) const override {
        return integrate([](double r) { return r * r; }, -delta, delta);
    }
    double mid_mean(double delta) const override {
        if (delta >= 1.0) return 0.0;
        return integrate([](double r) { return r; }, delta, 1.0) + integrate([](double r) { return r; }, -1.0, -delta);
    }
    double truncated_second_moment() const override {
        return small_variance(1.0) + sym([](double) { return 1.0; }, 1.0, kInf);
    }
    double sample_jump(double delta, SplitMix64& rng) const override {
        // Pick a segment by mass, then rejection within it against its max density.
        std::vector<double> a, b, m;
        for (std::size_t i = 1; i < r_.size(); ++i) {
            for (auto [x0, x1] : {std::pair{std::max(r_[i - 1], delta), r_[i]},
                                  std::pair{r_[i - 1], std::min(r_[i], -delta)}}) {
                if (x1 > x0) {
                    double mass = integrate([](double) { return 1.0; }, x0, x1);
                    if (mass > 0.0) {
                        a.push_back(x0);
                        b.push_back(x1);
                        m.push_back(mass);
                    }
                }
            }
        }
        double total = 0.0;
        for (double v : m) total += v;
        if (total <= 0.0) throw NumericalError("tabulated: no mass above delta");
        double u = rng.uniform01() * total;
        std::size_t k = 0;
        while (k + 1 < m.size() && u > m[k]) u -= m[k++];
        double fmax = std::max(dens(a[k]), dens(b[k]));
        for (int tries = 0; tries < 1000000; ++tries) {
            double x = a[k] + (b[k] - a[k]) * rng.uniform01();
            if (rng.uniform01() * fmax <= dens(x)) return x;
        }
        throw NumericalError("tabulated: jump sampler did not terminate");
    }
    NuIntegral tail_integral(const Weight& w) const override {
        check_support();
        auto wf = [&](double r) { return w(std::abs(r)); };
        return {sym(wf, 1.0, kInf), true, "quadrature (compact table)"};
    }
    std::optional<double> signed_tail_mean() const override {
        return integrate([](double r) { return r; }, 1.0, kInf) + integrate([](double r) { return r; }, -kInf, -1.0);
    }
    std::optional<double> second_moment() const override {
        return integrate([](double r) { return r * r; }, -kInf, kInf);
    }

private:
    std::vector<double> r_, f_;
    double lo_, hi_;
};

double get(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "' in " + j.dump());
    if (!j.at(key).is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
    return j.at(key).get<double>();
}

double get_or(const json& j, const char* key, double dflt) { return j.contains(key) ? get(j, key) : dflt; }

}  // namespace

// ---- weights ----

std::string TailGrowth::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::bounded: os << "bounded"; break;
        case Kind::power: os << "power r^" << exponent; break;
        case Kind::log_power: os << "log(r)^" << exponent; break;
    }
    return os.str();
}

Weight Weight::table(std::vector<double> xs, std::vector<double> ws, TailGrowth growth) {
    if (xs.empty() || xs.size() != ws.size()) throw ArgumentError("weight table: empty or mismatched");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || xs[i] < 1.0) throw ArgumentError("weight table: nodes must be >= 1");
        if (i && xs[i] <= xs[i - 1]) throw ArgumentError("weight table: nodes must increase");
    }
    Weight w;
    w.kind = Kind::table;
    w.xs = std::move(xs);
    w.ws = std::move(ws);
    w.growth = growth;
    return w;
}

double Weight::operator()(double x) const {
    switch (kind) {
        case Kind::power: return std::pow(x, exponent);
        case Kind::log_power: return x <= 1.0 ? 0.0 : std::pow(std::log(x), exponent);
        case Kind::indicator: return 1.0;
        case Kind::table: break;
    }
    if (x <= xs.front()) return ws.front();
    if (x >= xs.back()) {
        double w0 = ws.back(), x0 = xs.back();
        switch (growth.kind) {
            case TailGrowth::Kind::bounded: return w0;
            case TailGrowth::Kind::power: return w0 * std::pow(x / x0, growth.exponent);
            case TailGrowth::Kind::log_power:
                return x0 > 1.0 ? w0 * std::pow(std::log(x) / std::log(x0), growth.exponent) : w0;
        }
    }
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t i = static_cast<std::size_t>(it - xs.begin());
    double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ws[i - 1] + t * (ws[i] - ws[i - 1]);
}

TailGrowth Weight::asymptotic() const {
    switch (kind) {
        case Kind::power: return TailGrowth::power(exponent);
        case Kind::log_power: return TailGrowth::log_power(exponent);
        case Kind::indicator: return TailGrowth::bounded();
        default: return growth;
    }
}

// ---- rng ----

namespace {
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace

SplitMix64::result_type SplitMix64::operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
}

double SplitMix64::uniform01() {
    // 53 random bits, offset by half an ulp so 0 and 1 are excluded.
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

SplitMix64 cell_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t cell) {
    std::uint64_t z = mix64(seed + 0x632be59bd9b4e019ULL);
    z = mix64(z ^ mix64(stream + 0x8cb92ba72f3d8dd7ULL));
    z = mix64(z ^ mix64(cell + 0x2545f4914f6cdd1dULL));
    return SplitMix64(z);
}

// ---- factories ----

LevyMeasurePtr make_zero_measure() { return std::make_shared<ZeroMeasure>(); }
LevyMeasurePtr make_atomic(std::vector<std::pair<double, double>> atoms) {
    return std::make_shared<AtomicMeasure>(std::move(atoms));
}
LevyMeasurePtr make_compound_poisson(double intensity, JumpLaw law) {
    return std::make_shared<CompoundPoissonMeasure>(intensity, law);
}
LevyMeasurePtr make_gamma(double shape, double rate) { return std::make_shared<GammaMeasure>(shape, rate); }
LevyMeasurePtr make_pareto(double theta, double scale, double wp, double wm) {
    return std::make_shared<ParetoMeasure>(theta, scale, wp, wm);
}
LevyMeasurePtr make_log_pareto(double kappa, double mass) { return std::make_shared<LogParetoMeasure>(kappa, mass); }
LevyMeasurePtr make_tabulated(std::vector<double> r, std::vector<double> density, double lo, double hi) {
    return std::make_shared<TabulatedMeasure>(std::move(r), std::move(density), lo, hi);
}

LevyMeasurePtr measure_from_json(const json& j) {
    if (j.is_null()) return make_zero_measure();
    if (!j.is_object() || !j.contains("family") || !j.at("family").is_string())
        throw ConfigError("nu: expected an object with a string 'family'");
    const std::string fam = j.at("family");
    if (fam == "zero" || fam == "none") return make_zero_measure();
    if (fam == "finite_atomic") {
        std::vector<std::pair<double, double>> atoms;
        for (const auto& a : j.at("atoms")) {
            if (!a.is_array() || a.size() != 2) throw ConfigError("finite_atomic: atoms are [r, mass] pairs");
            atoms.emplace_back(a[0].get<double>(), a[1].get<double>());
        }
        return make_atomic(std::move(atoms));
    }
    if (fam == "compound_poisson") {
        const json& law = j.at("jump");
        const std::string name = law.at("law");
        JumpLaw jl;
        if (name == "normal")
            jl = {JumpLaw::Kind::normal, get(law, "mean"), get(law, "sd")};
        else if (name == "exponential")
            jl = {JumpLaw::Kind::exponential, get(law, "rate"), 0.0};
        else if (name == "uniform")
            jl = {JumpLaw::Kind::uniform, get(law, "lo"), get(law, "hi")};
        else
            throw ConfigError("compound_poisson: unknown jump law '" + name + "'");
        return make_compound_poisson(get(j, "intensity"), jl);
    }
    if (fam == "gamma_subordinator") return make_gamma(get(j, "shape"), get(j, "rate"));
    if (fam == "two_sided_pareto")
        return make_pareto(get(j, "theta"), get_or(j, "scale", 1.0), get_or(j, "weight_plus", 1.0),
                           get_or(j, "weight_minus", 0.0));
    if (fam == "log_pareto") return make_log_pareto(get(j, "kappa"), get_or(j, "mass", 1.0));
    if (fam == "tabulated") {
        auto r = j.at("r").get<std::vector<double>>();
        auto f = j.at("density").get<std::vector<double>>();
        double lo = r.empty() ? 0.0 : r.front(), hi = r.empty() ? 0.0 : r.back();
        if (j.contains("support")) {
            auto s = j.at("support").get<std::vector<double>>();
            if (s.size() != 2) throw ConfigError("tabulated: support is [lo, hi]");
            lo = s[0];
            hi = s[1];
        }
        return make_tabulated(std::move(r), std::move(f), lo, hi);
    }
    throw ConfigError("nu: unknown family '" + fam + "'");
}

// ---- triplet ----

void LevyTriplet::validate() const {
    if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("triplet: a must be finite and >= 0");
    if (!std::isfinite(gamma)) throw ConfigError("triplet: gamma must be finite");
    if (!nu) throw ConfigError("triplet: missing Levy measure");
}

json LevyTriplet::to_json() const { return {{"a", a}, {"gamma", gamma}, {"nu", nu->to_json()}}; }

LevyTriplet LevyTriplet::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("triplet: expected an object");
    LevyTriplet t;
    t.a = get_or(j, "a", 0.0);
    t.gamma = get_or(j, "gamma", 0.0);
    t.nu = j.contains("nu") ? measure_from_json(j.at("nu")) : make_zero_measure();
    t.validate();
    return t;
}

cd char_exponent(const LevyTriplet& t, double z) {
    t.validate();
    if (z == 0.0) return 0.0;
    cd jump = t.nu->exponent(z);
    return cd(-0.5 * t.a * z * z, t.gamma * z) + jump;
}

NuIntegral nu_integral(const LevyMeasure& nu, const Weight& w) { return nu.tail_integral(w); }

CellMoments cell_moments(const LevyTriplet& t, double v) {
    t.validate();
    CellMoments m;
    if (auto tm = t.nu->signed_tail_mean()) m.mean = v * (t.gamma + *tm);
    if (auto sm = t.nu->second_moment()) m.variance = v * (t.a + *sm);
    return m;
}

double small_jump_cf_bound(const LevyTriplet& t, double delta, double v, double zmax) {
    return v * zmax * zmax * zmax * delta * t.nu->small_variance(delta) / 6.0;
}

CellNoise simulate_cells(const LevyTriplet& t, const GridSpec& grid, double delta, std::uint64_t seed,
                         std::uint64_t stream, const SimulationBudget& budget) {
    t.validate();
    grid.validate();
    if (!(delta > 0.0 && delta <= 1.0)) throw ArgumentError("simulate_cells: delta must lie in (0, 1]");
    const double v = grid.cell_volume();
    if (!(v > 0.0)) throw ArgumentError("simulate_cells: cell volume must be positive");

    const double rate = t.nu->mass_above(delta);
    if (!std::isfinite(rate)) throw ConfigError("simulate_cells: nu(|r| > delta) is not finite");
    const double lam = v * rate;
    if (lam > budget.max_mean_jumps_per_cell)
        throw ResourceError("simulate_cells: mean jump count per cell " + std::to_string(lam) +
                            " exceeds the budget " + std::to_string(budget.max_mean_jumps_per_cell) +
                            "; raise delta or the budget");
    const double mean = (t.gamma - t.nu->mid_mean(delta)) * v;
    const double var = (t.a + t.nu->small_variance(delta)) * v;
    const double sd = std::sqrt(var);

    CellNoise out{grid, std::vector<double>(grid.size(), 0.0), seed, stream, delta};
    for (std::size_t c = 0; c < out.values.size(); ++c) {
        SplitMix64 rng = cell_rng(seed, stream, c);
        double x = mean;
        if (sd > 0.0) {
            boost::random::normal_distribution<double> n(0.0, sd);
            x += n(rng);
        }
        if (lam > 0.0) {
            boost::random::poisson_distribution<long, double> pois(lam);
            long k = pois(rng);
            for (long i = 0; i < k; ++i) x += t.nu->sample_jump(delta, rng);
        }
        if (!std::isfinite(x)) throw NumericalError("simulate_cells: non-finite cell value");
        out.values[c] = x;
    }
    return out;
}

}  // namespace lcarma
