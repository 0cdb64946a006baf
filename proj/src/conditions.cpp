#include "lcarma/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "lcarma/errors.hpp"
#include "lcarma/symbols.hpp"

namespace lcarma {

using json = nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

// int_{|r|>1} w dnu, where a missing weight is +infinity for every |r| > 1.
NuIntegral integrate(const LevyMeasure& nu, const std::optional<Weight>& w) {
    if (w) return nu_integral(nu, *w);
    auto mass = nu_integral(nu, Weight::indicator());
    if (mass.finite && mass.value == 0.0) return {0.0, true, "no mass beyond |r| = 1"};
    return {kInf, false, "weight infinite for every |r| > 1"};
}

// Mean of the noise per unit volume, when it exists.
std::optional<double> noise_mean(const LevyTriplet& t) { return cell_moments(t, 1.0).mean; }

std::string radius_label(double R) { return "R=" + fmt(R); }

}  // namespace

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::holds: return "holds";
        case Verdict::fails: return "fails";
        case Verdict::not_applicable: return "not_applicable";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

json ConditionEntry::to_json() const {
    json v = json::object();
    for (const auto& [k, x] : values) v[k] = std::isfinite(x) ? json(x) : json(x > 0 ? "inf" : "nan");
    return {{"name", name}, {"verdict", to_string(verdict)}, {"values", v},
            {"tolerance", tolerance}, {"tail", tail}, {"detail", detail}};
}

void ConditionReport::add(ConditionEntry e) {
    if (find(e.name)) throw ArgumentError("condition report: '" + e.name + "' already present");
    entries.push_back(std::move(e));
}

const ConditionEntry* ConditionReport::find(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

std::string ConditionReport::summary() const {
    for (const char* s : {"sufficient_T1", "sufficient_T38", "mild", "elliptic"})
        if (auto e = find(s); e && e->verdict == Verdict::holds) return "exists";
    if (auto e = find("necessary"); e && e->verdict == Verdict::fails) return "does_not_exist";
    return "inconclusive";
}

json ConditionReport::to_json() const {
    json a = json::array();
    for (const auto& e : entries) a.push_back(e.to_json());
    return {{"conditions", a}, {"summary", summary()}};
}

std::string ConditionReport::table() const {
    std::ostringstream os;
    os << std::left << std::setw(16) << "condition" << std::setw(16) << "verdict" << "detail\n";
    for (const auto& e : entries) {
        os << std::setw(16) << e.name << std::setw(16) << to_string(e.verdict) << e.detail << "\n";
        for (const auto& [k, v] : e.values) os << std::setw(32) << "" << k << " = " << fmt(v) << "\n";
    }
    os << "summary: " << summary() << "\n";
    return os.str();
}

std::vector<double> default_radii() { return {0.5, 1.0, 2.0}; }

std::vector<KernelFunctionals> functionals_at(const KernelGrid& K, const std::vector<double>& radii) {
    if (radii.empty()) throw ArgumentError("conditions: empty radius list");
    std::vector<KernelFunctionals> F;
    for (double R : radii) F.push_back(kernel_functionals(K, R));
    return F;
}

// ---- sufficient condition via h_R ----

namespace {

// Cell sums of |G| at spacing h and 2h (even lags only); relative difference.
double refinement_gap(const KernelGrid& K) {
    const GridSpec& g = K.grid;
    std::vector<std::size_t> idx;
    double fine = 0.0, coarse = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double a = std::abs(K.values[i]);
        fine += a;
        g.unravel(i, idx);
        bool even = true;
        for (std::size_t j = 0; j < g.dim(); ++j) {
            const long lag = static_cast<long>(idx[j]) - static_cast<long>(center_index(g.counts[j]));
            even = even && lag % 2 == 0;
        }
        if (even) coarse += a;
    }
    fine *= g.cell_volume();
    coarse *= g.cell_volume() * std::pow(2.0, double(g.dim()));
    return fine > 0.0 ? std::abs(fine - coarse) / fine : 0.0;
}

}  // namespace

ConditionEntry check_sufficient_T1(const KernelGrid& K, const LevyTriplet& t, const std::vector<double>& radii) {
    if (!K.envelope.declared())
        return {"sufficient_T1", Verdict::inconclusive, {}, 0.0, "none", "kernel has no tail envelope"};
    return check_sufficient_T1(K, functionals_at(K, radii), t);
}

ConditionEntry check_sufficient_T1(const KernelGrid& K, const std::vector<KernelFunctionals>& F, const LevyTriplet& t) {
    ConditionEntry e{"sufficient_T1", Verdict::holds, {}, 0.1, "", ""};
    if (!K.envelope.declared()) {
        e.verdict = Verdict::inconclusive;
        e.detail = "kernel has no tail envelope";
        return e;
    }
    const double beyond = K.envelope.mass_beyond(K.grid.inscribed_radius(), K.grid.dim());
    e.values.emplace_back("envelope_mass_beyond_grid", beyond);
    if (!std::isfinite(beyond)) {
        e.verdict = Verdict::not_applicable;
        e.detail = "G is not integrable (envelope " + K.envelope.describe() + ")";
        return e;
    }
    const double gap = refinement_gap(K);
    e.values.emplace_back("l1_refinement_gap", gap);
    if (gap > e.tolerance) {
        e.verdict = Verdict::inconclusive;
        e.detail = "cell sums of |G| at spacing h and 2h differ by " + fmt(100 * gap) + "%";
        return e;
    }
    std::vector<std::string> bad;
    for (const auto& f : F) {
        auto r = integrate(*t.nu, f.h_weight());
        e.values.emplace_back(radius_label(f.radius()) + " int h_R dnu", r.finite ? r.value : kInf);
        if (!r.finite) bad.push_back(fmt(f.radius()));
        e.tail = f.tail_note();
    }
    if (!bad.empty()) {
        e.verdict = Verdict::fails;
        std::string list;
        for (const auto& b : bad) list += (list.empty() ? "" : ", ") + b;
        e.detail = "int h_R(|r|) nu(dr) over |r| > 1 is infinite for R = " + list;
    } else {
        e.detail = "int h_R(|r|) nu(dr) over |r| > 1 is finite at every tested R";
    }
    return e;
}

// ---- sufficient condition for zero-mean noise ----

ConditionEntry check_sufficient_T38(const KernelGrid& K, const LevyTriplet& t, const std::vector<double>& radii) {
    if (!K.envelope.declared())
        return {"sufficient_T38", Verdict::inconclusive, {}, 0.0, "none", "kernel has no tail envelope"};
    return check_sufficient_T38(functionals_at(K, radii), t);
}

ConditionEntry check_sufficient_T38(const std::vector<KernelFunctionals>& F, const LevyTriplet& t) {
    ConditionEntry e{"sufficient_T38", Verdict::holds, {}, 0.0, "", ""};
    const auto mean = noise_mean(t);
    double scale = 1.0 + std::abs(t.gamma);
    if (auto tm = t.nu->signed_tail_mean()) scale += std::abs(*tm);
    e.tolerance = 1e-10 * scale;
    if (!mean) {
        e.verdict = Verdict::not_applicable;
        e.detail = "first moment of the noise is undefined";
        return e;
    }
    e.values.emplace_back("mean", *mean);
    if (std::abs(*mean) > e.tolerance) {
        e.verdict = Verdict::not_applicable;
        e.detail = "first moment of the noise is " + fmt(*mean) + ", not zero";
        return e;
    }
    std::vector<std::string> bad;
    for (const auto& f : F) {
        auto u = integrate(*t.nu, f.upper_weight());
        auto l = integrate(*t.nu, f.lower_second_weight());
        e.values.emplace_back(radius_label(f.radius()) + " upper", u.finite ? u.value : kInf);
        e.values.emplace_back(radius_label(f.radius()) + " lower", l.finite ? l.value : kInf);
        if (!u.finite || !l.finite) bad.push_back(fmt(f.radius()));
        e.tail = f.tail_note();
    }
    if (!bad.empty()) {
        e.verdict = Verdict::fails;
        std::string list;
        for (const auto& b : bad) list += (list.empty() ? "" : ", ") + b;
        e.detail = "an integral over |r| > 1 is infinite for R = " + list;
    } else {
        e.detail = "zero mean and both integrals finite at every tested R";
    }
    return e;
}

// ---- necessary condition ----

ConditionEntry check_necessary(const KernelGrid& K, const LevyTriplet& t, const std::vector<double>& radii) {
    if (!K.envelope.declared())
        return {"necessary", Verdict::inconclusive, {}, 0.0, "none", "kernel has no tail envelope"};
    return check_necessary(K, functionals_at(K, radii), t);
}

ConditionEntry check_necessary(const KernelGrid& K, const std::vector<KernelFunctionals>& F, const LevyTriplet& t) {
    ConditionEntry e{"necessary", Verdict::holds, {}, 1e-12, "", ""};
    double lo = 0.0, hi = 0.0;
    for (double v : K.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double tol = e.tolerance * std::max(hi, -lo);
    if (lo < -tol && hi > tol) {
        e.verdict = Verdict::not_applicable;
        e.detail = "kernel changes sign";
        return e;
    }
    std::vector<std::string> bad;
    for (const auto& f : F) {
        auto r = integrate(*t.nu, f.distribution_weight());
        e.values.emplace_back(radius_label(f.radius()) + " int d(1/|r|) dnu", r.finite ? r.value : kInf);
        if (!r.finite) bad.push_back(fmt(f.radius()));
        e.tail = f.tail_note();
    }
    if (!bad.empty()) {
        e.verdict = Verdict::fails;
        e.detail = "int d_{G_R}(1/|r|) nu(dr) is infinite: no generalized process exists";
    } else {
        e.detail = "necessary condition holds at every tested R";
    }
    return e;
}

// ---- mild solutions ----

ConditionEntry check_mild(const MultiPolynomial& p, const MultiPolynomial& q, double epsilon, const LevyTriplet& t) {
    ConditionEntry e{"mild", Verdict::holds, {}, 0.01, "analytic in the strip; nu tail by family", ""};
    const std::size_t d = p.dim();
    const int res = d == 1 ? 61 : d == 2 ? 41 : 15;
    auto strip = check_strip(p, q, epsilon, 4.0, res);
    e.values.emplace_back("strip_min_abs_p", strip.min_abs_p);
    if (strip.verdict != StripVerdict::holds_on_box) {
        e.verdict = strip.verdict == StripVerdict::fails ? Verdict::fails : Verdict::inconclusive;
        e.detail = "strip check " + to_string(strip.verdict) + " for epsilon = " + fmt(epsilon);
        return e;
    }
    auto l2 = l2_strip_sup(p, q, epsilon);
    e.values.emplace_back("l2_strip_sup", l2.estimate);
    auto lm = nu_integral(*t.nu, Weight::log_power(double(d)));
    e.values.emplace_back("log_moment", lm.finite ? lm.value : kInf);
    if (!l2.converged) {
        e.verdict = Verdict::fails;
        e.detail = "sup over the strip of ||q/p||_L2 does not converge";
    } else if (!lm.finite) {
        e.verdict = Verdict::fails;
        e.detail = "int log(|r|)^d nu(dr) over |r| > 1 is infinite";
    } else {
        e.detail = "strip L2 bound and log^d moment both finite";
    }
    return e;
}

// ---- elliptic operators ----

ConditionEntry check_elliptic(const MultiPolynomial& p, const LevyTriplet& t, double epsilon) {
    if (p.is_zero() || !p.is_homogeneous()) throw ArgumentError("check_elliptic: p must be homogeneous");
    const std::size_t d = p.dim();
    const int m = p.degree();
    double pmin = kInf;
    for (const auto& u : sphere_directions(d)) pmin = std::min(pmin, std::abs(p.symbol(u.data())));
    if (!(pmin > root_tolerance(p)))
        throw ArgumentError("check_elliptic: p vanishes on the unit sphere (not elliptic)");

    ConditionEntry e{"elliptic", Verdict::holds, {}, epsilon, "analytic by family", ""};
    e.values.emplace_back("d", double(d));
    e.values.emplace_back("m", double(m));
    e.values.emplace_back("sphere_min_abs_p", pmin);
    if (!(double(d) > 2.0 * m)) {
        e.verdict = Verdict::fails;
        e.detail = "needs d > 2m";
        return e;
    }
    const double beta = double(d) / double(int(d) - m) + epsilon;
    e.values.emplace_back("moment_exponent", beta);
    auto mom = nu_integral(*t.nu, Weight::power(beta));
    e.values.emplace_back("moment", mom.finite ? mom.value : kInf);
    if (!mom.finite) {
        e.verdict = Verdict::fails;
        e.detail = "int |r|^" + fmt(beta) + " nu(dr) over |r| > 1 is infinite";
        return e;
    }
    const auto mean = noise_mean(t);
    e.values.emplace_back("mean", mean ? *mean : std::numeric_limits<double>::quiet_NaN());
    double scale = 1.0 + std::abs(t.gamma);
    if (auto tm = t.nu->signed_tail_mean()) scale += std::abs(*tm);
    if (!mean || std::abs(*mean) > 1e-10 * scale) {
        e.verdict = Verdict::fails;
        e.detail = "first moment of the noise is not zero";
        return e;
    }
    e.detail = "d > 2m, moment finite, zero mean";
    return e;
}

}  // namespace lcarma
