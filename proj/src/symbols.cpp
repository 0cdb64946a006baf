#include "lcarma/symbols.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <memory>

#include "lcarma/errors.hpp"

namespace lcarma {

std::vector<cplx> operator_multiplier(const MultiPolynomial& P, const GridSpec& g, bool adjoint) {
    if (P.dim() != g.dim()) throw ArgumentError("operator: polynomial and grid dimensions differ");
    const MultiPolynomial Q = adjoint ? P.adjoint() : P;
    return hermitian_symbol(g, [&](const double* xi) { return Q.symbol(xi); });
}

namespace {

void check_padding(const GridFunction& f, std::size_t pad) {
    const GridSpec& g = f.grid;
    double fmax = 0.0;
    for (double v : f.values) fmax = std::max(fmax, std::abs(v));
    if (fmax == 0.0) return;
    const double tol = 1e-15 * fmax;
    std::vector<std::size_t> idx;
    for (std::size_t flat = 0; flat < g.size(); ++flat) {
        if (std::abs(f.values[flat]) <= tol) continue;
        g.unravel(flat, idx);
        for (std::size_t j = 0; j < g.dim(); ++j) {
            if (idx[j] < pad || idx[j] + pad >= g.counts[j])
                throw PreconditionError("operator: support of f reaches within " + std::to_string(pad) +
                                        " cells of the grid boundary");
        }
    }
}

}  // namespace

GridFunction apply_operator(const MultiPolynomial& P, const GridFunction& f, bool adjoint,
                            std::size_t pad_cells, const Fft* fft) {
    f.grid.validate();
    if (f.values.size() != f.grid.size()) throw ArgumentError("operator: values do not match grid");
    if (P.dim() != f.grid.dim()) throw ArgumentError("operator: polynomial and grid dimensions differ");
    check_padding(f, pad_cells);
    std::unique_ptr<Fft> own;
    if (!fft) {
        own = std::make_unique<Fft>(f.grid.counts);
        fft = own.get();
    }
    auto m = operator_multiplier(P, f.grid, adjoint);
    return {f.grid, apply_multiplier(*fft, m, f.values)};
}

double root_tolerance(const MultiPolynomial& p) { return 1e-9 * (1.0 + p.coefficient_norm()); }

std::string to_string(StripVerdict v) {
    switch (v) {
        case StripVerdict::holds_on_box: return "holds_on_box";
        case StripVerdict::fails: return "fails";
        default: return "inconclusive";
    }
}

namespace {

// eta = 0 followed by spheres of radius eps/4, eps/2, 3eps/4, eps.
std::vector<std::vector<double>> strip_offsets(std::size_t d, double eps) {
    std::vector<std::vector<double>> etas{std::vector<double>(d, 0.0)};
    auto dirs = sphere_directions(d, 16);
    for (double frac : {0.25, 0.5, 0.75, 1.0}) {
        for (const auto& u : dirs) {
            std::vector<double> e(d);
            for (std::size_t j = 0; j < d; ++j) e[j] = frac * eps * u[j];
            etas.push_back(std::move(e));
        }
    }
    return etas;
}

}  // namespace

StripReport check_strip(const MultiPolynomial& p, const MultiPolynomial& q, double epsilon,
                        double box_halfwidth, int resolution) {
    if (p.is_zero()) throw ArgumentError("strip check: p is the zero polynomial");
    if (!q.is_zero() && q.dim() != p.dim()) throw ArgumentError("strip check: p and q dimensions differ");
    if (!(epsilon > 0.0) || !(box_halfwidth > 0.0) || resolution < 2)
        throw ArgumentError("strip check: need epsilon > 0, box_halfwidth > 0, resolution >= 2");

    const std::size_t d = p.dim();
    StripReport rep;
    rep.epsilon_tested = epsilon;
    rep.box_halfwidth = box_halfwidth;
    rep.grid_resolution = resolution;
    rep.tolerance = root_tolerance(p);

    const auto etas = strip_offsets(d, epsilon);
    const auto n = static_cast<std::size_t>(resolution);
    std::vector<double> axis(n);
    for (std::size_t k = 0; k < n; ++k)
        axis[k] = -box_halfwidth + 2.0 * box_halfwidth * static_cast<double>(k) / static_cast<double>(n - 1);

    double best = std::numeric_limits<double>::infinity();
    bool best_on_boundary = false;
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> xi(d);
    std::size_t total = 1;
    for (std::size_t j = 0; j < d; ++j) total *= n;
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t r = flat;
        bool boundary = false;
        for (std::size_t j = d; j-- > 0;) {
            idx[j] = r % n;
            r /= n;
            xi[j] = axis[idx[j]];
            boundary = boundary || idx[j] == 0 || idx[j] == n - 1;
        }
        for (const auto& eta : etas) {
            double v = std::abs(p.symbol(xi.data(), eta.data()));
            if (v < best * (1.0 - 1e-12)) {
                best = v;
                best_on_boundary = boundary;
            } else if (v <= best * (1.0 + 1e-9)) {
                best_on_boundary = best_on_boundary || boundary;
            }
        }
    }
    rep.min_abs_p = best;
    rep.min_on_box_boundary = best_on_boundary;

    const MultiPolynomial lead = p.leading_form();
    double lmin = std::numeric_limits<double>::infinity();
    for (const auto& u : sphere_directions(d, 64)) {
        std::vector<cplx> z(u.begin(), u.end());
        lmin = std::min(lmin, std::abs(lead.eval(z)));
    }
    rep.leading_form_min = lmin;

    if (best < rep.tolerance)
        rep.verdict = StripVerdict::fails;
    else if (lmin < root_tolerance(lead) && best_on_boundary)
        rep.verdict = StripVerdict::inconclusive;
    else
        rep.verdict = StripVerdict::holds_on_box;
    return rep;
}

std::vector<double> default_extent_schedule() { return {8, 16, 32, 64, 128, 256}; }

namespace {

struct AxisRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<int> level;  // index of the smallest extent containing the node
};

template <int N>
void add_segment(AxisRule& r, double a, double b, int level) {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    auto push = [&](double t, double wt) {
        for (double s : {1.0, -1.0}) {
            r.nodes.push_back(s * (c + h * t));
            r.weights.push_back(h * wt);
            r.level.push_back(level);
        }
    };
    // Boost stores the non-negative half of the symmetric rule; push() mirrors
    // each node onto the negative half-axis.
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] == 0.0) {
            push(0.0, w[k]);
        } else {
            push(x[k], w[k]);
            push(-x[k], w[k]);
        }
    }
}

// Graded partition of [0, E_max] aligned with the schedule; the rule covers
// the symmetric interval by mirroring.
AxisRule axis_rule(const std::vector<double>& extents, std::size_t d) {
    std::vector<std::pair<double, double>> segs;
    std::vector<int> lv;
    // Coarser in 3-D and up: the tensor rule grows like nodes^d.
    double e0 = extents.front();
    double lo = d >= 3 ? e0 / 16.0 : e0 / 64.0;
    segs.emplace_back(0.0, lo);
    lv.push_back(0);
    while (lo < e0) {
        double hi = std::min(2.0 * lo, e0);
        segs.emplace_back(lo, hi);
        lv.push_back(0);
        lo = hi;
    }
    for (std::size_t k = 1; k < extents.size(); ++k) {
        double a = extents[k - 1], b = extents[k];
        int pieces = std::max(1, static_cast<int>(std::ceil(std::log2(b / a) - 1e-12)));
        double ratio = std::pow(b / a, 1.0 / pieces);
        for (int m = 0; m < pieces; ++m) {
            double s0 = a * std::pow(ratio, m), s1 = (m + 1 == pieces) ? b : a * std::pow(ratio, m + 1);
            segs.emplace_back(s0, s1);
            lv.push_back(static_cast<int>(k));
        }
    }
    AxisRule r;
    for (std::size_t s = 0; s < segs.size(); ++s) {
        if (d == 1)
            add_segment<10>(r, segs[s].first, segs[s].second, lv[s]);
        else if (d == 2)
            add_segment<6>(r, segs[s].first, segs[s].second, lv[s]);
        else
            add_segment<3>(r, segs[s].first, segs[s].second, lv[s]);
    }
    return r;
}

}  // namespace

L2StripResult l2_strip_sup(const MultiPolynomial& p, const MultiPolynomial& q, double epsilon,
                           const std::vector<double>& extents) {
    if (p.is_zero()) throw ArgumentError("L2 strip bound: p is the zero polynomial");
    if (extents.size() < 2) throw ArgumentError("L2 strip bound: schedule needs at least two extents");
    for (std::size_t k = 0; k < extents.size(); ++k)
        if (!(extents[k] > 0.0) || (k && extents[k] <= extents[k - 1]))
            throw ArgumentError("L2 strip bound: extents must be positive and increasing");
    if (!q.is_zero() && q.dim() != p.dim()) throw ArgumentError("L2 strip bound: dimension mismatch");
    if (epsilon < 0.0) throw ArgumentError("L2 strip bound: epsilon must be non-negative");

    const std::size_t d = p.dim();
    const AxisRule rule = axis_rule(extents, d);
    const std::size_t m = rule.nodes.size();
    const std::size_t levels = extents.size();
    const auto etas = epsilon > 0.0 ? strip_offsets(d, epsilon)
                                    : std::vector<std::vector<double>>{std::vector<double>(d, 0.0)};

    std::size_t total = 1;
    for (std::size_t j = 0; j < d; ++j) total *= m;

    L2StripResult res;
    res.extents = extents;
    res.sup_norms.assign(levels, 0.0);
    std::vector<double> xi(d);
    std::vector<double> by_level(levels);
    for (const auto& eta : etas) {
        std::fill(by_level.begin(), by_level.end(), 0.0);
        for (std::size_t flat = 0; flat < total; ++flat) {
            std::size_t r = flat;
            double w = 1.0;
            int lv = 0;
            for (std::size_t j = d; j-- > 0;) {
                std::size_t i = r % m;
                r /= m;
                xi[j] = rule.nodes[i];
                w *= rule.weights[i];
                lv = std::max(lv, rule.level[i]);
            }
            cplx num = q.is_zero() ? cplx(0.0) : q.symbol(xi.data(), eta.data());
            cplx den = p.symbol(xi.data(), eta.data());
            by_level[static_cast<std::size_t>(lv)] += w * std::norm(num / den);
        }
        double acc = 0.0;
        for (std::size_t k = 0; k < levels; ++k) {
            acc += by_level[k];
            double v = std::isfinite(acc) ? std::sqrt(acc) : std::numeric_limits<double>::infinity();
            res.sup_norms[k] = std::max(res.sup_norms[k], v);
        }
    }
    const double a = res.sup_norms[levels - 2], b = res.sup_norms[levels - 1];
    res.estimate = b;
    res.converged = std::isfinite(b) && (b == 0.0 || std::abs(b - a) < 0.01 * b);
    return res;
}

int select_alpha(const MultiPolynomial& p, const MultiPolynomial& q, double epsilon) {
    const double eps = std::min(epsilon, 0.5);
    for (unsigned alpha = 1; alpha <= 8; ++alpha) {
        if (l2_strip_sup(p * regularizer(p.dim(), alpha), q, eps).converged) return static_cast<int>(alpha);
    }
    throw NumericalError("no admissible alpha found numerically (searched alpha = 1..8)");
}

}  // namespace lcarma
