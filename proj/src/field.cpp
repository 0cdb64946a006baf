#include "lcarma/field.hpp"

#include <algorithm>
#include <cmath>

#include "lcarma/errors.hpp"
#include "lcarma/fft.hpp"

namespace lcarma {

namespace {

void require_match(const GridSpec& a, const GridSpec& b, const char* what) {
    if (!a.same_shape(b)) throw ArgumentError(std::string(what) + ": grids differ in counts or spacing");
}

void require_centered(const KernelGrid& K) {
    for (std::size_t j = 0; j < K.grid.dim(); ++j) {
        const double want = -static_cast<double>(center_index(K.grid.counts[j])) * K.grid.spacing[j];
        if (std::abs(K.grid.origin[j] - want) > 1e-9 * K.grid.spacing[j])
            throw ArgumentError("field: kernel grid must be a centred lag grid");
    }
    if (K.values.size() != K.grid.size()) throw ArgumentError("field: kernel values do not match its grid");
}

// scale * DFT of the wrapped kernel. With scale = cellvol this is the
// multiplier of f -> K * f; noise increments already carry the cell volume.
std::vector<cplx> kernel_multiplier(const Fft& fft, const KernelGrid& K, double scale) {
    auto m = fft.forward(std::span<const double>(to_wrapped(K.grid, K.values)));
    for (auto& v : m) v *= scale;
    return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::string kernel_id(const KernelGrid& K) {
    std::string s = K.provenance.kind;
    if (K.provenance.p) s += " p=" + K.provenance.p->to_string();
    if (K.provenance.q) s += " q=" + K.provenance.q->to_string();
    if (K.provenance.alpha) s += " alpha=" + std::to_string(*K.provenance.alpha);
    return s;
}

void check_wrap(const KernelGrid& K, double threshold) {
    const double f = wrap_fraction(K);
    if (!(f < threshold))
        throw WrapAroundError("field: kernel mass beyond the half extent is " + std::to_string(f) +
                              " of the total (threshold " + std::to_string(threshold) + "); enlarge the grid");
}

}  // namespace

TestFunction bump(const std::vector<double>& center, double radius, double amplitude, const GridSpec& grid,
                  std::size_t pad_cells) {
    grid.validate();
    const std::size_t d = grid.dim();
    if (center.size() != d) throw ArgumentError("bump: center has the wrong dimension");
    if (!(radius > 0.0)) throw ArgumentError("bump: radius must be positive");
    for (std::size_t j = 0; j < d; ++j) {
        const double lo = grid.origin[j] + double(pad_cells) * grid.spacing[j];
        const double hi = grid.origin[j] + double(grid.counts[j] - 1 - pad_cells) * grid.spacing[j];
        if (center[j] - radius < lo || center[j] + radius > hi)
            throw PreconditionError("bump: support leaves the grid interior (margin " + std::to_string(pad_cells) +
                                    " cells) on axis " + std::to_string(j + 1));
    }
    TestFunction t;
    t.center = center;
    t.radius = radius;
    t.amplitude = amplitude;
    t.pad_cells = pad_cells;
    t.phi.grid = grid;
    t.phi.values.assign(grid.size(), 0.0);
    std::vector<double> x;
    double s = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid.point(i, x);
        double u2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) u2 += std::pow((x[j] - center[j]) / radius, 2);
        if (u2 < 1.0) t.phi.values[i] = amplitude * std::exp(-1.0 / (1.0 - u2));
        s += t.phi.values[i];
    }
    t.integral = s * grid.cell_volume();
    return t;
}

double wrap_fraction(const KernelGrid& K) {
    const GridSpec& g = K.grid;
    const double cv = g.cell_volume(), r_half = g.inscribed_radius();
    double inside = 0.0, shell = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double a = std::abs(K.values[i]) * cv;
        inside += a;
        if (g.norm_at(i) >= 0.9 * r_half) shell += a;
    }
    if (K.envelope.declared()) {
        const double beyond = K.envelope.mass_beyond(r_half, g.dim());
        if (!std::isfinite(beyond)) return 1.0;
        return inside + beyond > 0.0 ? beyond / (inside + beyond) : 0.0;
    }
    return inside > 0.0 ? shell / inside : 0.0;
}

FieldRealization simulate_mild(const KernelGrid& K, const CellNoise& n, double wrap_threshold) {
    require_centered(K);
    require_match(K.grid, n.grid, "simulate_mild");
    if (n.values.size() != n.grid.size()) throw ArgumentError("simulate_mild: noise values do not match its grid");
    check_wrap(K, wrap_threshold);
    Fft fft(n.grid.counts);
    auto m = kernel_multiplier(fft, K, 1.0);
    FieldRealization f;
    f.field.grid = n.grid;
    f.field.values = apply_multiplier(fft, m, n.values);
    f.kernel = kernel_id(K);
    f.seed = n.seed;
    f.stream = n.stream;
    return f;
}

double pair_whitenoise(const CellNoise& n, const GridFunction& phi) {
    if (!(phi.grid == n.grid)) throw ArgumentError("pair_whitenoise: test function and noise grids differ");
    return dot(phi.values, n.values);
}

double pair_whitenoise(const CellNoise& n, const TestFunction& phi) { return pair_whitenoise(n, phi.phi); }

GridFunction generalized_weight(const KernelGrid& Kpsi, int alpha, const GridFunction& phi) {
    if (!Kpsi.provenance.alpha || *Kpsi.provenance.alpha != alpha)
        throw ArgumentError("pair_generalized: kernel was built with alpha = " +
                            (Kpsi.provenance.alpha ? std::to_string(*Kpsi.provenance.alpha) : std::string("none")) +
                            ", called with " + std::to_string(alpha));
    require_centered(Kpsi);
    require_match(Kpsi.grid, phi.grid, "pair_generalized");
    Fft fft(phi.grid.counts);
    auto m = kernel_multiplier(fft, Kpsi, Kpsi.grid.cell_volume());
    auto psi = operator_multiplier(regularizer(phi.grid.dim(), static_cast<unsigned>(alpha)), phi.grid, false);
    for (std::size_t k = 0; k < m.size(); ++k) m[k] *= psi[k];
    return {phi.grid, apply_multiplier(fft, m, phi.values)};
}

double pair_generalized(const KernelGrid& Kpsi, int alpha, const CellNoise& n, const GridFunction& phi) {
    if (!(phi.grid == n.grid)) throw ArgumentError("pair_generalized: test function and noise grids differ");
    return dot(generalized_weight(Kpsi, alpha, phi).values, n.values);
}

double pair_generalized(const KernelGrid& Kpsi, int alpha, const CellNoise& n, const TestFunction& phi) {
    return pair_generalized(Kpsi, alpha, n, phi.phi);
}

SpdeResidual spde_residual(const MultiPolynomial& p, const MultiPolynomial& q, const KernelGrid& Kpsi, int alpha,
                           const CellNoise& n, const TestFunction& phi) {
    Fft fft(phi.phi.grid.counts);
    auto pphi = apply_operator(p, phi.phi, true, phi.pad_cells, &fft);
    auto qphi = apply_operator(q, phi.phi, true, phi.pad_cells, &fft);
    SpdeResidual r;
    r.lhs = pair_generalized(Kpsi, alpha, n, pphi);
    r.rhs = pair_whitenoise(n, qphi);
    r.residual = std::abs(r.lhs - r.rhs);
    r.normalizer = std::max({std::abs(r.lhs), std::abs(r.rhs), 1.0});
    return r;
}

FubiniResult fubini_check(const KernelGrid& K, const CellNoise& n, const TestFunction& phi) {
    if (!(phi.phi.grid == n.grid)) throw ArgumentError("fubini_check: test function and noise grids differ");
    require_centered(K);
    require_match(K.grid, n.grid, "fubini_check");
    check_wrap(K, 1e-6);
    Fft fft(n.grid.counts);
    const double cv = n.grid.cell_volume();
    auto m = kernel_multiplier(fft, K, 1.0);
    auto X = apply_multiplier(fft, m, n.values);
    // G(-.) has the conjugate multiplier.
    for (auto& v : m) v = cv * std::conj(v);
    auto w = apply_multiplier(fft, m, phi.phi.values);
    FubiniResult r;
    r.lhs = dot(X, phi.phi.values) * cv;
    r.rhs = dot(w, n.values);
    const double s = std::max(std::abs(r.lhs), std::abs(r.rhs));
    r.diff = s > 0.0 ? std::abs(r.lhs - r.rhs) / s : 0.0;
    return r;
}

KernelGrid inject_symbol_fault(const KernelGrid& K, const std::vector<long>& k, double eps) {
    require_centered(K);
    const GridSpec& g = K.grid;
    if (k.size() != g.dim()) throw ArgumentError("inject_symbol_fault: frequency index has the wrong dimension");
    Fft fft(g.counts);
    auto m = fft.forward(std::span<const double>(to_wrapped(g, K.values)));
    std::vector<std::size_t> pos(g.dim()), neg(g.dim());
    for (std::size_t j = 0; j < g.dim(); ++j) {
        const long n = static_cast<long>(g.counts[j]);
        pos[j] = static_cast<std::size_t>(((k[j] % n) + n) % n);
        neg[j] = static_cast<std::size_t>(((-k[j] % n) + n) % n);
    }
    const std::size_t a = g.ravel(pos), b = g.ravel(neg);
    m[a] *= 1.0 + eps;
    if (b != a) m[b] *= 1.0 + eps;
    auto out = fft.inverse(m);
    std::vector<double> re(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) re[i] = out[i].real();
    KernelGrid f = K;
    f.values = from_wrapped(g, re);
    f.provenance.note += " (fault injected)";
    return f;
}

}  // namespace lcarma
