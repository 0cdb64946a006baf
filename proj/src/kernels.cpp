#include "lcarma/kernels.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "lcarma/errors.hpp"
#include "lcarma/fft.hpp"
#include "lcarma/symbols.hpp"

namespace lcarma {

using json = nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double sphere_area(std::size_t d) {
    return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d);
}

void require_centered(const GridSpec& g, const char* who) {
    g.validate();
    for (std::size_t j = 0; j < g.dim(); ++j) {
        double want = -static_cast<double>(center_index(g.counts[j])) * g.spacing[j];
        if (std::abs(g.origin[j] - want) > 1e-12 * g.spacing[j] * g.counts[j])
            throw ArgumentError(std::string(who) + ": kernel grids must be centred (lag 0 on the grid)");
    }
}

// |x| at a grid point computed from integer lags, so that mirrored points of a
// centred grid give bitwise equal radii.
double lag_norm(const GridSpec& g, std::size_t flat) {
    double s = 0.0;
    for (std::size_t j = g.dim(); j-- > 0;) {
        const long i = static_cast<long>(flat % g.counts[j]);
        const double x = static_cast<double>(i - static_cast<long>(center_index(g.counts[j]))) * g.spacing[j];
        s += x * x;
        flat /= g.counts[j];
    }
    return std::sqrt(s);
}

}  // namespace

double ball_volume(double r, std::size_t d) { return sphere_area(d) * std::pow(r, double(d)) / double(d); }

// ---- envelope ----

double Envelope::operator()(double r) const {
    switch (kind) {
        case Kind::none: return kInf;
        case Kind::compact: return r <= param ? c : 0.0;
        case Kind::exponential: return c * std::exp(-param * r);
        case Kind::power: return r > 0.0 ? c * std::pow(r, -param) : kInf;
    }
    return kInf;
}

double Envelope::mass_beyond(double rho, std::size_t d) const {
    rho = std::max(rho, 0.0);
    switch (kind) {
        case Kind::none: return kInf;
        case Kind::compact: return param <= rho ? 0.0 : c * (ball_volume(param, d) - ball_volume(rho, d));
        case Kind::exponential:
            if (param <= 0.0) return kInf;
            return c * sphere_area(d) * boost::math::tgamma(double(d), param * rho) / std::pow(param, double(d));
        case Kind::power:
            if (param <= double(d) || rho <= 0.0) return kInf;
            return c * sphere_area(d) * std::pow(rho, double(d) - param) / (param - double(d));
    }
    return kInf;
}

std::string Envelope::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::none: os << "none"; break;
        case Kind::compact: os << "compact(radius " << param << ", bound " << c << ")"; break;
        case Kind::exponential: os << c << " exp(-" << param << " r)"; break;
        case Kind::power: os << c << " r^-" << param; break;
    }
    return os.str();
}

json Envelope::to_json() const {
    static const char* names[] = {"none", "compact", "exponential", "power"};
    return {{"kind", names[static_cast<int>(kind)]}, {"c", c}, {"param", param}};
}

Envelope Envelope::from_json(const json& j) {
    const std::string k = j.at("kind");
    Envelope e;
    if (k == "none")
        e.kind = Kind::none;
    else if (k == "compact")
        e.kind = Kind::compact;
    else if (k == "exponential")
        e.kind = Kind::exponential;
    else if (k == "power")
        e.kind = Kind::power;
    else
        throw ConfigError("envelope: unknown kind '" + k + "'");
    e.c = j.value("c", 0.0);
    e.param = j.value("param", 0.0);
    return e;
}

json KernelProvenance::to_json() const {
    json j{{"kind", kind}, {"images", images}};
    if (p) j["p"] = p->to_string();
    if (q) j["q"] = q->to_string();
    if (alpha) j["alpha"] = *alpha;
    if (!note.empty()) j["note"] = note;
    return j;
}

double KernelGrid::max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

double KernelGrid::value_at_lag(const std::vector<long>& lag) const {
    if (lag.size() != grid.dim()) throw ArgumentError("value_at_lag: dimension mismatch");
    std::vector<std::size_t> idx(grid.dim());
    for (std::size_t j = 0; j < grid.dim(); ++j) {
        long i = static_cast<long>(center_index(grid.counts[j])) + lag[j];
        if (i < 0 || i >= static_cast<long>(grid.counts[j])) return 0.0;
        idx[j] = static_cast<std::size_t>(i);
    }
    return values[grid.ravel(idx)];
}

// ---- envelope fitting ----

Envelope fit_envelope(const GridSpec& g, const std::vector<double>& values, double noise_floor, double max_radius) {
    double M = 0.0;
    for (double v : values) M = std::max(M, std::abs(v));
    if (M == 0.0) return Envelope::compact(0.0, 0.0);
    const double floor = std::max(1e-12 * M, noise_floor);

    double r_sig = 0.0, r_nz = 0.0;
    std::vector<double> r(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        r[i] = g.norm_at(i);
        if (values[i] != 0.0) r_nz = std::max(r_nz, r[i]);
        if (std::abs(values[i]) > floor) r_sig = std::max(r_sig, r[i]);
    }
    const double r_in = g.inscribed_radius();
    if (r_nz < 0.9 * r_in) return Envelope::compact(r_nz, M);

    const double rho = std::min({r_sig, r_in, max_radius});
    if (rho <= 0.0) return Envelope::compact(r_nz, M);

    // Per-radial-bin maxima of the significant samples on [lo, hi].
    auto bins = [&](double lo, double hi, std::vector<double>& xs, std::vector<double>& ys) {
        const int nb = 12;
        std::vector<double> bmax(nb, 0.0), barg(nb, 0.0);
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (r[i] < lo || r[i] > hi || std::abs(values[i]) <= floor) continue;
            int b = std::min(nb - 1, static_cast<int>((r[i] - lo) / (hi - lo) * nb));
            if (std::abs(values[i]) > bmax[b]) {
                bmax[b] = std::abs(values[i]);
                barg[b] = r[i];
            }
        }
        // Keep the non-increasing upper hull: a bin that misses the directions
        // of slowest decay is dominated by some bin further out.
        xs.clear();
        ys.clear();
        double run = 0.0;
        for (int b = nb - 1; b >= 0; --b) {
            if (bmax[b] > 0.0 && bmax[b] >= run) {
                run = bmax[b];
                xs.insert(xs.begin(), barg[b]);
                ys.insert(ys.begin(), std::log(bmax[b]));
            }
        }
        return xs.size() >= 3;
    };
    // Least-squares slope of y against x.
    auto slope = [](const std::vector<double>& x, const std::vector<double>& y) {
        double n = double(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            sx += x[k];
            sy += y[k];
            sxx += x[k] * x[k];
            sxy += x[k] * y[k];
        }
        double den = n * sxx - sx * sx;
        return den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
    };
    auto logs = [](std::vector<double> x) {
        for (double& v : x) v = std::log(v);
        return x;
    };

    std::vector<double> xo, yo, xi, yi;
    if (!bins(0.9 * rho, rho, xo, yo)) return {};
    const double k_exp = -slope(xo, yo), k_pow = -slope(logs(xo), yo);
    // Over a 10% shell both models fit; the one whose rate agrees with the
    // inner band [rho/2, 0.9 rho] describes the decay.
    bool use_exp = true;
    if (bins(0.5 * rho, 0.9 * rho, xi, yi)) {
        const double ie = -slope(xi, yi), ip = -slope(logs(xi), yi);
        const double de = std::abs(ie - k_exp) / std::max(std::abs(k_exp), 1e-300);
        const double dp = std::abs(ip - k_pow) / std::max(std::abs(k_pow), 1e-300);
        use_exp = de <= dp;
    }
    const double rate = use_exp ? k_exp : k_pow;
    if (!(rate > 0.0)) return {};

    double c = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (r[i] < 0.9 * rho || std::abs(values[i]) <= floor) continue;
        double shape = use_exp ? std::exp(-rate * r[i]) : std::pow(r[i], -rate);
        c = std::max(c, std::abs(values[i]) / shape);
    }
    return use_exp ? Envelope::exponential(c, rate) : Envelope::power(c, rate);
}

// ---- spectral kernels ----

namespace {

// Rejects symbols that are not square integrable (the kernel would be a distribution).
void require_square_integrable(const MultiPolynomial& p, const MultiPolynomial& q) {
    const std::size_t d = p.dim();
    if (q.is_zero()) return;
    if (2 * (p.degree() - q.degree()) > static_cast<int>(d)) {
        const MultiPolynomial lead = p.leading_form();
        double lmin = kInf;
        for (const auto& u : sphere_directions(d)) lmin = std::min(lmin, std::abs(lead.symbol(u.data())));
        if (lmin > root_tolerance(lead)) return;
    }
    auto l2 = l2_strip_sup(p, q, 0.0);
    if (!l2.converged)
        throw NotAFunctionError("symbol q(i.)/p(i.) is not square integrable (L2 norm over growing boxes: " +
                                std::to_string(l2.sup_norms.back()) + "); its inverse transform is not a function");
}

void default_images(std::size_t d, int& lo, int& hi) {
    if (hi < 0) hi = d == 1 ? 128 : d == 2 ? 16 : 3;
    if (lo < 0) lo = d == 1 ? 64 : d == 2 ? 8 : 2;
    if (hi > 0 && !(lo > 0 && lo < hi)) throw ArgumentError("kernel: need 0 < images_lo < images_hi");
}

struct Sampled {
    std::vector<cplx> hi, lo;  // image sums truncated at M2 and M1
};

// Flat term list of a polynomial, evaluated from per-axis power tables. Only
// axes with a nonzero exponent are stored per term.
struct TermTable {
    std::vector<double> coef;
    std::vector<std::size_t> start;                   // per term, into factors
    std::vector<std::pair<std::size_t, int>> factors;  // (axis, exponent)
    int max_pow = 0;
    explicit TermTable(const MultiPolynomial& P) {
        for (const auto& [a, c] : P.terms()) {
            coef.push_back(c);
            start.push_back(factors.size());
            for (std::size_t j = 0; j < a.size(); ++j) {
                if (a[j] == 0) continue;
                factors.emplace_back(j, a[j]);
                max_pow = std::max(max_pow, a[j]);
            }
        }
        start.push_back(factors.size());
    }
};

// Image-summed symbol values sum_{|m|_inf <= M} q(i xi_m)/(p(i xi_m) extra(xi_m)),
// xi_m = xi + 2 pi m / h, for every dual-grid xi.
Sampled sample_symbol(const MultiPolynomial& p, const MultiPolynomial& q,
                      const std::function<double(const double*)>* extra, const GridSpec& g, int m_lo, int m_hi) {
    const std::size_t d = g.dim(), n = g.size();
    const TermTable tp(p), tq(q);
    const int P = std::max(tp.max_pow, tq.max_pow) + 1;
    const bool q_const = q.degree() <= 0;
    const int W = 2 * m_hi + 1;
    const double tol = root_tolerance(p);
    std::vector<std::vector<double>> freqs(d);
    for (std::size_t j = 0; j < d; ++j) freqs[j] = angular_frequencies(g.counts[j], g.spacing[j]);
    Sampled out{std::vector<cplx>(n), std::vector<cplx>(m_hi > 0 ? n : 0)};

    // pw[j][(m + M) * P + e] = (i xi_j)^e along axis j for image m.
    std::vector<std::vector<cplx>> pw(d, std::vector<cplx>(static_cast<std::size_t>(W * P)));
    auto eval = [&](const TermTable& t, const int* m) {
        cplx s = 0.0;
        for (std::size_t k = 0; k < t.coef.size(); ++k) {
            cplx term = t.coef[k];
            for (std::size_t f = t.start[k]; f < t.start[k + 1]; ++f) {
                const auto [j, e] = t.factors[f];
                term *= pw[j][static_cast<std::size_t>((m[j] + m_hi) * P + e)];
            }
            s += term;
        }
        return s;
    };
    const cplx qc = q_const ? cplx(q.is_zero() ? 0.0 : tq.coef.front()) : cplx(0.0);

    std::vector<std::size_t> idx;
    std::vector<int> m(d);
    std::vector<double> xi(d);
    for (std::size_t flat = 0; flat < n; ++flat) {
        g.unravel(flat, idx);
        for (std::size_t j = 0; j < d; ++j) {
            for (int mm = -m_hi; mm <= m_hi; ++mm) {
                const cplx z(0.0, freqs[j][idx[j]] + 2.0 * kPi * mm / g.spacing[j]);
                cplx* row = &pw[j][static_cast<std::size_t>((mm + m_hi) * P)];
                row[0] = 1.0;
                for (int e = 1; e < P; ++e) row[e] = row[e - 1] * z;
            }
        }
        cplx s_hi = 0.0, s_lo = 0.0;
        std::fill(m.begin(), m.end(), -m_hi);
        while (true) {
            int inner = 0;
            for (std::size_t j = 0; j < d; ++j) inner = std::max(inner, std::abs(m[j]));
            cplx pv = eval(tp, m.data());
            if (extra) {
                for (std::size_t j = 0; j < d; ++j) xi[j] = freqs[j][idx[j]] + 2.0 * kPi * m[j] / g.spacing[j];
                pv *= (*extra)(xi.data());
            }
            const double pn = std::norm(pv);
            if (pn < tol * tol) {
                std::ostringstream os;
                os << "symbol p(i xi) vanishes at xi = (";
                for (std::size_t j = 0; j < d; ++j)
                    os << (j ? ", " : "") << freqs[j][idx[j]] + 2.0 * kPi * m[j] / g.spacing[j];
                os << ") on the sampled frequency grid";
                throw SingularSymbolError(os.str());
            }
            const cplx v = (q_const ? qc : eval(tq, m.data())) * std::conj(pv) / pn;
            s_hi += v;
            if (inner <= m_lo) s_lo += v;
            std::size_t j = d;
            while (j-- > 0) {
                if (++m[j] <= m_hi) break;
                m[j] = -m_hi;
            }
            if (j == std::size_t(-1)) break;
        }
        out.hi[flat] = s_hi;
        if (m_hi > 0) out.lo[flat] = s_lo;
    }
    return out;
}

// Inverse DFT of a symbol array into centred kernel samples.
std::vector<double> invert(const GridSpec& g, std::vector<cplx> sym, double* residue) {
    hermitian_project(g, sym);
    Fft fft(g.counts);
    auto out = fft.inverse(sym);
    const double scale = 1.0 / g.cell_volume();
    std::vector<double> re(out.size());
    double im = 0.0, mx = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        re[i] = out[i].real() * scale;
        im = std::max(im, std::abs(out[i].imag()) * scale);
        mx = std::max(mx, std::abs(re[i]));
    }
    if (residue) *residue = mx > 0.0 ? im / mx : im;
    if (residue && *residue > 1e-10)
        throw NumericalError("kernel: imaginary residue " + std::to_string(*residue) + " exceeds 1e-10");
    return from_wrapped(g, re);
}

KernelGrid spectral_kernel(const MultiPolynomial& p_eval, const MultiPolynomial& q_eval, const MultiPolynomial& p_l2,
                           const MultiPolynomial& q_l2, const std::function<double(const double*)>& extra,
                           const GridSpec& grid, const KernelOptions& opt, KernelProvenance prov) {
    require_centered(grid, "kernel");
    if (p_eval.dim() != grid.dim() || q_eval.dim() != grid.dim())
        throw ArgumentError("kernel: polynomial and grid dimensions differ");
    if (p_eval.is_zero()) throw SingularSymbolError("kernel: p is the zero polynomial");
    require_square_integrable(p_l2, q_l2);

    int m_lo = opt.images_lo, m_hi = opt.images_hi;
    if (m_hi != 0) default_images(grid.dim(), m_lo, m_hi);
    else m_lo = 0;
    prov.images = m_hi;

    const auto* ex = extra ? &extra : nullptr;
    Sampled s = sample_symbol(p_eval, q_eval, ex, grid, m_lo, m_hi);

    KernelGrid k;
    k.grid = grid;
    k.provenance = std::move(prov);
    double far_error = 0.0;  // correction size away from the origin; the envelope noise floor
    const double r_far = 0.9 * grid.inscribed_radius();
    if (m_hi == 0) {
        k.values = invert(grid, std::move(s.hi), &k.imag_residue);
        // The first ring of images gauges the aliasing noise of plain sampling.
        // It decays like h/r when the kernel jumps, so it is taken over the
        // outer half. Only the envelope floor uses it; a zero of p on that ring
        // leaves the floor at zero.
        try {
            Sampled s1 = sample_symbol(p_eval, q_eval, ex, grid, 0, 1);
            double res1 = 0.0;
            auto one = invert(grid, std::move(s1.hi), &res1);
            for (std::size_t i = 0; i < one.size(); ++i)
                if (grid.norm_at(i) >= 0.5 * grid.inscribed_radius())
                    far_error = std::max(far_error, std::abs(one[i] - k.values[i]));
        } catch (const SingularSymbolError&) {
        }
    } else {
        std::vector<cplx> rich(s.hi.size());
        const double a = double(m_hi), b = double(m_lo);
        for (std::size_t i = 0; i < rich.size(); ++i) rich[i] = (a * s.hi[i] - b * s.lo[i]) / (a - b);
        k.values = invert(grid, std::move(rich), &k.imag_residue);
        double res2 = 0.0;
        auto plain = invert(grid, std::move(s.hi), &res2);
        // The lag-0 sample is excluded: for kernels singular at the origin the
        // image sum diverges there and only that sample is affected.
        std::vector<std::size_t> centre(grid.dim());
        for (std::size_t j = 0; j < grid.dim(); ++j) centre[j] = center_index(grid.counts[j]);
        const std::size_t c0 = grid.ravel(centre);
        for (std::size_t i = 0; i < plain.size(); ++i) {
            if (i == c0) continue;
            const double e = std::abs(k.values[i] - plain[i]);
            k.error_estimate = std::max(k.error_estimate, e);
            if (grid.norm_at(i) >= r_far) far_error = std::max(far_error, e);
        }
    }

    const double M = k.max_abs();
    k.envelope = opt.envelope ? *opt.envelope : fit_envelope(grid, k.values, 10.0 * far_error, 0.75 * grid.inscribed_radius());
    if (opt.check_extent) {
        const double rb = grid.inscribed_radius();
        const double eb = k.envelope(rb);
        if (!(eb < 1e-6 * M))
            throw WrapAroundError("kernel: envelope " + k.envelope.describe() + " at the grid boundary (r = " +
                                  std::to_string(rb) + ") is not below 1e-6 max|G|; enlarge the grid extent");
    }
    return k;
}

}  // namespace

KernelGrid kernel_fft(const MultiPolynomial& p, const MultiPolynomial& q, const GridSpec& grid,
                      const KernelOptions& opt) {
    KernelProvenance prov{"fft", p, q, std::nullopt, 0, "F^-1[q(i xi)/p(i xi)]"};
    return spectral_kernel(p, q, p, q, {}, grid, opt, std::move(prov));
}

KernelGrid kernel_regularized(const MultiPolynomial& p, const MultiPolynomial& q, int alpha, const GridSpec& grid,
                              const KernelOptions& opt) {
    if (alpha < 0) throw ArgumentError("kernel_regularized: alpha must be >= 0");
    if (p.dim() != grid.dim()) throw ArgumentError("kernel: polynomial and grid dimensions differ");
    const std::size_t d = grid.dim();
    KernelProvenance prov{"regularized", p, q, alpha, 0, "F^-1[q(-i xi)/(psi(xi) p(-i xi))]"};
    KernelOptions o = opt;
    if (o.images_hi < 0) o.images_hi = 0;
    auto psi = [d, alpha](const double* xi) {
        double s = 1.0;
        for (std::size_t j = 0; j < d; ++j) s += xi[j] * xi[j];
        return std::pow(s, alpha);
    };
    const MultiPolynomial pa = p.adjoint(), qa = q.adjoint();
    return spectral_kernel(pa, qa, pa * regularizer(d, static_cast<unsigned>(alpha)), qa, psi, grid, o,
                           std::move(prov));
}

// ---- 1-D state space ----

namespace {

Eigen::MatrixXd companion(const std::vector<double>& a) {
    const int p = static_cast<int>(a.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i + 1 < p; ++i) A(i, i + 1) = 1.0;
    for (int j = 0; j < p; ++j) A(p - 1, j) = -a[static_cast<std::size_t>(p - 1 - j)];
    return A;
}

}  // namespace

void Carma1dStateSpace::validate() const {
    if (a.empty()) throw ConfigError("carma1d: order p must be >= 1");
    if (b.empty() || b.size() > a.size())
        throw ConfigError("carma1d: need 1 <= len(b) <= p (q < p)");
    for (double v : a)
        if (!std::isfinite(v)) throw ConfigError("carma1d: non-finite autoregressive coefficient");
    for (double v : b)
        if (!std::isfinite(v)) throw ConfigError("carma1d: non-finite moving-average coefficient");
    if (b.back() == 0.0) throw ConfigError("carma1d: leading moving-average coefficient b_q must be nonzero");
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion(a), false);
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        auto ev = es.eigenvalues()[i];
        if (!(ev.real() < 0.0)) {
            std::ostringstream os;
            os << "carma1d: eigenvalue " << ev.real() << (ev.imag() < 0 ? " - " : " + ") << std::abs(ev.imag())
               << "i has nonnegative real part";
            throw StationarityError(os.str());
        }
    }
}

Carma1dStateSpace Carma1dStateSpace::from_polynomials(const MultiPolynomial& p, const MultiPolynomial& q) {
    if (p.dim() != 1 || q.dim() != 1) throw ArgumentError("carma1d: polynomials must be univariate");
    const int deg = p.degree();
    if (deg < 1) throw ConfigError("carma1d: deg p must be >= 1");
    const double lead = p.coefficient({deg});
    Carma1dStateSpace ss;
    for (int k = 1; k <= deg; ++k) ss.a.push_back(p.coefficient({deg - k}) / lead);
    for (int k = 0; k <= std::max(q.degree(), 0); ++k) ss.b.push_back(q.coefficient({k}) / lead);
    ss.validate();
    return ss;
}

KernelGrid kernel_carma1d(const Carma1dStateSpace& ss, const GridSpec& grid, JumpValue at_zero) {
    ss.validate();
    grid.validate();
    if (grid.dim() != 1) throw ArgumentError("kernel_carma1d: grid must be one-dimensional");
    const int p = static_cast<int>(ss.order());
    const Eigen::MatrixXd A = companion(ss.a);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
    for (std::size_t k = 0; k < ss.b.size(); ++k) b(static_cast<int>(k)) = ss.b[k];

    // Diagonal form g(t) = Re sum_i c_i e^{lambda_i t} when the eigenbasis is well conditioned.
    Eigen::EigenSolver<Eigen::MatrixXd> es(A);
    const Eigen::MatrixXcd V = es.eigenvectors();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(V);
    const auto sv = svd.singularValues();
    const bool diag = sv(sv.size() - 1) > 1e-8 * sv(0);

    KernelGrid k;
    k.grid = grid;
    k.values.assign(grid.size(), 0.0);
    k.provenance = {"carma1d", std::nullopt, std::nullopt, std::nullopt, 0, "b^T exp(A t) e_p"};
    double rate = kInf;
    for (int i = 0; i < p; ++i) rate = std::min(rate, -es.eigenvalues()(i).real());

    Eigen::VectorXcd c;
    if (diag) {
        Eigen::VectorXcd ep = Eigen::VectorXcd::Zero(p);
        ep(p - 1) = 1.0;
        Eigen::VectorXcd w = V.partialPivLu().solve(ep);
        Eigen::RowVectorXcd bv = b.transpose().cast<std::complex<double>>() * V;
        c = bv.transpose().cwiseProduct(w);
    }
    std::vector<double> x;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid.point(i, x);
        const double t = x[0];
        if (t < 0.0) continue;
        double g;
        if (diag) {
            std::complex<double> s = 0.0;
            for (int j = 0; j < p; ++j) s += c(j) * std::exp(es.eigenvalues()(j) * t);
            g = s.real();
        } else {
            Eigen::MatrixXd E = (A * t).exp();
            g = b.dot(E.col(p - 1));
        }
        if (t == 0.0 && ss.b.size() == static_cast<std::size_t>(p) && at_zero == JumpValue::midpoint) g *= 0.5;
        k.values[i] = g;
    }
    if (diag) {
        double cs = 0.0;
        for (int j = 0; j < p; ++j) cs += std::abs(c(j));
        k.envelope = Envelope::exponential(cs * (1.0 + 1e-12), rate);
    } else {
        // Repeated roots add polynomial factors; trade a little of the rate for a constant.
        const double r = 0.9 * rate;
        double cs = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            grid.point(i, x);
            cs = std::max(cs, std::abs(k.values[i]) * std::exp(r * std::max(x[0], 0.0)));
        }
        k.envelope = Envelope::exponential(cs * (1.0 + 1e-6), r);
        k.provenance.note += " (matrix exponential; repeated roots)";
    }
    return k;
}

// ---- isotropic closed form ----

void BMKernelSpec::validate() const {
    if (dim == 0) throw ConfigError("bm kernel: dimension must be >= 1");
    if (lambda.empty()) throw ConfigError("bm kernel: need at least one root lambda");
    if (kappa.size() >= lambda.size()) throw ConfigError("bm kernel: need q < p");
    auto has_conj = [](const std::vector<std::complex<double>>& v, std::complex<double> z) {
        for (auto w : v)
            if (std::abs(w - std::conj(z)) <= 1e-12 * (1.0 + std::abs(z))) return true;
        return false;
    };
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        if (!(lambda[i].real() < 0.0)) throw ConfigError("bm kernel: roots lambda must have negative real part");
        if (!has_conj(lambda, lambda[i])) throw ConfigError("bm kernel: complex roots must come in conjugate pairs");
        for (std::size_t j = 0; j < i; ++j) {
            if (std::abs(lambda[i] * lambda[i] - lambda[j] * lambda[j]) <= 1e-10 * (1.0 + std::norm(lambda[i])))
                throw ConfigError("bm kernel: roots lambda must be distinct (repeated root)");
        }
        for (auto k : kappa)
            if (std::abs(lambda[i] * lambda[i] - k * k) <= 1e-10 * (1.0 + std::norm(k)))
                throw ConfigError("bm kernel: lambda and kappa roots coincide");
    }
    for (auto k : kappa)
        if (!has_conj(kappa, k)) throw ConfigError("bm kernel: complex roots must come in conjugate pairs");
}

std::vector<std::complex<double>> BMKernelSpec::coefficients() const {
    validate();
    std::vector<std::complex<double>> c;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        const auto l = lambda[i], l2 = l * l;
        std::complex<double> b = 1.0, ap = 2.0 * l;
        for (auto k : kappa) b *= l2 - k * k;
        for (std::size_t j = 0; j < lambda.size(); ++j)
            if (j != i) ap *= l2 - lambda[j] * lambda[j];
        c.push_back(b / ap);
    }
    return c;
}

KernelGrid kernel_bm(const BMKernelSpec& spec, const GridSpec& grid) {
    require_centered(grid, "kernel_bm");
    if (grid.dim() != spec.dim) throw ArgumentError("kernel_bm: grid dimension differs from the spec");
    const auto c = spec.coefficients();
    KernelGrid k;
    k.grid = grid;
    k.values.resize(grid.size());
    k.provenance = {"bm", std::nullopt, std::nullopt, std::nullopt, 0, "sum_i b(l_i)/a'(l_i) exp(l_i |t|)"};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r = lag_norm(grid, i);
        std::complex<double> s = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j) s += c[j] * std::exp(spec.lambda[j] * r);
        k.values[i] = s.real();
    }
    double rate = kInf, cs = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
        rate = std::min(rate, -spec.lambda[j].real());
        cs += std::abs(c[j]);
    }
    k.envelope = Envelope::exponential(cs * (1.0 + 1e-12), rate);
    return k;
}

// ---- singular radial kernels with cell-averaged origin ----

namespace {

// Average of f(r) over the origin cell: the inscribed ball is integrated
// exactly by ball_integral(a), the rest by the midpoint rule on sub-cells.
double origin_cell_average(const GridSpec& g, const std::function<double(double)>& f,
                           const std::function<double(double)>& ball_integral) {
    const std::size_t d = g.dim();
    double a = kInf;
    for (double h : g.spacing) a = std::min(a, 0.5 * h);
    const int m = std::max(4, static_cast<int>(std::round(std::pow(32768.0, 1.0 / double(d)))));
    double sub_vol = 1.0;
    for (double h : g.spacing) sub_vol *= h / m;
    double rest = 0.0;
    std::vector<int> idx(d, 0);
    while (true) {
        double r2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double x = g.spacing[j] * (-0.5 + (idx[j] + 0.5) / m);
            r2 += x * x;
        }
        const double r = std::sqrt(r2);
        if (r > a) rest += f(r) * sub_vol;
        std::size_t j = d;
        while (j-- > 0) {
            if (++idx[j] < m) break;
            idx[j] = 0;
        }
        if (j == std::size_t(-1)) break;
    }
    return (ball_integral(a) + rest) / g.cell_volume();
}

KernelGrid radial_kernel(const GridSpec& grid, const std::function<double(double)>& f, double origin_value,
                         std::string kind, std::string note) {
    KernelGrid k;
    k.grid = grid;
    k.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r = lag_norm(grid, i);
        k.values[i] = r == 0.0 ? origin_value : f(r);
    }
    k.provenance = {std::move(kind), std::nullopt, std::nullopt, std::nullopt, 0, std::move(note)};
    return k;
}

}  // namespace

KernelGrid kernel_matern3(double lambda, const GridSpec& grid) {
    require_centered(grid, "kernel_matern3");
    if (grid.dim() != 3) throw ArgumentError("kernel_matern3: unsupported dimension " + std::to_string(grid.dim()) + " (needs d = 3)");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ArgumentError("kernel_matern3: lambda must be > 0");
    const double kap = std::sqrt(lambda);
    auto f = [kap](double r) { return std::exp(-kap * r) / (4.0 * kPi * r); };
    auto ball = [kap](double a) {
        const double x = kap * a;
        // int_0^a r e^{-kap r} dr, series for small kap a.
        return x < 1e-4 ? a * a * (0.5 - x / 3.0 + x * x / 8.0) : (1.0 - std::exp(-x) * (1.0 + x)) / (kap * kap);
    };
    auto k = radial_kernel(grid, f, origin_cell_average(grid, f, ball), "matern3",
                           "exp(-sqrt(lambda) r)/(4 pi r)");
    double hmin = *std::min_element(grid.spacing.begin(), grid.spacing.end());
    k.envelope = Envelope::exponential(1.0 / (4.0 * kPi * hmin), kap);
    return k;
}

KernelGrid kernel_newtonian(const GridSpec& grid) {
    require_centered(grid, "kernel_newtonian");
    const std::size_t d = grid.dim();
    if (d < 3) throw ArgumentError("kernel_newtonian: needs d >= 3 (the kernel is not decaying for d <= 2)");
    const double cd = std::tgamma(0.5 * d - 1.0) / (4.0 * std::pow(kPi, 0.5 * d));
    auto f = [cd, d](double r) { return cd * std::pow(r, 2.0 - double(d)); };
    const double area = sphere_area(d);
    auto ball = [cd, area](double a) { return cd * area * a * a / 2.0; };
    auto k = radial_kernel(grid, f, origin_cell_average(grid, f, ball), "newtonian",
                           "Gamma(d/2-1)/(4 pi^{d/2}) r^{2-d}");
    k.envelope = Envelope::power(cd, double(d) - 2.0);
    return k;
}

KernelGrid kernel_delta(const GridSpec& grid) {
    require_centered(grid, "kernel_delta");
    KernelGrid k;
    k.grid = grid;
    k.values.assign(grid.size(), 0.0);
    std::vector<std::size_t> c(grid.dim());
    for (std::size_t j = 0; j < grid.dim(); ++j) c[j] = center_index(grid.counts[j]);
    k.values[grid.ravel(c)] = 1.0 / grid.cell_volume();
    k.envelope = Envelope::compact(0.0, 1.0 / grid.cell_volume());
    k.provenance = {"delta", std::nullopt, std::nullopt, std::nullopt, 0, "1/cell_volume at lag 0"};
    return k;
}

KernelGrid kernel_from_function(const GridSpec& grid, const std::function<double(const double*)>& f, Envelope envelope,
                                std::string note) {
    require_centered(grid, "kernel_from_function");
    KernelGrid k;
    k.grid = grid;
    k.values.resize(grid.size());
    std::vector<double> x;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid.point(i, x);
        k.values[i] = f(x.data());
        if (!std::isfinite(k.values[i])) throw NumericalError("kernel_from_function: non-finite sample");
    }
    k.envelope = envelope;
    k.provenance = {"function", std::nullopt, std::nullopt, std::nullopt, 0, std::move(note)};
    return k;
}

}  // namespace lcarma
