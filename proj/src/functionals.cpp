#include "lcarma/functionals.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "lcarma/errors.hpp"
#include "lcarma/fft.hpp"

namespace lcarma {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Fraction of the cell centred at y (half widths hw) inside the radius-R ball.
double cell_fraction(const std::vector<double>& y, const std::vector<double>& hw, double R) {
    const std::size_t d = y.size();
    double near = 0.0, far = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double a = std::abs(y[j]);
        near += std::pow(std::max(a - hw[j], 0.0), 2);
        far += std::pow(a + hw[j], 2);
    }
    if (far <= R * R) return 1.0;
    if (near >= R * R) return 0.0;
    // Midpoint sub-cells, about 4096 in total.
    const int s = std::max(2, static_cast<int>(std::pow(4096.0, 1.0 / double(d))));
    std::vector<int> k(d, 0);
    long inside = 0, total = 0;
    while (true) {
        double r2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double z = y[j] - hw[j] + (2.0 * hw[j]) * (k[j] + 0.5) / s;
            r2 += z * z;
        }
        inside += r2 <= R * R;
        ++total;
        std::size_t j = d;
        while (j-- > 0) {
            if (++k[j] < s) break;
            k[j] = 0;
        }
        if (j == std::size_t(-1)) break;
    }
    return double(inside) / double(total);
}

template <class F>
double integrate(F f, double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-12, &err);
}

}  // namespace

std::vector<double> weight_nodes() {
    std::vector<double> x;
    for (int i = 0; i <= 64; ++i) x.push_back(std::pow(10.0, i / 8.0));
    return x;
}

KernelFunctionals kernel_functionals(const KernelGrid& K, double R) {
    if (!(R > 0.0) || !std::isfinite(R)) throw ArgumentError("kernel_functionals: R must be positive");
    if (!K.envelope.declared())
        throw PreconditionError("kernel_functionals: the kernel has no tail envelope; mass beyond the grid is unknown");
    const GridSpec& g = K.grid;
    const std::size_t d = g.dim();

    std::vector<std::size_t> pad(d), counts(d);
    std::vector<double> origin(d), hw(d);
    std::size_t total = 1;
    for (std::size_t j = 0; j < d; ++j) {
        pad[j] = static_cast<std::size_t>(std::ceil(R / g.spacing[j])) + 1;
        counts[j] = g.counts[j] + 2 * pad[j];
        origin[j] = g.origin[j] - double(pad[j]) * g.spacing[j];
        hw[j] = 0.5 * g.spacing[j];
        total *= counts[j];
    }
    if (total > (std::size_t(1) << 27))
        throw ResourceError("kernel_functionals: padded grid of " + std::to_string(total) + " cells is too large");
    GridSpec pg{counts, g.spacing, origin};

    // |G| placed inside the padded box.
    std::vector<double> a(total, 0.0);
    std::vector<std::size_t> idx(d), pidx(d);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.unravel(i, idx);
        for (std::size_t j = 0; j < d; ++j) pidx[j] = idx[j] + pad[j];
        a[pg.ravel(pidx)] = std::abs(K.values[i]);
    }

    // Ball weights at wrapped offsets: |B_R(0) cap cell| for every cell within reach.
    const double cv = g.cell_volume();
    std::vector<double> w(total, 0.0);
    std::vector<long> off(d);
    for (std::size_t j = 0; j < d; ++j) off[j] = -static_cast<long>(pad[j]);
    std::vector<double> y(d);
    while (true) {
        for (std::size_t j = 0; j < d; ++j) y[j] = double(off[j]) * g.spacing[j];
        const double f = cell_fraction(y, hw, R);
        if (f > 0.0) {
            for (std::size_t j = 0; j < d; ++j)
                pidx[j] = static_cast<std::size_t>((off[j] + static_cast<long>(counts[j])) % static_cast<long>(counts[j]));
            w[pg.ravel(pidx)] = f * cv;
        }
        std::size_t j = d;
        while (j-- > 0) {
            if (++off[j] <= static_cast<long>(pad[j])) break;
            off[j] = -static_cast<long>(pad[j]);
        }
        if (j == std::size_t(-1)) break;
    }

    Fft fft(counts);
    auto A = fft.forward(std::span<const double>(a));
    auto W = fft.forward(std::span<const double>(w));
    for (std::size_t i = 0; i < total; ++i) A[i] *= W[i];
    auto out = fft.inverse(A);

    KernelFunctionals F;
    F.R_ = R;
    F.dim_ = d;
    F.cell_volume_ = cv;
    F.ball_ = ball_volume(R, d);
    F.env_ = K.envelope;
    F.outer_ = pg.inscribed_radius();
    F.g_r_.grid = pg;
    F.g_r_.values.resize(total);
    double mx = 0.0;
    for (std::size_t i = 0; i < total; ++i) mx = std::max(mx, out[i].real());
    // Transform roundoff where G_R vanishes is cleared.
    for (std::size_t i = 0; i < total; ++i) {
        const double v = out[i].real();
        F.g_r_.values[i] = v > 1e-12 * mx ? v : 0.0;
        if (F.g_r_.values[i] > 0.0) F.sorted_.push_back(v);
    }
    std::sort(F.sorted_.begin(), F.sorted_.end());
    F.prefix_.assign(F.sorted_.size() + 1, 0.0);
    F.prefix_sq_.assign(F.sorted_.size() + 1, 0.0);
    for (std::size_t i = 0; i < F.sorted_.size(); ++i) {
        F.prefix_[i + 1] = F.prefix_[i] + F.sorted_[i];
        F.prefix_sq_[i + 1] = F.prefix_sq_[i] + F.sorted_[i] * F.sorted_[i];
    }
    return F;
}

double KernelFunctionals::d_exponent() const {
    return env_.kind == Envelope::Kind::power ? double(dim_) / env_.param : 0.0;
}

double KernelFunctionals::tail_alpha_max() const {
    const double rho = outer_ - R_;
    if (env_.kind == Envelope::Kind::compact) return env_.param + R_ > outer_ ? ball_ * env_.c : 0.0;
    return ball_ * env_(rho);
}

double KernelFunctionals::tail_d(double alpha) const {
    if (!(alpha > 0.0)) return kInf;
    const double t = alpha / ball_;
    double r;
    switch (env_.kind) {
        case Envelope::Kind::compact:
            if (t >= env_.c) return 0.0;
            r = env_.param;
            break;
        case Envelope::Kind::exponential:
            if (t >= env_.c) return 0.0;
            r = std::log(env_.c / t) / env_.param;
            break;
        case Envelope::Kind::power: r = std::pow(env_.c / t, 1.0 / env_.param); break;
        default: return kInf;
    }
    return std::max(0.0, ball_volume(R_ + r, dim_) - ball_volume(outer_, dim_));
}

double KernelFunctionals::tail_moment(double a, double b, int k) const {
    const double am = tail_alpha_max();
    if (!(am > 0.0) || a >= am) return 0.0;
    b = std::min(b, am);
    if (a <= 0.0 && env_.kind == Envelope::Kind::power && d_exponent() >= k + 1.0) return kInf;
    // alpha = am e^{-u}
    const double ua = a > 0.0 ? std::log(am / a) : kInf, ub = std::log(am / b);
    auto f = [&](double u) {
        const double al = am * std::exp(-u);
        const double td = al > 0.0 ? tail_d(al) : kInf;
        // Past overflow the integrand is below alpha^{k+1-q}, negligible.
        if (td == 0.0 || !std::isfinite(td)) return 0.0;
        const double v = std::pow(al, k + 1) * td;
        return std::isfinite(v) ? v : 0.0;
    };
    return integrate(f, ub, ua);
}

double KernelFunctionals::distribution(double alpha) const {
    if (!(alpha > 0.0)) throw ArgumentError("distribution: alpha must be positive");
    const auto above = sorted_.end() - std::upper_bound(sorted_.begin(), sorted_.end(), alpha);
    return cell_volume_ * double(above) + tail_d(alpha);
}

double KernelFunctionals::h(double x) const {
    if (!(x > 0.0)) throw ArgumentError("h: x must be positive");
    const double a = 1.0 / x;
    const std::size_t k = std::upper_bound(sorted_.begin(), sorted_.end(), a) - sorted_.begin();
    const double grid = cell_volume_ * (prefix_[k] + double(sorted_.size() - k) * a);
    return x * (grid + tail_moment(0.0, a, 0));
}

double KernelFunctionals::upper(double x) const {
    if (!(x > 0.0)) throw ArgumentError("upper: x must be positive");
    const double a = 1.0 / x;
    const std::size_t k = std::upper_bound(sorted_.begin(), sorted_.end(), a) - sorted_.begin();
    const double grid = cell_volume_ * ((prefix_.back() - prefix_[k]) - double(sorted_.size() - k) * a);
    return x * (grid + tail_moment(a, kInf, 0));
}

double KernelFunctionals::lower_second(double x) const {
    if (!(x > 0.0)) throw ArgumentError("lower_second: x must be positive");
    const double a = 1.0 / x;
    const std::size_t k = std::upper_bound(sorted_.begin(), sorted_.end(), a) - sorted_.begin();
    const double grid = 0.5 * cell_volume_ * (prefix_sq_[k] + double(sorted_.size() - k) * a * a);
    return x * x * (grid + tail_moment(0.0, a, 1));
}

double KernelFunctionals::l1() const { return cell_volume_ * prefix_.back() + tail_moment(0.0, kInf, 0); }

namespace {

std::optional<Weight> tabulate(const std::function<double(double)>& f, TailGrowth growth) {
    auto xs = weight_nodes();
    std::vector<double> ws;
    for (double x : xs) {
        const double v = f(x);
        if (!std::isfinite(v)) return std::nullopt;
        ws.push_back(v);
    }
    return Weight::table(std::move(xs), std::move(ws), growth);
}

}  // namespace

// Growth in x: an exponential envelope gives d(alpha) ~ log(1/alpha)^d and a
// power envelope r^-beta gives d(alpha) ~ alpha^{-d/beta}.
std::optional<Weight> KernelFunctionals::h_weight() const {
    const double q = d_exponent();
    switch (env_.kind) {
        case Envelope::Kind::compact: return tabulate([this](double x) { return h(x); }, TailGrowth::bounded());
        case Envelope::Kind::exponential:
            return tabulate([this](double x) { return h(x); }, TailGrowth::log_power(double(dim_)));
        case Envelope::Kind::power:
            if (q >= 1.0) return std::nullopt;
            return tabulate([this](double x) { return h(x); }, TailGrowth::power(q));
        default: return std::nullopt;
    }
}

std::optional<Weight> KernelFunctionals::upper_weight() const {
    const double q = env_.kind == Envelope::Kind::power ? std::max(1.0, d_exponent()) : 1.0;
    if (!env_.declared()) return std::nullopt;
    return tabulate([this](double x) { return upper(x); }, TailGrowth::power(q));
}

std::optional<Weight> KernelFunctionals::lower_second_weight() const {
    const double q = d_exponent();
    switch (env_.kind) {
        case Envelope::Kind::compact:
            return tabulate([this](double x) { return lower_second(x); }, TailGrowth::bounded());
        case Envelope::Kind::exponential:
            return tabulate([this](double x) { return lower_second(x); }, TailGrowth::log_power(double(dim_)));
        case Envelope::Kind::power:
            if (q >= 2.0) return std::nullopt;
            return tabulate([this](double x) { return lower_second(x); }, TailGrowth::power(q));
        default: return std::nullopt;
    }
}

std::optional<Weight> KernelFunctionals::distribution_weight() const {
    auto f = [this](double x) { return distribution(1.0 / x); };
    switch (env_.kind) {
        case Envelope::Kind::compact: return tabulate(f, TailGrowth::bounded());
        case Envelope::Kind::exponential: return tabulate(f, TailGrowth::log_power(double(dim_)));
        case Envelope::Kind::power: return tabulate(f, TailGrowth::power(d_exponent()));
        default: return std::nullopt;
    }
}

std::string KernelFunctionals::tail_note() const {
    std::ostringstream os;
    os << "envelope " << env_.describe() << " beyond r = " << outer_ << "; ";
    const double q = d_exponent();
    switch (env_.kind) {
        case Envelope::Kind::compact: os << "h_R and d_{G_R}(1/x) bounded in x"; break;
        case Envelope::Kind::exponential: os << "h_R and d_{G_R}(1/x) grow like log(x)^" << dim_; break;
        case Envelope::Kind::power:
            os << "d_{G_R}(1/x) grows like x^" << q;
            if (q >= 1.0) os << "; h_R is infinite (G_R not integrable)";
            break;
        default: os << "no envelope"; break;
    }
    return os.str();
}

}  // namespace lcarma
