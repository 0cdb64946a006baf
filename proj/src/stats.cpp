#include "lcarma/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lcarma/errors.hpp"
#include "lcarma/fft.hpp"

namespace lcarma {

namespace {

const GridSpec& common_grid(const std::vector<FieldRealization>& fields, const char* what) {
    if (fields.empty()) throw ArgumentError(std::string(what) + ": no realizations");
    const GridSpec& g = fields.front().field.grid;
    for (const auto& f : fields)
        if (!(f.field.grid == g) || f.field.values.size() != g.size())
            throw ArgumentError(std::string(what) + ": realizations live on different grids");
    return g;
}

std::string lag_string(const std::vector<long>& lag) {
    std::string s;
    for (std::size_t j = 0; j < lag.size(); ++j) s += (j ? " " : "") + std::to_string(lag[j]);
    return s;
}

}  // namespace

double mc_tolerance(double stated, std::size_t n) {
    return std::max(stated, n ? 4.0 / std::sqrt(double(n)) : 1.0);
}

CharFunctionalReport char_functional_test(const LevyTriplet& t, const GridFunction& w,
                                          const std::vector<double>& samples, const std::vector<double>& u) {
    if (samples.size() < 1000) throw ArgumentError("char_functional_test: need at least 1000 samples");
    if (w.values.size() != w.grid.size()) throw ArgumentError("char_functional_test: weight does not match its grid");
    t.validate();
    CharFunctionalReport r;
    r.u = u;
    r.n = samples.size();
    const double cv = w.grid.cell_volume(), inv_n = 1.0 / double(r.n);
    for (double uk : u) {
        std::complex<double> e = 0.0;
        for (double s : samples) e += std::polar(1.0, uk * s);
        e *= inv_n;
        std::complex<double> psi = 0.0;
        for (double wv : w.values)
            if (wv != 0.0) psi += char_exponent(t, uk * wv);
        const auto th = std::exp(psi * cv);
        r.empirical.push_back(uk == 0.0 ? std::complex<double>(1.0) : e);
        r.theoretical.push_back(th);
        r.sup_deviation = std::max(r.sup_deviation, std::abs(r.empirical.back() - th));
    }
    return r;
}

std::string CharFunctionalReport::csv() const {
    std::ostringstream o;
    o.precision(17);
    o << "u,re_emp,im_emp,re_theo,im_theo,abs_diff\n";
    for (std::size_t k = 0; k < u.size(); ++k)
        o << u[k] << ',' << empirical[k].real() << ',' << empirical[k].imag() << ',' << theoretical[k].real() << ','
          << theoretical[k].imag() << ',' << std::abs(empirical[k] - theoretical[k]) << '\n';
    return o.str();
}

double noise_variance(const LevyTriplet& t) {
    auto m = cell_moments(t, 1.0);
    if (!m.variance) throw PreconditionError("noise has no second moment; the spectral density is undefined");
    return *m.variance;
}

std::vector<double> spectral_density(const MultiPolynomial& p, const MultiPolynomial& q, double sigma2,
                                     const std::vector<std::vector<double>>& xi) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw PreconditionError("spectral_density: sigma2 must be finite and positive");
    if (p.dim() != q.dim()) throw ArgumentError("spectral_density: p and q differ in dimension");
    std::vector<double> f;
    f.reserve(xi.size());
    for (const auto& x : xi) {
        if (x.size() != p.dim()) throw ArgumentError("spectral_density: frequency has the wrong dimension");
        const auto pv = p.symbol(x.data());
        if (pv == 0.0) throw SingularSymbolError("spectral_density: p(i xi) vanishes");
        f.push_back(sigma2 * std::norm(q.symbol(x.data()) / pv));
    }
    return f;
}

PeriodogramReport periodogram_compare(const std::vector<FieldRealization>& fields, const MultiPolynomial& p,
                                      const MultiPolynomial& q, double sigma2, Band band) {
    if (fields.size() < 50) throw ArgumentError("periodogram_compare: need at least 50 realizations");
    if (!(0.0 <= band.low && band.low < band.high && band.high <= 1.0))
        throw ArgumentError("periodogram_compare: band must satisfy 0 <= low < high <= 1");
    const GridSpec& g = common_grid(fields, "periodogram_compare");
    const std::size_t d = g.dim(), N = g.size();
    if (p.dim() != d) throw ArgumentError("periodogram_compare: polynomial dimension differs from the grid");
    Fft fft(g.counts);
    std::vector<double> avg(N, 0.0);
    for (const auto& f : fields) {
        auto X = fft.forward(std::span<const double>(f.field.values));
        for (std::size_t k = 0; k < N; ++k) avg[k] += std::norm(X[k]);
    }
    const double scale = g.cell_volume() / double(N) / double(fields.size());
    std::vector<std::vector<double>> freqs(d);
    for (std::size_t j = 0; j < d; ++j) freqs[j] = angular_frequencies(g.counts[j], g.spacing[j]);

    PeriodogramReport r;
    r.realizations = fields.size();
    std::vector<std::vector<double>> xi;
    std::vector<std::size_t> idx(d);
    for (std::size_t k = 0; k < N; ++k) {
        g.unravel(k, idx);
        std::vector<double> x(d);
        double frac = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            x[j] = freqs[j][idx[j]];
            frac = std::max(frac, std::abs(x[j]) * g.spacing[j] / M_PI);
        }
        if (frac < band.low || frac > band.high) continue;
        double n2 = 0.0;
        for (double v : x) n2 += v * v;
        r.xi.push_back(std::sqrt(n2));
        r.periodogram.push_back(avg[k] * scale);
        xi.push_back(std::move(x));
    }
    if (xi.empty()) throw ArgumentError("periodogram_compare: band contains no frequencies");
    r.density = spectral_density(p, q, sigma2, xi);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < xi.size(); ++k) {
        num += std::abs(r.periodogram[k] - r.density[k]);
        den += r.density[k];
    }
    r.relative_l1 = num / den;
    return r;
}

std::string PeriodogramReport::csv() const {
    std::ostringstream o;
    o.precision(17);
    o << "xi_norm,periodogram,density\n";
    for (std::size_t k = 0; k < xi.size(); ++k) o << xi[k] << ',' << periodogram[k] << ',' << density[k] << '\n';
    return o.str();
}

std::vector<AutocovarianceRow> autocovariance_compare(const std::vector<FieldRealization>& fields,
                                                      const KernelGrid& K, double sigma2,
                                                      const std::vector<std::vector<long>>& lags) {
    const GridSpec& g = common_grid(fields, "autocovariance_compare");
    if (!K.grid.same_shape(g)) throw ArgumentError("autocovariance_compare: kernel grid differs from the field grid");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw PreconditionError("autocovariance_compare: sigma2 must be finite and positive");
    const std::size_t d = g.dim(), N = g.size();
    Fft fft(g.counts);

    // sigma2 cellvol sum_y G(y) G(y + l): inverse DFT of |DFT G|^2.
    auto Gk = fft.forward(std::span<const double>(to_wrapped(K.grid, K.values)));
    for (auto& v : Gk) v = std::norm(v);
    auto corr = fft.inverse(Gk);

    std::vector<std::size_t> shift_idx(d), idx(d);
    std::vector<AutocovarianceRow> rows;
    for (const auto& lag : lags) {
        if (lag.size() != d) throw ArgumentError("autocovariance_compare: lag has the wrong dimension");
        std::vector<std::size_t> w(d);
        for (std::size_t j = 0; j < d; ++j) {
            const long n = long(g.counts[j]);
            w[j] = std::size_t(((lag[j] % n) + n) % n);
        }
        AutocovarianceRow row;
        row.lag = lag;
        row.theoretical = sigma2 * g.cell_volume() * corr[g.ravel(w)].real();
        std::vector<double> per;
        for (const auto& f : fields) {
            double s = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                g.unravel(i, idx);
                for (std::size_t j = 0; j < d; ++j) shift_idx[j] = (idx[j] + w[j]) % g.counts[j];
                s += f.field.values[i] * f.field.values[g.ravel(shift_idx)];
            }
            per.push_back(s / double(N));
        }
        double mean = 0.0;
        for (double v : per) mean += v;
        mean /= double(per.size());
        double var = 0.0;
        for (double v : per) var += (v - mean) * (v - mean);
        row.empirical = mean;
        row.std_error = per.size() > 1 ? std::sqrt(var / double(per.size() - 1) / double(per.size())) : 0.0;
        row.relative_error =
            row.theoretical != 0.0 ? std::abs(mean - row.theoretical) / std::abs(row.theoretical) : std::abs(mean);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string autocovariance_csv(const std::vector<AutocovarianceRow>& rows) {
    std::ostringstream o;
    o.precision(17);
    o << "lag,empirical,theoretical,std_error,relative_error\n";
    for (const auto& r : rows)
        o << lag_string(r.lag) << ',' << r.empirical << ',' << r.theoretical << ',' << r.std_error << ','
          << r.relative_error << '\n';
    return o.str();
}

std::vector<MomentRow> moment_scan(const std::vector<std::vector<FieldRealization>>& levels,
                                   const std::vector<double>& betas) {
    if (levels.size() < 2) throw ArgumentError("moment_scan: need at least two refinement levels");
    for (const auto& l : levels) common_grid(l, "moment_scan");
    std::vector<MomentRow> rows;
    for (double beta : betas) {
        if (!(beta >= 0.0)) throw ArgumentError("moment_scan: beta must be non-negative");
        MomentRow row;
        row.beta = beta;
        for (const auto& l : levels) {
            double s = 0.0;
            std::size_t n = 0;
            for (const auto& f : l) {
                for (double v : f.field.values) s += beta == 0.0 ? 1.0 : std::pow(std::abs(v), beta);
                n += f.field.values.size();
            }
            row.moments.push_back(s / double(n));
        }
        for (std::size_t k = 1; k < row.moments.size(); ++k) {
            const double a = row.moments[k - 1], b = row.moments[k];
            const double ratio = a > 0.0 ? b / a : (b > 0.0 ? INFINITY : 1.0);
            row.ratios.push_back(ratio);
            if (ratio >= 10.0) row.divergence_suspected = true;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string moments_csv(const std::vector<MomentRow>& rows) {
    std::ostringstream o;
    o.precision(17);
    o << "beta,level,moment,ratio_to_previous,divergence_suspected\n";
    for (const auto& r : rows)
        for (std::size_t k = 0; k < r.moments.size(); ++k) {
            o << r.beta << ',' << k << ',' << r.moments[k] << ',';
            if (k) o << r.ratios[k - 1];
            o << ',' << (r.divergence_suspected ? "heuristic_yes" : "no") << '\n';
        }
    return o.str();
}

BMSymbolFit bm_symbol_check(const BMKernelSpec& spec, const GridSpec& grid, double xi_max) {
    spec.validate();
    if (spec.dim < 1 || spec.dim > 3) throw ArgumentError("bm_symbol_check: dimension must be 1, 2 or 3");
    if (!(xi_max > 0.0)) throw ArgumentError("bm_symbol_check: xi_max must be positive");
    auto K = kernel_bm(spec, grid);
    const std::size_t d = grid.dim(), N = grid.size();
    Fft fft(grid.counts);
    auto S = fft.forward(std::span<const double>(to_wrapped(grid, K.values)));
    const double cv = grid.cell_volume();

    const auto c = spec.coefficients();
    const double expo = 0.5 * double(d + 1);
    std::vector<std::vector<double>> freqs(d);
    for (std::size_t j = 0; j < d; ++j) freqs[j] = angular_frequencies(grid.counts[j], grid.spacing[j]);

    std::vector<std::size_t> idx(d), neg(d);
    double rr = 0.0, gr = 0.0, gg = 0.0, gr_ref = 0.0, gg_ref = 0.0;
    std::vector<double> gs, gs_ref, rs;
    for (std::size_t k = 0; k < N; ++k) {
        grid.unravel(k, idx);
        double n2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            n2 += freqs[j][idx[j]] * freqs[j][idx[j]];
            neg[j] = (grid.counts[j] - idx[j]) % grid.counts[j];
        }
        if (n2 > xi_max * xi_max) continue;
        std::complex<double> R = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i)
            R += 2.0 * spec.lambda[i] * c[i] / std::pow(n2 + spec.lambda[i] * spec.lambda[i], expo);
        const double g = cv * S[k].real(), gm = cv * S[grid.ravel(neg)].real();
        gs.push_back(g);
        gs_ref.push_back(gm);
        rs.push_back(R.real());
        rr += R.real() * R.real();
        gr += g * R.real();
        gg += g * g;
        gr_ref += gm * R.real();
        gg_ref += gm * gm;
    }
    if (rs.empty() || rr == 0.0) throw ArgumentError("bm_symbol_check: no frequencies below xi_max");
    BMSymbolFit f;
    f.points = rs.size();
    f.c = gr / rr;
    double e = 0.0, e_ref = 0.0;
    for (std::size_t k = 0; k < rs.size(); ++k) {
        e += std::pow(gs[k] - f.c * rs[k], 2);
        e_ref += std::pow(gs_ref[k] - f.c * rs[k], 2);
    }
    f.residual = std::sqrt(e / gg);
    f.residual_reflected = std::sqrt(e_ref / gg_ref);
    return f;
}

}  // namespace lcarma
