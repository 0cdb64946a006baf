#include "lcarma/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "lcarma/errors.hpp"

namespace lcarma {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    explicit FftwBuffer(std::size_t n)
        : p(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * std::max<std::size_t>(n, 1)))) {
        if (!p) throw ResourceError("fft: allocation failed");
    }
    ~FftwBuffer() { fftw_free(p); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    fftw_complex* p;
};

}  // namespace

Fft::Fft(std::vector<std::size_t> counts) : counts_(std::move(counts)) {
    if (counts_.empty()) throw ArgumentError("fft: empty shape");
    n_ = 1;
    std::vector<int> dims;
    for (auto c : counts_) {
        if (c == 0) throw ArgumentError("fft: zero-length axis");
        n_ *= c;
        dims.push_back(static_cast<int>(c));
    }
    FftwBuffer tmp(n_);
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd_ = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), tmp.p, tmp.p, FFTW_FORWARD,
                         FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), tmp.p, tmp.p, FFTW_BACKWARD,
                         FFTW_ESTIMATE);
    if (!fwd_ || !bwd_) throw ResourceError("fft: planning failed");
}

Fft::~Fft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (fwd_) fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
    if (bwd_) fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

std::vector<cplx> Fft::run(std::span<const cplx> in, bool fwd) const {
    if (in.size() != n_) throw ArgumentError("fft: input length does not match plan shape");
    FftwBuffer buf(n_);
    std::copy(in.begin(), in.end(), reinterpret_cast<cplx*>(buf.p));
    fftw_execute_dft(static_cast<fftw_plan>(fwd ? fwd_ : bwd_), buf.p, buf.p);
    const cplx* out = reinterpret_cast<const cplx*>(buf.p);
    std::vector<cplx> result(out, out + n_);
    if (!fwd) {
        const double s = 1.0 / static_cast<double>(n_);
        for (auto& v : result) v *= s;
    }
    return result;
}

std::vector<cplx> Fft::forward(std::span<const double> x) const {
    std::vector<cplx> c(x.begin(), x.end());
    return run(c, true);
}

std::vector<cplx> Fft::forward(std::span<const cplx> x) const { return run(x, true); }

std::vector<cplx> Fft::inverse(std::span<const cplx> X) const { return run(X, false); }

std::vector<double> angular_frequencies(std::size_t n, double h) {
    std::vector<double> w(n);
    const double base = 2.0 * std::numbers::pi / (static_cast<double>(n) * h);
    for (std::size_t k = 0; k < n; ++k) {
        auto kk = static_cast<long long>(k);
        if (2 * k >= n) kk -= static_cast<long long>(n);
        w[k] = base * static_cast<double>(kk);
    }
    return w;
}

std::vector<cplx> hermitian_symbol(const GridSpec& g, const SymbolFn& symbol) {
    const std::size_t d = g.dim(), n = g.size();
    std::vector<std::vector<double>> freqs(d);
    for (std::size_t j = 0; j < d; ++j) freqs[j] = angular_frequencies(g.counts[j], g.spacing[j]);

    std::vector<cplx> s(n);
    std::vector<std::size_t> idx;
    std::vector<double> xi(d);
    for (std::size_t flat = 0; flat < n; ++flat) {
        g.unravel(flat, idx);
        for (std::size_t j = 0; j < d; ++j) xi[j] = freqs[j][idx[j]];
        s[flat] = symbol(xi.data());
    }

    hermitian_project(g, s);
    return s;
}

void hermitian_project(const GridSpec& g, std::vector<cplx>& s) {
    const std::size_t d = g.dim(), n = g.size();
    if (s.size() != n) throw ArgumentError("hermitian_project: array does not match grid");
    std::vector<cplx> m(n);
    std::vector<std::size_t> idx, mirror(d);
    for (std::size_t flat = 0; flat < n; ++flat) {
        g.unravel(flat, idx);
        for (std::size_t j = 0; j < d; ++j) mirror[j] = (g.counts[j] - idx[j]) % g.counts[j];
        m[flat] = 0.5 * (s[flat] + std::conj(s[g.ravel(mirror)]));
    }
    s = std::move(m);
}

std::vector<double> apply_multiplier(const Fft& fft, std::span<const cplx> multiplier,
                                     std::span<const double> f, double* imag_residue) {
    if (multiplier.size() != f.size()) throw ArgumentError("multiplier and data lengths differ");
    auto F = fft.forward(f);
    for (std::size_t k = 0; k < F.size(); ++k) F[k] *= multiplier[k];
    auto out = fft.inverse(F);
    std::vector<double> re(out.size());
    double im_max = 0.0, re_max = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        re[i] = out[i].real();
        im_max = std::max(im_max, std::abs(out[i].imag()));
        re_max = std::max(re_max, std::abs(re[i]));
    }
    if (imag_residue) *imag_residue = re_max > 0.0 ? im_max / re_max : im_max;
    return re;
}

}  // namespace lcarma
