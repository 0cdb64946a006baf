#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "lcarma/grid.hpp"

namespace lcarma {

using cplx = std::complex<double>;

// Multi-dimensional complex DFT over a fixed shape. Plans are created once
// (FFTW_ESTIMATE, guarded by a global mutex) and executed on per-call buffers,
// so one instance may be shared across threads.
class Fft {
public:
    explicit Fft(std::vector<std::size_t> counts);
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    std::size_t size() const { return n_; }
    const std::vector<std::size_t>& counts() const { return counts_; }

    std::vector<cplx> forward(std::span<const double> x) const;
    std::vector<cplx> forward(std::span<const cplx> x) const;
    // Normalised inverse (includes the 1/N factor).
    std::vector<cplx> inverse(std::span<const cplx> X) const;

private:
    std::vector<cplx> run(std::span<const cplx> in, bool fwd) const;

    std::vector<std::size_t> counts_;
    std::size_t n_ = 0;
    void* fwd_ = nullptr;
    void* bwd_ = nullptr;
};

// Angular frequencies of an n-point DFT with spacing h in FFT order; index n/2
// of an even-length axis is the (negative) Nyquist frequency.
std::vector<double> angular_frequencies(std::size_t n, double h);

// Samples a symbol on the dual grid of g and projects it onto the Hermitian
// arrays: M[k] = (S[k] + conj S[-k]) / 2. Away from Nyquist this is exactly S
// for any symbol with S(-xi) = conj S(xi); on Nyquist planes of even axes it
// keeps the real part, so real inputs stay real after multiplication.
using SymbolFn = std::function<cplx(const double* xi)>;
// In-place projection M[k] <- (M[k] + conj M[-k]) / 2 on the dual grid of g.
void hermitian_project(const GridSpec& g, std::vector<cplx>& m);
std::vector<cplx> hermitian_symbol(const GridSpec& g, const SymbolFn& symbol);

// Applies a Hermitian multiplier to real data: Re IDFT(M * DFT(f)). The
// discarded imaginary part is returned through imag_residue if requested.
std::vector<double> apply_multiplier(const Fft& fft, std::span<const cplx> multiplier,
                                     std::span<const double> f, double* imag_residue = nullptr);

}  // namespace lcarma
