#pragma once

#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcarma/grid.hpp"
#include "lcarma/polynomial.hpp"

namespace lcarma {

// Volume of the radius-r ball in R^d.
double ball_volume(double r, std::size_t d);

// Radial bound on |G| beyond the grid. For `compact` the kernel vanishes for
// r > param; `exponential` is c e^{-param r}; `power` is c r^{-param}.
struct Envelope {
    enum class Kind { none, compact, exponential, power };
    Kind kind = Kind::none;
    double c = 0.0;
    double param = 0.0;

    static Envelope compact(double radius, double bound) { return {Kind::compact, bound, radius}; }
    static Envelope exponential(double c, double rate) { return {Kind::exponential, c, rate}; }
    static Envelope power(double c, double exponent) { return {Kind::power, c, exponent}; }

    bool declared() const { return kind != Kind::none; }
    double operator()(double r) const;
    // int_{|x| > rho} envelope(|x|) dx in R^d (infinite when it diverges).
    double mass_beyond(double rho, std::size_t d) const;
    std::string describe() const;
    nlohmann::json to_json() const;
    static Envelope from_json(const nlohmann::json& j);
};

// Where a kernel came from; `alpha` is set only for regularized kernels.
struct KernelProvenance {
    std::string kind;
    std::optional<MultiPolynomial> p, q;
    std::optional<int> alpha;
    int images = 0;
    std::string note;
    nlohmann::json to_json() const;
};

// Kernel samples on a centred lag grid (lag 0 at center_index on every axis).
struct KernelGrid {
    GridSpec grid;
    std::vector<double> values;
    Envelope envelope;
    KernelProvenance provenance;
    double error_estimate = 0.0;  // absolute, from the frequency-extent comparison
    double imag_residue = 0.0;    // relative, discarded imaginary part

    double max_abs() const;
    double value_at_lag(const std::vector<long>& lag) const;
};

// Per-radial-bin maxima on the outer 10% shell of the significant region,
// regressed as exponential and as power decay; the better fit wins. Values
// at or below max(1e-12 max|G|, noise_floor) count as zero. Periodised
// kernels pass max_radius below the half period, where images of the kernel
// flatten the decay.
Envelope fit_envelope(const GridSpec& g, const std::vector<double>& values, double noise_floor = 0.0,
                      double max_radius = std::numeric_limits<double>::infinity());

struct KernelOptions {
    // Image counts M1 < M2 for the aliasing sum; -1 picks the dimension default
    // (64/128 for d = 1, 8/16 for d = 2, 2/3 otherwise). images_hi = 0 samples
    // the symbol on the dual grid only.
    int images_lo = -1;
    int images_hi = -1;
    // Require envelope(boundary) < 1e-6 max|G|.
    bool check_extent = true;
    std::optional<Envelope> envelope;
};

// G = F^{-1}[q(i.)/p(i.)] on a centred grid. Samples of the periodised kernel
// are recovered from the Poisson sum of the symbol over images, truncated at M1
// and M2 and extrapolated in 1/M.
KernelGrid kernel_fft(const MultiPolynomial& p, const MultiPolynomial& q, const GridSpec& grid,
                      const KernelOptions& opt = {});

// G_psi = F^{-1}[q(-i.)/(psi p(-i.))], psi = (1 + |xi|^2)^alpha, sampled on
// the dual grid only so that the DFT of the samples is the symbol itself.
KernelGrid kernel_regularized(const MultiPolynomial& p, const MultiPolynomial& q, int alpha,
                              const GridSpec& grid, const KernelOptions& opt = {});

// 1-D state space: a(z) = z^p + a_1 z^{p-1} + ... + a_p, b(z) = b_0 + ... + b_q z^q.
struct Carma1dStateSpace {
    std::vector<double> a;  // a_1 .. a_p
    std::vector<double> b;  // b_0 .. b_q, q < p

    std::size_t order() const { return a.size(); }
    void validate() const;
    // From 1-D polynomials p (leading coefficient nonzero, rescaled to monic) and q.
    static Carma1dStateSpace from_polynomials(const MultiPolynomial& p, const MultiPolynomial& q);
};

// Value assigned at t = 0 when g jumps there (q = p - 1).
enum class JumpValue { right_limit, midpoint };

// g(t) = b^T e^{At} e_p for t >= 0, 0 for t < 0.
KernelGrid kernel_carma1d(const Carma1dStateSpace& ss, const GridSpec& grid,
                          JumpValue at_zero = JumpValue::right_limit);

// Isotropic kernel sum_i b(lambda_i)/a'(lambda_i) e^{lambda_i |t|} with
// a(z) = prod (z^2 - lambda_i^2), b(z) = prod (z^2 - kappa_j^2). Complex roots
// must come in conjugate pairs.
struct BMKernelSpec {
    std::vector<std::complex<double>> lambda;
    std::vector<std::complex<double>> kappa;
    std::size_t dim = 1;
    void validate() const;
    // Residue coefficients b(lambda_i)/a'(lambda_i).
    std::vector<std::complex<double>> coefficients() const;
};

KernelGrid kernel_bm(const BMKernelSpec& spec, const GridSpec& grid);

// Fundamental solution of lambda - Delta in d = 3: e^{-sqrt(lambda) r}/(4 pi r).
// The origin cell holds the cell average.
KernelGrid kernel_matern3(double lambda, const GridSpec& grid);

// Fundamental solution of -Delta for d >= 3: Gamma(d/2 - 1)/(4 pi^{d/2}) r^{2-d},
// origin cell averaged.
KernelGrid kernel_newtonian(const GridSpec& grid);

// Discrete delta: 1/cell_volume at lag 0.
KernelGrid kernel_delta(const GridSpec& grid);

// Arbitrary kernel from point samples f(x) with a user-declared envelope.
KernelGrid kernel_from_function(const GridSpec& grid, const std::function<double(const double*)>& f,
                                Envelope envelope, std::string note = "user function");

}  // namespace lcarma
