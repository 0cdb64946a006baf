#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcarma/field.hpp"
#include "lcarma/kernels.hpp"
#include "lcarma/levy.hpp"
#include "lcarma/polynomial.hpp"

namespace lcarma {

// Monte Carlo tolerance: max(stated, 4/sqrt(n)).
double mc_tolerance(double stated, std::size_t n);

struct CharFunctionalReport {
    std::vector<double> u;
    std::vector<std::complex<double>> empirical;
    std::vector<std::complex<double>> theoretical;
    double sup_deviation = 0.0;
    std::size_t n = 0;
    double tolerance() const { return mc_tolerance(0.0, n); }
    std::string csv() const;
};

// Empirical CF of samples of sum_c w(x_c) dL_c against exp(sum_c psi(u w(x_c)) cellvol).
// Requires at least 1000 samples.
CharFunctionalReport char_functional_test(const LevyTriplet& t, const GridFunction& w,
                                          const std::vector<double>& samples, const std::vector<double>& u);

// Noise variance per unit volume, a + int r^2 nu. Throws PreconditionError when infinite.
double noise_variance(const LevyTriplet& t);

// sigma2 |q(i xi) / p(i xi)|^2 at each point xi.
std::vector<double> spectral_density(const MultiPolynomial& p, const MultiPolynomial& q, double sigma2,
                                     const std::vector<std::vector<double>>& xi);

// Fractions of the per-axis Nyquist frequency kept by the periodogram comparison.
struct Band {
    double low = 0.05;
    double high = 0.8;
};

struct PeriodogramReport {
    std::vector<double> xi;          // |xi| of each band frequency
    std::vector<double> periodogram; // averaged, cell-volume normalised
    std::vector<double> density;
    double relative_l1 = 0.0;
    std::size_t realizations = 0;
    std::string csv() const;
};

// Averaged cellvol |DFT X|^2 / N (white noise gives sigma2) against
// spectral_density on the band. Needs at least 50 realizations on one grid.
PeriodogramReport periodogram_compare(const std::vector<FieldRealization>& fields, const MultiPolynomial& p,
                                      const MultiPolynomial& q, double sigma2, Band band = {});

struct AutocovarianceRow {
    std::vector<long> lag;
    double empirical = 0.0;
    double theoretical = 0.0;
    double std_error = 0.0;   // across realizations
    double relative_error = 0.0;
};

// Circular empirical autocovariance against sigma2 cellvol sum_y G(y) G(y + lag).
std::vector<AutocovarianceRow> autocovariance_compare(const std::vector<FieldRealization>& fields,
                                                      const KernelGrid& K, double sigma2,
                                                      const std::vector<std::vector<long>>& lags);
std::string autocovariance_csv(const std::vector<AutocovarianceRow>& rows);

struct MomentRow {
    double beta = 0.0;
    std::vector<double> moments;  // per refinement level
    std::vector<double> ratios;   // level k+1 over level k
    // Heuristic: some successive ratio is at least 10.
    bool divergence_suspected = false;
};

// Empirical E|X|^beta over all cells of all realizations at each refinement
// level (coarse to fine). Needs at least two levels.
std::vector<MomentRow> moment_scan(const std::vector<std::vector<FieldRealization>>& levels,
                                   const std::vector<double>& betas);
std::string moments_csv(const std::vector<MomentRow>& rows);

struct BMSymbolFit {
    double c = 0.0;               // fitted c_d
    double residual = 0.0;        // ||G^ - c R|| / ||G^|| on the fitted frequencies
    double residual_reflected = 0.0;  // same with G^(-xi)
    std::size_t points = 0;
};

// c_d sum_i 2 l_i b(l_i) / (a'(l_i) (|xi|^2 + l_i^2)^{(d+1)/2}) fitted by least
// squares to cellvol DFT of kernel_bm on the grid, for |xi| <= xi_max.
BMSymbolFit bm_symbol_check(const BMKernelSpec& spec, const GridSpec& grid, double xi_max);

}  // namespace lcarma
