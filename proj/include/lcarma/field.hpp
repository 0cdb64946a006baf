#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lcarma/kernels.hpp"
#include "lcarma/levy.hpp"
#include "lcarma/polynomial.hpp"
#include "lcarma/symbols.hpp"

namespace lcarma {

// phi(x) = amplitude exp(-1 / (1 - |(x - center)/radius|^2)) inside the ball.
struct TestFunction {
    GridFunction phi;
    std::vector<double> center;
    double radius = 1.0;
    double amplitude = 1.0;
    std::size_t pad_cells = 2;
    double integral = 0.0;  // cell sum of phi times the cell volume
};

// Throws PreconditionError unless the support stays pad_cells inside the grid.
TestFunction bump(const std::vector<double>& center, double radius, double amplitude, const GridSpec& grid,
                  std::size_t pad_cells = 2);

struct FieldRealization {
    GridFunction field;
    std::string kernel;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::string construction = "mild_convolution";
};

// Kernel mass beyond the half extent of the torus, relative to the total. Uses
// the envelope when declared, else the samples beyond 0.9 of the half extent.
double wrap_fraction(const KernelGrid& K);

// X(t_i) = sum_c G(t_i - x_c) dL_c, circular on the noise grid. The kernel grid
// must be the centred lag grid of the noise grid (same counts and spacing).
FieldRealization simulate_mild(const KernelGrid& K, const CellNoise& n, double wrap_threshold = 1e-6);

// sum_c phi(x_c) dL_c
double pair_whitenoise(const CellNoise& n, const GridFunction& phi);
double pair_whitenoise(const CellNoise& n, const TestFunction& phi);

// <L, K_psi * (1 - Delta)^alpha phi>, with the kernel and regularizer fused
// into one multiplier. The kernel must come from kernel_regularized with alpha.
double pair_generalized(const KernelGrid& Kpsi, int alpha, const CellNoise& n, const GridFunction& phi);
double pair_generalized(const KernelGrid& Kpsi, int alpha, const CellNoise& n, const TestFunction& phi);

// The weight w = K_psi * (1 - Delta)^alpha phi itself.
GridFunction generalized_weight(const KernelGrid& Kpsi, int alpha, const GridFunction& phi);

struct SpdeResidual {
    double lhs = 0.0;  // <s, p(D)* phi>
    double rhs = 0.0;  // <L, q(D)* phi>
    double residual = 0.0;
    double normalizer = 1.0;  // max(|lhs|, |rhs|, 1)
    double relative() const { return residual / normalizer; }
};

// Exact to roundoff on odd-length axes. On an even axis the Nyquist plane
// keeps only real parts of each factor, so phi's content there shows up.
SpdeResidual spde_residual(const MultiPolynomial& p, const MultiPolynomial& q, const KernelGrid& Kpsi, int alpha,
                           const CellNoise& n, const TestFunction& phi);

struct FubiniResult {
    double lhs = 0.0;  // sum_i X(x_i) phi(x_i) cellvol
    double rhs = 0.0;  // sum_c (G(-.) * phi)(x_c) dL_c
    double diff = 0.0; // |lhs - rhs| / max(|lhs|, |rhs|), 0 when both vanish
};

FubiniResult fubini_check(const KernelGrid& K, const CellNoise& n, const TestFunction& phi);

// Multiplies the kernel's DFT at lag-frequency index k (and -k) by 1 + eps.
// Used to show that the residual tests can fail.
KernelGrid inject_symbol_fault(const KernelGrid& K, const std::vector<long>& k, double eps);

}  // namespace lcarma
