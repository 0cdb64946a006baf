#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lcarma/kernels.hpp"
#include "lcarma/levy.hpp"
#include "lcarma/symbols.hpp"

namespace lcarma {

// G_R(x) = int_{B_R(x)} |G|, its distribution function d(alpha) = |{G_R > alpha}|
// and the weights built from it. G_R is computed on the kernel grid padded by
// R; beyond the padded box G_R is bounded by |B_R| env(|x| - R), which adds
// the measure of a spherical shell to d. The grid part of every integral of d
// is exact on the sorted levels.
class KernelFunctionals {
public:
    double radius() const { return R_; }
    const GridFunction& g_r() const { return g_r_; }
    const Envelope& envelope() const { return env_; }

    // d(alpha) for alpha > 0.
    double distribution(double alpha) const;
    // x int_0^{1/x} d
    double h(double x) const;
    // x int_{1/x}^inf d
    double upper(double x) const;
    // x^2 int_0^{1/x} alpha d(alpha)
    double lower_second(double x) const;
    // int_0^inf d = ||G_R||_1 (grid part plus tail)
    double l1() const;

    // Weights on x = |r| >= 1, tabulated on log-spaced nodes in [1, 1e8] with the
    // growth the envelope implies. Empty when the weight is infinite for every x.
    std::optional<Weight> h_weight() const;
    std::optional<Weight> upper_weight() const;
    std::optional<Weight> lower_second_weight() const;
    std::optional<Weight> distribution_weight() const;

    // Growth class of each weight in x, as a string for reports.
    std::string tail_note() const;

    friend KernelFunctionals kernel_functionals(const KernelGrid& K, double R);

private:
    double tail_d(double alpha) const;
    double tail_alpha_max() const;
    // int_a^b alpha^k tail_d(alpha) d alpha, b may be the support end.
    double tail_moment(double a, double b, int k) const;
    double d_exponent() const;  // d / beta for power envelopes

    double R_ = 0.0;
    std::size_t dim_ = 0;
    double cell_volume_ = 0.0;
    double ball_ = 0.0;   // |B_R|
    double outer_ = 0.0;  // inscribed radius of the padded box
    GridFunction g_r_;
    Envelope env_;
    std::vector<double> sorted_;  // positive levels, ascending
    std::vector<double> prefix_, prefix_sq_;
};

// Requires a declared envelope (PreconditionError otherwise).
KernelFunctionals kernel_functionals(const KernelGrid& K, double R);

// Log-spaced nodes on [1, 1e8] used for the weight tables.
std::vector<double> weight_nodes();

}  // namespace lcarma
