#pragma once

#include <string>
#include <vector>

#include "lcarma/fft.hpp"
#include "lcarma/grid.hpp"
#include "lcarma/polynomial.hpp"

namespace lcarma {

// Spectral action of P(D) (or P(D)* = P(-D) when adjoint is set) on a real
// grid function. The support of f must stay `pad_cells` away from every face.
GridFunction apply_operator(const MultiPolynomial& P, const GridFunction& f, bool adjoint,
                            std::size_t pad_cells = 2, const Fft* fft = nullptr);

// Multiplier array P(+-i xi) on the dual grid of g (Hermitian-projected).
std::vector<cplx> operator_multiplier(const MultiPolynomial& P, const GridSpec& g, bool adjoint);

// Tolerance below which |p| counts as a root: 1e-9 * (1 + ||coefficients||).
double root_tolerance(const MultiPolynomial& p);

enum class StripVerdict { holds_on_box, fails, inconclusive };
std::string to_string(StripVerdict v);

// Semi-decision for the strip hypothesis: |p(i xi + eta)| sampled for xi on a
// box grid and eta on spheres of radius eps/4 .. eps (and eta = 0). Outside the
// box only the leading form is checked on the real sphere; if it vanishes and
// the box minimum sits on the box boundary the verdict is inconclusive.
struct StripReport {
    double epsilon_tested = 0.0;
    double min_abs_p = 0.0;
    double box_halfwidth = 0.0;
    int grid_resolution = 0;
    double tolerance = 0.0;
    double leading_form_min = 0.0;
    bool min_on_box_boundary = false;
    StripVerdict verdict = StripVerdict::inconclusive;
};

StripReport check_strip(const MultiPolynomial& p, const MultiPolynomial& q, double epsilon,
                        double box_halfwidth, int resolution);

// sup over sampled eta of || q(i. + eta) / p(i. + eta) ||_{L2([-E,E]^d)} for
// each extent E in the schedule.
struct L2StripResult {
    std::vector<double> extents;
    std::vector<double> sup_norms;
    double estimate = 0.0;
    bool converged = false;
};

std::vector<double> default_extent_schedule();

L2StripResult l2_strip_sup(const MultiPolynomial& p, const MultiPolynomial& q, double epsilon,
                           const std::vector<double>& extents = default_extent_schedule());

// Smallest alpha in 1..8 such that q / (p psi_alpha) is square integrable along
// the strip. The strip width used is min(eps, 1/2) because psi_alpha itself has
// zeros once |eta| reaches 1.
int select_alpha(const MultiPolynomial& p, const MultiPolynomial& q, double epsilon);

}  // namespace lcarma
