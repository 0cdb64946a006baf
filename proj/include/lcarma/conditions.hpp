#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lcarma/functionals.hpp"
#include "lcarma/kernels.hpp"
#include "lcarma/levy.hpp"
#include "lcarma/polynomial.hpp"

namespace lcarma {

enum class Verdict { holds, fails, not_applicable, inconclusive };
std::string to_string(Verdict v);

struct ConditionEntry {
    std::string name;
    Verdict verdict = Verdict::inconclusive;
    std::vector<std::pair<std::string, double>> values;  // ordered, for reports
    double tolerance = 0.0;
    std::string tail;    // how mass beyond the grid was handled
    std::string detail;  // reason for the verdict
    nlohmann::json to_json() const;
};

struct ConditionReport {
    std::vector<ConditionEntry> entries;

    // Throws ArgumentError when a condition is added twice.
    void add(ConditionEntry e);
    const ConditionEntry* find(const std::string& name) const;
    // exists: a sufficient condition holds; does_not_exist: the necessary
    // condition fails; inconclusive otherwise (the gap between the two).
    std::string summary() const;
    nlohmann::json to_json() const;
    std::string table() const;
};

// Radii R at which the kernel conditions are evaluated.
std::vector<double> default_radii();

// Functionals at each radius, shared by the kernel conditions.
std::vector<KernelFunctionals> functionals_at(const KernelGrid& K, const std::vector<double>& radii);

// int_{|r|>1} h_R(|r|) nu(dr) < infinity for every R; needs G in L1.
ConditionEntry check_sufficient_T1(const KernelGrid& K, const LevyTriplet& t,
                                   const std::vector<double>& radii = default_radii());
ConditionEntry check_sufficient_T1(const KernelGrid& K, const std::vector<KernelFunctionals>& F, const LevyTriplet& t);

// Zero mean plus the two integrals |r| int_{1/|r|}^inf d and |r|^2 int_0^{1/|r|} alpha d.
ConditionEntry check_sufficient_T38(const KernelGrid& K, const LevyTriplet& t,
                                    const std::vector<double>& radii = default_radii());
ConditionEntry check_sufficient_T38(const std::vector<KernelFunctionals>& F, const LevyTriplet& t);

// int_{|r|>1} d_{G_R}(1/|r|) nu(dr) < infinity; only for kernels of one sign.
ConditionEntry check_necessary(const KernelGrid& K, const LevyTriplet& t,
                               const std::vector<double>& radii = default_radii());
ConditionEntry check_necessary(const KernelGrid& K, const std::vector<KernelFunctionals>& F, const LevyTriplet& t);

// Strip L2 bound on q/p and a finite log^d moment of nu.
ConditionEntry check_mild(const MultiPolynomial& p, const MultiPolynomial& q, double epsilon, const LevyTriplet& t);

// p homogeneous of order m and elliptic: d > 2m, int |r|^{d/(d-m)+eps} nu < infinity
// and zero mean. Throws ArgumentError for non-homogeneous or non-elliptic p.
ConditionEntry check_elliptic(const MultiPolynomial& p, const LevyTriplet& t, double epsilon = 0.01);

}  // namespace lcarma
