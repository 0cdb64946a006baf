#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcarma/grid.hpp"

namespace lcarma {

// ---- weights for integrals over {|r| > 1} ----

// Growth of a tabulated weight beyond its last node.
struct TailGrowth {
    enum class Kind { bounded, power, log_power };
    Kind kind = Kind::bounded;
    double exponent = 0.0;

    static TailGrowth bounded() { return {}; }
    static TailGrowth power(double k) { return {Kind::power, k}; }
    static TailGrowth log_power(double k) { return {Kind::log_power, k}; }
    std::string describe() const;
};

struct Weight {
    enum class Kind { power, log_power, indicator, table };
    Kind kind = Kind::indicator;
    double exponent = 0.0;
    std::vector<double> xs, ws;  // table nodes (x >= 1, increasing) and values
    TailGrowth growth;

    static Weight power(double beta) { return {Kind::power, beta, {}, {}, {}}; }
    static Weight log_power(double k) { return {Kind::log_power, k, {}, {}, {}}; }
    static Weight indicator() { return {}; }
    static Weight table(std::vector<double> xs, std::vector<double> ws, TailGrowth growth);

    // Weight at |r| = x >= 1; beyond the table it follows the declared growth.
    double operator()(double x) const;
    TailGrowth asymptotic() const;
};

struct NuIntegral {
    double value = 0.0;
    bool finite = true;
    std::string method;
};

// ---- counter-based randomness ----

// SplitMix64 as a standard uniform random bit generator.
class SplitMix64 {
public:
    using result_type = std::uint64_t;
    explicit SplitMix64(std::uint64_t state) : state_(state) {}
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }
    result_type operator()();
    double uniform01();  // in (0, 1)

private:
    std::uint64_t state_;
};

// Independent stream for one cell, keyed by (seed, stream, cell index).
SplitMix64 cell_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t cell);

// ---- Levy measures ----

class LevyMeasure {
public:
    virtual ~LevyMeasure() = default;

    virtual std::string family() const = 0;
    virtual nlohmann::json to_json() const = 0;
    virtual bool is_zero() const { return false; }

    // int (e^{irz} - 1 - irz 1_{|r|<=1}) nu(dr)
    virtual std::complex<double> exponent(double z) const = 0;
    // nu(|r| > delta)
    virtual double mass_above(double delta) const = 0;
    // int_{|r|<=delta} r^2 nu(dr)
    virtual double small_variance(double delta) const = 0;
    // int_{delta<|r|<=1} r nu(dr)
    virtual double mid_mean(double delta) const = 0;
    // int_{|r|<=1} min(1, r^2) nu + nu(|r|>1); finite for every admissible measure
    virtual double truncated_second_moment() const = 0;
    // One jump from nu restricted to |r| > delta, normalised.
    virtual double sample_jump(double delta, SplitMix64& rng) const = 0;
    // int_{|r|>1} w(|r|) nu(dr), with analytic divergence tests.
    virtual NuIntegral tail_integral(const Weight& w) const = 0;
    // int_{|r|>1} r nu(dr) when int_{|r|>1} |r| nu < infinity.
    virtual std::optional<double> signed_tail_mean() const = 0;
    // int r^2 nu(dr) when finite.
    virtual std::optional<double> second_moment() const = 0;
};

using LevyMeasurePtr = std::shared_ptr<const LevyMeasure>;

struct JumpLaw {
    enum class Kind { normal, exponential, uniform };
    Kind kind = Kind::normal;
    double p1 = 0.0, p2 = 1.0;  // (mean, sd) | (rate, -) | (lo, hi)
};

LevyMeasurePtr make_zero_measure();
LevyMeasurePtr make_atomic(std::vector<std::pair<double, double>> atoms);  // (r_k, c_k)
LevyMeasurePtr make_compound_poisson(double intensity, JumpLaw law);
LevyMeasurePtr make_gamma(double shape, double rate);
// Density w_+- theta s^theta |r|^{-1-theta} on |r| > s.
LevyMeasurePtr make_pareto(double theta, double scale, double weight_plus, double weight_minus);
// Density c kappa / (r log(r)^{1+kappa}) on r > e: every log-moment of order < kappa.
LevyMeasurePtr make_log_pareto(double kappa, double mass);
// Piecewise-linear density on the table; support declares where nu lives.
LevyMeasurePtr make_tabulated(std::vector<double> r, std::vector<double> density, double support_lo,
                              double support_hi);

LevyMeasurePtr measure_from_json(const nlohmann::json& j);

struct LevyTriplet {
    double a = 0.0;
    double gamma = 0.0;
    LevyMeasurePtr nu = make_zero_measure();

    void validate() const;
    nlohmann::json to_json() const;
    static LevyTriplet from_json(const nlohmann::json& j);
};

std::complex<double> char_exponent(const LevyTriplet& t, double z);

NuIntegral nu_integral(const LevyMeasure& nu, const Weight& w);

struct CellMoments {
    std::optional<double> mean;
    std::optional<double> variance;
};

CellMoments cell_moments(const LevyTriplet& t, double v);

// Bound on |E e^{izX} - E e^{izY}| over |z| <= zmax for one cell of volume v
// when the jumps below delta are replaced by a Gaussian of equal variance:
// v zmax^3 delta sigma_small^2(delta) / 6, from |e^{ix} - 1 - ix + x^2/2| <= |x|^3/6.
double small_jump_cf_bound(const LevyTriplet& t, double delta, double v, double zmax);

struct CellNoise {
    GridSpec grid;
    std::vector<double> values;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    double delta = 0.01;
};

struct SimulationBudget {
    double max_mean_jumps_per_cell = 1e4;
};

CellNoise simulate_cells(const LevyTriplet& t, const GridSpec& grid, double delta, std::uint64_t seed,
                         std::uint64_t stream, const SimulationBudget& budget = {});

}  // namespace lcarma
