#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcarma/field.hpp"
#include "lcarma/kernels.hpp"
#include "lcarma/levy.hpp"
#include "lcarma/polynomial.hpp"
#include "lcarma/stats.hpp"

namespace lcarma::cli {

struct TestFunctionSpec {
    std::vector<double> center;
    double radius = 1.0;
    double amplitude = 1.0;
};

struct KernelSpec {
    // fft | carma1d | regularized | matern3 | newtonian | bm | delta
    std::string method = "fft";
    int images_lo = -1, images_hi = -1;
    std::optional<Envelope> envelope;
    double lambda = 1.0;               // matern3
    std::vector<double> bm_lambda, bm_kappa;  // bm, real roots
    bool profile = false;              // emit a radial CSV profile
};

struct ExperimentConfig {
    std::string p_text, q_text = "1";
    std::size_t dim = 1;
    MultiPolynomial p, q;
    LevyTriplet triplet;
    nlohmann::json triplet_json;
    double delta = 0.01;
    std::vector<std::size_t> counts;
    std::vector<double> spacing;
    std::optional<int> alpha;
    std::uint64_t seed = 1, stream = 0;
    std::size_t realizations = 1;
    std::size_t workers = 1;
    std::string output_dir = "lcarma_out";
    KernelSpec kernel;
    // check
    std::vector<double> radii{0.5, 1.0, 2.0};
    double epsilon = 0.25;
    // pair, verify
    std::vector<TestFunctionSpec> test_functions;
    std::vector<double> u;
    std::size_t samples = 1000;
    std::string weight = "white";  // white | generalized
    // spectrum
    Band band;
    std::vector<std::vector<long>> lags;

    GridSpec grid() const { return GridSpec::centered(counts, spacing); }
    // Canonical JSON of every field; the config hash is taken over its dump.
    nlohmann::json to_json() const;
    std::string hash() const;
};

// Parses and validates; ConfigError messages name the line (for JSON syntax)
// or the field path.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace lcarma::cli
