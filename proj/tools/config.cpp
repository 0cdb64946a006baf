#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "lcarma/errors.hpp"
#include "lcarma/gridio.hpp"

namespace lcarma::cli {

using nlohmann::json;

namespace {

const std::vector<std::string> kKeys{"p", "q", "dim", "triplet", "delta", "grid", "alpha", "seed", "stream",
                                     "realizations", "workers", "output_dir", "kernel", "check", "test_functions",
                                     "verify", "spectrum"};

// Reads j[key] as T, reporting the field path on failure.
template <class T>
T field(const json& j, const std::string& key, const std::string& path) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config field '" + path + "': missing or of the wrong type");
    }
}

template <class T>
T field_or(const json& j, const std::string& key, const std::string& path, T fallback) {
    if (!j.contains(key)) return fallback;
    return field<T>(j, key, path);
}

std::size_t line_of(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

}  // namespace

json ExperimentConfig::to_json() const {
    json k{{"method", kernel.method}, {"images_lo", kernel.images_lo}, {"images_hi", kernel.images_hi},
           {"lambda", kernel.lambda}, {"bm_lambda", kernel.bm_lambda}, {"bm_kappa", kernel.bm_kappa},
           {"profile", kernel.profile}};
    if (kernel.envelope) k["envelope"] = kernel.envelope->to_json();
    json tfs = json::array();
    for (const auto& t : test_functions) tfs.push_back({{"center", t.center}, {"radius", t.radius}, {"amplitude", t.amplitude}});
    json j{{"p", p.to_string()},
           {"q", q.to_string()},
           {"dim", dim},
           {"triplet", triplet.to_json()},
           {"delta", delta},
           {"grid", {{"counts", counts}, {"spacing", spacing}}},
           {"seed", seed},
           {"stream", stream},
           {"realizations", realizations},
           {"workers", workers},
           {"output_dir", output_dir},
           {"kernel", k},
           {"check", {{"radii", radii}, {"epsilon", epsilon}}},
           {"test_functions", tfs},
           {"verify", {{"u", u}, {"samples", samples}, {"weight", weight}}},
           {"spectrum", {{"band", {{"low", band.low}, {"high", band.high}}}, {"lags", lags}}}};
    j["alpha"] = alpha ? json(*alpha) : json(nullptr);
    return j;
}

std::string ExperimentConfig::hash() const {
    // The output directory does not change results.
    json j = to_json();
    j.erase("output_dir");
    j.erase("workers");
    return content_hash(j.dump());
}

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    for (const auto& [key, _] : j.items())
        if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end())
            throw ConfigError("config field '" + key + "': unknown key");

    ExperimentConfig c;
    c.dim = field_or<std::size_t>(j, "dim", "dim", 0);
    c.p_text = field<std::string>(j, "p", "p");
    c.q_text = field_or<std::string>(j, "q", "q", "1");
    try {
        c.p = MultiPolynomial::parse(c.p_text, c.dim);
        if (c.dim == 0) c.dim = c.p.dim();
        c.q = MultiPolynomial::parse(c.q_text, c.dim);
    } catch (const Error& e) {
        throw ConfigError(std::string("config field 'p'/'q': ") + e.what());
    }
    if (c.p.dim() != c.dim || c.q.dim() != c.dim) throw ConfigError("config field 'p'/'q': dimension mismatch");

    c.triplet_json = j.value("triplet", json{{"a", 1.0}});
    try {
        c.triplet = LevyTriplet::from_json(c.triplet_json);
    } catch (const Error& e) {
        throw ConfigError(std::string("config field 'triplet': ") + e.what());
    }
    c.delta = field_or<double>(j, "delta", "delta", 0.01);

    const json g = j.value("grid", json::object());
    c.counts = field<std::vector<std::size_t>>(g, "counts", "grid.counts");
    c.spacing = field<std::vector<double>>(g, "spacing", "grid.spacing");
    if (c.counts.size() == 1 && c.dim > 1) c.counts.assign(c.dim, c.counts[0]);
    if (c.spacing.size() == 1 && c.dim > 1) c.spacing.assign(c.dim, c.spacing[0]);
    if (c.counts.size() != c.dim || c.spacing.size() != c.dim)
        throw ConfigError("config field 'grid': counts and spacing need one entry per dimension");
    try {
        c.grid().validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("config field 'grid': ") + e.what());
    }

    if (j.contains("alpha") && !j["alpha"].is_null()) c.alpha = field<int>(j, "alpha", "alpha");
    c.seed = field_or<std::uint64_t>(j, "seed", "seed", 1);
    c.stream = field_or<std::uint64_t>(j, "stream", "stream", 0);
    c.realizations = field_or<std::size_t>(j, "realizations", "realizations", 1);
    c.workers = field_or<std::size_t>(j, "workers", "workers", 1);
    c.output_dir = field_or<std::string>(j, "output_dir", "output_dir", "lcarma_out");

    const json k = j.value("kernel", json::object());
    c.kernel.method = field_or<std::string>(k, "method", "kernel.method", "fft");
    static const std::vector<std::string> methods{"fft", "carma1d", "regularized", "matern3", "newtonian", "bm", "delta"};
    if (std::find(methods.begin(), methods.end(), c.kernel.method) == methods.end())
        throw ConfigError("config field 'kernel.method': unknown method '" + c.kernel.method + "'");
    c.kernel.images_lo = field_or<int>(k, "images_lo", "kernel.images_lo", -1);
    c.kernel.images_hi = field_or<int>(k, "images_hi", "kernel.images_hi", -1);
    if (k.contains("envelope")) c.kernel.envelope = Envelope::from_json(k["envelope"]);
    c.kernel.lambda = field_or<double>(k, "lambda", "kernel.lambda", 1.0);
    c.kernel.bm_lambda = field_or<std::vector<double>>(k, "bm_lambda", "kernel.bm_lambda", {});
    c.kernel.bm_kappa = field_or<std::vector<double>>(k, "bm_kappa", "kernel.bm_kappa", {});
    c.kernel.profile = field_or<bool>(k, "profile", "kernel.profile", false);

    const json ch = j.value("check", json::object());
    c.radii = field_or<std::vector<double>>(ch, "radii", "check.radii", c.radii);
    c.epsilon = field_or<double>(ch, "epsilon", "check.epsilon", c.epsilon);

    if (j.contains("test_functions")) {
        std::size_t i = 0;
        for (const auto& t : j["test_functions"]) {
            const std::string path = "test_functions[" + std::to_string(i++) + "]";
            TestFunctionSpec s;
            s.center = field<std::vector<double>>(t, "center", path + ".center");
            s.radius = field_or<double>(t, "radius", path + ".radius", 1.0);
            s.amplitude = field_or<double>(t, "amplitude", path + ".amplitude", 1.0);
            if (s.center.size() != c.dim) throw ConfigError("config field '" + path + ".center': wrong dimension");
            c.test_functions.push_back(std::move(s));
        }
    }
    if (c.test_functions.empty()) c.test_functions.push_back({std::vector<double>(c.dim, 0.0), 1.0, 1.0});

    const json v = j.value("verify", json::object());
    c.u = field_or<std::vector<double>>(v, "u", "verify.u", {});
    if (c.u.empty())
        for (int i = -12; i <= 12; ++i) c.u.push_back(0.25 * i);
    c.samples = field_or<std::size_t>(v, "samples", "verify.samples", 1000);
    c.weight = field_or<std::string>(v, "weight", "verify.weight", "white");
    if (c.weight != "white" && c.weight != "generalized")
        throw ConfigError("config field 'verify.weight': expected 'white' or 'generalized'");

    const json s = j.value("spectrum", json::object());
    if (s.contains("band")) {
        c.band.low = field_or<double>(s["band"], "low", "spectrum.band.low", c.band.low);
        c.band.high = field_or<double>(s["band"], "high", "spectrum.band.high", c.band.high);
    }
    c.lags = field_or<std::vector<std::vector<long>>>(s, "lags", "spectrum.lags", {});
    for (const auto& l : c.lags)
        if (l.size() != c.dim) throw ConfigError("config field 'spectrum.lags': wrong dimension");
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace lcarma::cli
