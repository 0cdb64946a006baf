#include "lcarma/gridio.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "lcarma/errors.hpp"

namespace lcarma {

using nlohmann::json;

namespace {

json grid_json(const GridSpec& g) {
    return {{"d", g.dim()}, {"counts", g.counts}, {"spacing", g.spacing}, {"origin", g.origin}};
}

GridSpec grid_from(const json& h) {
    GridSpec g;
    g.counts = h.at("counts").get<std::vector<std::size_t>>();
    g.spacing = h.at("spacing").get<std::vector<double>>();
    g.origin = h.at("origin").get<std::vector<double>>();
    if (h.at("d").get<std::size_t>() != g.counts.size()) throw ConfigError("grid file: d disagrees with counts");
    g.validate();
    return g;
}

void write_file(const std::string& path, json header, const std::vector<double>& values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << kGridMagic << '\n' << header.dump() << '\n';
    std::vector<char> buf(values.size() * 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto u = std::bit_cast<std::uint64_t>(values[i]);
        for (int b = 0; b < 8; ++b) buf[8 * i + b] = static_cast<char>((u >> (8 * b)) & 0xff);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw ConfigError("write to '" + path + "' failed");
}

json read_header(std::ifstream& in, const std::string& path) {
    std::string magic, line;
    if (!std::getline(in, magic) || magic != kGridMagic) throw ConfigError("'" + path + "' is not a grid file");
    if (!std::getline(in, line)) throw ConfigError("'" + path + "': missing header");
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw ConfigError("'" + path + "': bad header: " + e.what());
    }
}

std::vector<double> read_file(const std::string& path, const std::string& kind, json& header, GridSpec& g) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    header = read_header(in, path);
    if (header.value("kind", "") != kind)
        throw ConfigError("'" + path + "' holds a " + header.value("kind", std::string("?")) + ", expected " + kind);
    g = grid_from(header);
    std::vector<char> buf(g.size() * 8);
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw ConfigError("'" + path + "': truncated payload");
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::uint64_t u = 0;
        for (int b = 0; b < 8; ++b) u |= std::uint64_t(static_cast<unsigned char>(buf[8 * i + b])) << (8 * b);
        v[i] = std::bit_cast<double>(u);
    }
    return v;
}

}  // namespace

void write_noise(const std::string& path, const CellNoise& n, const json& meta) {
    json h = grid_json(n.grid);
    h["kind"] = "noise";
    h["seed"] = n.seed;
    h["stream"] = n.stream;
    h["delta"] = n.delta;
    h["meta"] = meta;
    write_file(path, h, n.values);
}

CellNoise read_noise(const std::string& path, json* meta) {
    json h;
    CellNoise n;
    n.values = read_file(path, "noise", h, n.grid);
    n.seed = h.at("seed");
    n.stream = h.at("stream");
    n.delta = h.at("delta");
    if (meta) *meta = h.value("meta", json::object());
    return n;
}

void write_kernel(const std::string& path, const KernelGrid& K, const json& meta) {
    json h = grid_json(K.grid);
    h["kind"] = "kernel";
    h["envelope"] = K.envelope.to_json();
    h["provenance"] = K.provenance.to_json();
    h["error_estimate"] = K.error_estimate;
    h["imag_residue"] = K.imag_residue;
    h["meta"] = meta;
    write_file(path, h, K.values);
}

KernelGrid read_kernel(const std::string& path, json* meta) {
    json h;
    KernelGrid K;
    K.values = read_file(path, "kernel", h, K.grid);
    K.envelope = Envelope::from_json(h.at("envelope"));
    const json& p = h.at("provenance");
    K.provenance.kind = p.value("kind", "");
    K.provenance.images = p.value("images", 0);
    K.provenance.note = p.value("note", "");
    if (p.contains("p")) K.provenance.p = MultiPolynomial::parse(p["p"], K.grid.dim());
    if (p.contains("q")) K.provenance.q = MultiPolynomial::parse(p["q"], K.grid.dim());
    if (p.contains("alpha")) K.provenance.alpha = p["alpha"].get<int>();
    K.error_estimate = h.value("error_estimate", 0.0);
    K.imag_residue = h.value("imag_residue", 0.0);
    if (meta) *meta = h.value("meta", json::object());
    return K;
}

void write_field(const std::string& path, const FieldRealization& f, const json& meta) {
    json h = grid_json(f.field.grid);
    h["kind"] = "field";
    h["kernel"] = f.kernel;
    h["seed"] = f.seed;
    h["stream"] = f.stream;
    h["construction"] = f.construction;
    h["meta"] = meta;
    write_file(path, h, f.field.values);
}

FieldRealization read_field(const std::string& path, json* meta) {
    json h;
    FieldRealization f;
    f.field.values = read_file(path, "field", h, f.field.grid);
    f.kernel = h.value("kernel", "");
    f.seed = h.at("seed");
    f.stream = h.at("stream");
    f.construction = h.value("construction", "mild_convolution");
    if (meta) *meta = h.value("meta", json::object());
    return f;
}

json read_grid_header(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    return read_header(in, path);
}

std::string content_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    static const char* hex = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) s[i] = hex[h & 0xf];
    return s;
}

}  // namespace lcarma
