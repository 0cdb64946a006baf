#pragma once

#include <string>

#include <json.hpp>

#include "lcarma/field.hpp"
#include "lcarma/kernels.hpp"
#include "lcarma/levy.hpp"

namespace lcarma {

// Binary grid file: the line "LCARMA-GRID 1", one line of JSON header (kind,
// d, counts, spacing, origin and kind-specific fields, plus caller metadata
// under "meta"), then the values as little-endian float64 in row-major order.
inline constexpr const char* kGridMagic = "LCARMA-GRID 1";

void write_noise(const std::string& path, const CellNoise& n, const nlohmann::json& meta = nlohmann::json::object());
CellNoise read_noise(const std::string& path, nlohmann::json* meta = nullptr);

// Adds the envelope, provenance and error estimates to the header.
void write_kernel(const std::string& path, const KernelGrid& K, const nlohmann::json& meta = nlohmann::json::object());
KernelGrid read_kernel(const std::string& path, nlohmann::json* meta = nullptr);

void write_field(const std::string& path, const FieldRealization& f,
                 const nlohmann::json& meta = nlohmann::json::object());
FieldRealization read_field(const std::string& path, nlohmann::json* meta = nullptr);

// Header of any grid file without reading the payload.
nlohmann::json read_grid_header(const std::string& path);

// 64-bit FNV-1a of the text, as 16 hex digits.
std::string content_hash(const std::string& text);

}  // namespace lcarma
