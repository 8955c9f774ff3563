#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lazsl/core.hpp"
#include "lazsl/error.hpp"

namespace lazsl {

// On-disk layout of an embedding bundle directory:
//
//   manifest.json
//   <entry>.f32      raw little-endian float32, rows x dim, no header
//
//   {
//     "format": "lazsl.bundle", "version": 1,
//     "role": "vision" | "semantic",
//     "dtype": "f32", "endianness": "little", "dim": D,
//     "entries": [
//       vision:   {"id", "tensor", "rows", "label"?}          row 0 = global, rows 1.. = regions
//       semantic: {"id", "name", "attributes": [..], "tensor", "rows"}   one row per attribute
//     ]
//   }

inline constexpr const char* kBundleFormat = "lazsl.bundle";
inline constexpr int kBundleVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";

enum class BundleRole { Vision, Semantic };

inline std::string to_string(BundleRole role) { return role == BundleRole::Vision ? "vision" : "semantic"; }

struct BundleEntry {
  std::string id;
  std::string tensor;  // file name relative to the bundle directory
  std::size_t rows = 0;
  std::vector<float> data;  // rows x dim, row-major

  std::optional<std::string> label;     // vision: ground-truth class id
  std::string name;                     // semantic: class name
  std::vector<std::string> attributes;  // semantic: one text per row

  friend bool operator==(const BundleEntry&, const BundleEntry&) = default;
};

struct EmbeddingBundle {
  BundleRole role = BundleRole::Vision;
  std::size_t dim = 0;
  std::vector<BundleEntry> entries;

  friend bool operator==(const EmbeddingBundle&, const EmbeddingBundle&) = default;
};

namespace detail {

inline std::uint32_t byteswap32(std::uint32_t x) noexcept {
  return (x >> 24) | ((x >> 8) & 0x0000FF00u) | ((x << 8) & 0x00FF0000u) | (x << 24);
}

inline std::vector<char> encode_f32le(const std::vector<float>& values) {
  std::vector<char> bytes(values.size() * 4);
  for (std::size_t k = 0; k < values.size(); ++k) {
    auto word = std::bit_cast<std::uint32_t>(values[k]);
    if constexpr (std::endian::native == std::endian::big) word = byteswap32(word);
    std::memcpy(bytes.data() + 4 * k, &word, 4);
  }
  return bytes;
}

inline std::vector<float> decode_f32le(const std::vector<char>& bytes) {
  std::vector<float> values(bytes.size() / 4);
  for (std::size_t k = 0; k < values.size(); ++k) {
    std::uint32_t word;
    std::memcpy(&word, bytes.data() + 4 * k, 4);
    if constexpr (std::endian::native == std::endian::big) word = byteswap32(word);
    values[k] = std::bit_cast<float>(word);
  }
  return values;
}

inline void check_entry_shape(const EmbeddingBundle& b, const BundleEntry& e) {
  if (b.role == BundleRole::Vision && e.rows < 2)
    raise(ErrorCode::ShapeMismatch, "vision entry '" + e.id + "' needs a global row and at least one region");
  if (b.role == BundleRole::Semantic) {
    if (e.rows < 1) raise(ErrorCode::ShapeMismatch, "semantic entry '" + e.id + "' has no attributes");
    if (e.attributes.size() != e.rows)
      raise(ErrorCode::ShapeMismatch, "semantic entry '" + e.id + "' lists " + std::to_string(e.attributes.size()) +
                                          " attribute texts for " + std::to_string(e.rows) + " rows");
  }
}

inline void check_relative(const std::string& tensor, const std::string& id) {
  const std::filesystem::path p(tensor);
  if (tensor.empty() || p.is_absolute() || p.has_root_path())
    raise(ErrorCode::CorruptManifest, "entry '" + id + "' has an invalid tensor path '" + tensor + "'");
  for (const auto& part : p)
    if (part == "..") raise(ErrorCode::CorruptManifest, "entry '" + id + "' tensor path escapes the bundle");
}

template <class T>
T field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) raise(ErrorCode::CorruptManifest, where + " is missing \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& ex) {
    raise(ErrorCode::CorruptManifest, where + " field \"" + key + "\": " + ex.what());
  }
}

}  // namespace detail

inline void save_bundle(const EmbeddingBundle& bundle, const std::filesystem::path& dir) {
  if (bundle.dim == 0) raise(ErrorCode::ShapeMismatch, "bundle dimension is zero");
  std::filesystem::create_directories(dir);

  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : bundle.entries) {
    detail::check_entry_shape(bundle, e);
    detail::check_relative(e.tensor, e.id);
    if (e.data.size() != e.rows * bundle.dim)
      raise(ErrorCode::ShapeMismatch, "entry '" + e.id + "' holds " + std::to_string(e.data.size()) +
                                          " floats, expected " + std::to_string(e.rows * bundle.dim));

    nlohmann::json je{{"id", e.id}, {"tensor", e.tensor}, {"rows", e.rows}};
    if (bundle.role == BundleRole::Vision) {
      if (e.label) je["label"] = *e.label;
    } else {
      je["name"] = e.name;
      je["attributes"] = e.attributes;
    }
    entries.push_back(std::move(je));

    const auto bytes = detail::encode_f32le(e.data);
    std::ofstream out(dir / e.tensor, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) raise(ErrorCode::MissingTensorFile, "failed to write " + (dir / e.tensor).string());
  }

  const nlohmann::json manifest{{"format", kBundleFormat},  {"version", kBundleVersion},
                                {"role", to_string(bundle.role)}, {"dtype", "f32"},
                                {"endianness", "little"},   {"dim", bundle.dim},
                                {"entries", std::move(entries)}};
  std::ofstream out(dir / kManifestName, std::ios::trunc);
  out << manifest.dump(2) << '\n';
  if (!out) raise(ErrorCode::CorruptManifest, "failed to write " + (dir / kManifestName).string());
}

[[nodiscard]] inline EmbeddingBundle load_bundle(const std::filesystem::path& dir) {
  const auto manifest_path = dir / kManifestName;
  std::ifstream in(manifest_path);
  if (!in) raise(ErrorCode::CorruptManifest, "cannot open " + manifest_path.string());

  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& ex) {
    raise(ErrorCode::CorruptManifest, manifest_path.string() + ": " + ex.what());
  }
  if (!m.is_object()) raise(ErrorCode::CorruptManifest, "manifest root must be an object");

  const std::string where = "manifest";
  if (m.contains("format") && m["format"] != kBundleFormat)
    raise(ErrorCode::CorruptManifest, "unknown format tag " + m["format"].dump());
  if (m.contains("version") && m["version"] != kBundleVersion)
    raise(ErrorCode::CorruptManifest, "unsupported manifest version " + m["version"].dump());

  const auto dtype = detail::field<std::string>(m, "dtype", where);
  if (dtype != "f32") raise(ErrorCode::UnsupportedDtype, "dtype '" + dtype + "' (only f32 is supported)");
  const auto endian = detail::field<std::string>(m, "endianness", where);
  if (endian != "little") raise(ErrorCode::UnsupportedDtype, "endianness '" + endian + "' (only little)");

  EmbeddingBundle b;
  const auto role = detail::field<std::string>(m, "role", where);
  if (role == "vision")
    b.role = BundleRole::Vision;
  else if (role == "semantic")
    b.role = BundleRole::Semantic;
  else
    raise(ErrorCode::CorruptManifest, "unknown role '" + role + "'");

  b.dim = detail::field<std::size_t>(m, "dim", where);
  if (b.dim == 0) raise(ErrorCode::CorruptManifest, "dim must be positive");

  const auto entries = detail::field<nlohmann::json>(m, "entries", where);
  if (!entries.is_array()) raise(ErrorCode::CorruptManifest, "\"entries\" must be an array");

  for (const auto& je : entries) {
    if (!je.is_object()) raise(ErrorCode::CorruptManifest, "entry must be an object");
    BundleEntry e;
    e.id = detail::field<std::string>(je, "id", "entry");
    const std::string at = "entry '" + e.id + "'";
    e.tensor = detail::field<std::string>(je, "tensor", at);
    e.rows = detail::field<std::size_t>(je, "rows", at);
    if (b.role == BundleRole::Vision) {
      if (je.contains("label")) e.label = detail::field<std::string>(je, "label", at);
    } else {
      e.name = detail::field<std::string>(je, "name", at);
      e.attributes = detail::field<std::vector<std::string>>(je, "attributes", at);
    }
    detail::check_relative(e.tensor, e.id);
    detail::check_entry_shape(b, e);

    const auto tensor_path = dir / e.tensor;
    std::ifstream tin(tensor_path, std::ios::binary);
    if (!tin) raise(ErrorCode::MissingTensorFile, tensor_path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(tin)), std::istreambuf_iterator<char>());
    const std::size_t expected = e.rows * b.dim * 4;
    if (bytes.size() != expected)
      raise(ErrorCode::ShapeMismatch, tensor_path.string() + " has " + std::to_string(bytes.size()) +
                                          " bytes, expected " + std::to_string(expected) + " (" +
                                          std::to_string(e.rows) + "x" + std::to_string(b.dim) + " f32)");
    e.data = detail::decode_f32le(bytes);
    b.entries.push_back(std::move(e));
  }
  return b;
}

namespace detail {

inline EmbeddingVector row_vector(const BundleEntry& e, std::size_t dim, std::size_t row) {
  std::vector<double> v(dim);
  for (std::size_t k = 0; k < dim; ++k) v[k] = static_cast<double>(e.data[row * dim + k]);
  return EmbeddingVector(std::move(v));
}

inline void require_role(const EmbeddingBundle& b, BundleRole role) {
  if (b.role != role)
    raise(ErrorCode::CorruptManifest, "expected a " + to_string(role) + " bundle, got " + to_string(b.role));
}

}  // namespace detail

/// Vision sets in entry order; embeddings are re-normalized here.
[[nodiscard]] inline std::vector<VisionSet> to_vision_sets(const EmbeddingBundle& b) {
  detail::require_role(b, BundleRole::Vision);
  std::vector<VisionSet> out;
  out.reserve(b.entries.size());
  for (const auto& e : b.entries) {
    std::vector<EmbeddingVector> regions;
    regions.reserve(e.rows - 1);
    for (std::size_t r = 1; r < e.rows; ++r) regions.push_back(detail::row_vector(e, b.dim, r));
    out.emplace_back(e.id, detail::row_vector(e, b.dim, 0), std::move(regions));
  }
  return out;
}

[[nodiscard]] inline std::vector<SemanticSet> to_semantic_sets(const EmbeddingBundle& b) {
  detail::require_role(b, BundleRole::Semantic);
  std::vector<SemanticSet> out;
  out.reserve(b.entries.size());
  for (const auto& e : b.entries) {
    std::vector<Attribute> attrs;
    attrs.reserve(e.rows);
    for (std::size_t r = 0; r < e.rows; ++r) attrs.push_back({e.attributes[r], detail::row_vector(e, b.dim, r)});
    out.emplace_back(e.id, e.name, std::move(attrs));
  }
  return out;
}

/// Ground-truth labels of a vision bundle; every entry must carry one.
[[nodiscard]] inline std::vector<std::string> bundle_labels(const EmbeddingBundle& b) {
  detail::require_role(b, BundleRole::Vision);
  std::vector<std::string> out;
  out.reserve(b.entries.size());
  for (const auto& e : b.entries) {
    if (!e.label) raise(ErrorCode::IdMismatch, "vision entry '" + e.id + "' has no label");
    out.push_back(*e.label);
  }
  return out;
}

}  // namespace lazsl
