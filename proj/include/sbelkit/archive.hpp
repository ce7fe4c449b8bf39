#pragma once

// Model archive:
//
//   "SBELKIT1"                 8-byte magic
//   u32 version                currently 1
//   u64 n, n bytes             JSON header: role, shape, function weights,
//                              loss flags, vocabulary, echoed run config
//   u32 count                  tensor manifest entries
//   count x { u32 n, name; u32 n, dtype ("f64le"); u32 ndim; u64 dims... }
//   payloads                   raw little-endian doubles, manifest order
//
// Integers are little-endian.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "sbelkit/error.hpp"
#include "sbelkit/model.hpp"
#include "sbelkit/vocab.hpp"

namespace sbelkit::archive {

inline constexpr std::string_view kMagic = "SBELKIT1";
inline constexpr std::uint32_t kVersion = 1;

class ArchiveVersionError : public DataError {
 public:
  using DataError::DataError;
};
class ArchiveTruncatedError : public DataError {
 public:
  using DataError::DataError;
};
class ArchiveShapeError : public DataError {
 public:
  using DataError::DataError;
};

struct ModelArchive {
  std::string role = "joint";  // joint, relation or function
  model::JointModel model;
  std::optional<vocab::Vocabulary> vocab;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
};

std::string serialize_model(const ModelArchive& a);
// `expected` checks the stored shape against the caller's configuration.
ModelArchive parse_model(std::string_view bytes, const std::optional<model::ModelShape>& expected = std::nullopt);

void save_model(const std::filesystem::path& path, const ModelArchive& a);
ModelArchive load_model(const std::filesystem::path& path,
                        const std::optional<model::ModelShape>& expected = std::nullopt);

nlohmann::ordered_json shape_json(const model::ModelShape& s);
model::ModelShape shape_from_json(const nlohmann::ordered_json& j);

}  // namespace sbelkit::archive
