#pragma once

// Versioned model container. Byte layout (all integers little-endian):
//
//   magic            8 bytes  "SHWMODEL"
//   format_version   u32
//   header_length    u32
//   header           header_length bytes of UTF-8 "key=value\n" lines
//   tensor_count     u32
//   per tensor:      u32 name_length, name bytes, u32 rank, rank x u64 dims,
//                    u64 value_count, value_count x f64 (IEEE-754 binary64)
//   checksum         u64 FNV-1a over every preceding byte
//
// docs/FORMATS.md describes the header keys.

#include "sheepweight/network.hpp"
#include "sheepweight/regressor.hpp"
#include "sheepweight/segmenter.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace sheepweight {

inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr char kModelMagic[8] = {'S', 'H', 'W', 'M', 'O', 'D', 'E', 'L'};

enum class ModelKind { segmenter, regressor };

std::string_view model_kind_name(ModelKind kind) noexcept;

struct TensorRecord {
    std::string name;
    Shape shape;
    std::vector<double> values;

    friend bool operator==(const TensorRecord&, const TensorRecord&) = default;
};

struct ModelContainer {
    std::uint32_t format_version = kModelFormatVersion;
    ModelKind kind = ModelKind::regressor;
    std::uint64_t seed = 0;
    std::vector<std::string> layers;               // one descriptor per layer
    std::map<std::string, std::string> attributes;  // structural facts (input size, feature order)
    std::map<std::string, std::string> config;      // training config snapshot
    std::vector<TensorRecord> tensors;

    friend bool operator==(const ModelContainer&, const ModelContainer&) = default;
};

/// Raw encoding; performs no consistency checks so tests can build bad files.
std::vector<std::uint8_t> serialize_model(const ModelContainer& container);

/// Decodes and validates. Throws VersionError, CorruptFileError or
/// ShapeMismatchError; never returns a partially decoded container.
ModelContainer deserialize_model(std::span<const std::uint8_t> bytes);

/// Checks declared shapes against stored value counts and layer descriptors.
void validate_container(const ModelContainer& container);

void save_model(const ModelContainer& container, const std::filesystem::path& path);
ModelContainer load_model(const std::filesystem::path& path);

std::vector<std::string> describe_layers(const Network& network);
/// Rebuilds a network from descriptors and tensors (ShapeMismatchError on
/// any disagreement).
Network network_from_container(const ModelContainer& container);

ModelContainer to_container(const SegModel& model, std::uint64_t seed,
                            std::map<std::string, std::string> config = {});
ModelContainer to_container(const RegModel& model, std::uint64_t seed,
                            std::map<std::string, std::string> config = {});
SegModel seg_model_from_container(const ModelContainer& container);
RegModel reg_model_from_container(const ModelContainer& container);

}  // namespace sheepweight
