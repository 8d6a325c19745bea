#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sheepweight {

enum class Gender { female, male };

char gender_code(Gender g) noexcept;
Gender parse_gender(std::string_view code);
inline double gender_feature(Gender g) noexcept { return g == Gender::male ? 1.0 : 0.0; }

/// One animal. Line grammar, single spaces between fields:
///   id age_months M|F weight_kg|- image_file [annotation_file]
struct SheepRecord {
    std::string id;
    double age_months = 0.0;
    Gender gender = Gender::female;
    std::optional<double> weight_kg;  // "-" in the file when unknown
    std::filesystem::path image_path;
    std::optional<std::filesystem::path> annotation_path;

    friend bool operator==(const SheepRecord&, const SheepRecord&) = default;
};

/// Parses manifest text. Blank lines and lines starting with '#' are
/// skipped; errors carry the 1-based line number.
std::vector<SheepRecord> parse_metadata_text(std::string_view text);

/// Reads a manifest file; relative image and annotation paths are resolved
/// against the manifest's directory.
std::vector<SheepRecord> parse_metadata(const std::filesystem::path& path);

/// Canonical serialization; parse_metadata_text(write_metadata_text(r)) == r.
std::string write_metadata_text(std::span<const SheepRecord> records);

inline constexpr const char* kManifestName = "metadata.txt";

}  // namespace sheepweight
