#include "sheepweight/metadata.hpp"

#include "sheepweight/errors.hpp"
#include "sheepweight/numeric_text.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace sheepweight {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(' ', start);
        fields.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return fields;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& reason) {
    throw ValidationError("metadata line " + std::to_string(line_no) + ": " + reason);
}

SheepRecord parse_line(std::string_view line, std::size_t line_no) {
    const auto fields = split_fields(line);
    if (fields.size() != 5 && fields.size() != 6) {
        fail(line_no, "expected 5 or 6 single-space separated fields, got " + std::to_string(fields.size()));
    }
    for (std::string_view f : fields) {
        if (f.empty()) fail(line_no, "empty field (fields are separated by exactly one space)");
    }
    SheepRecord r;
    r.id = std::string(fields[0]);
    try {
        r.age_months = parse_double(fields[1], "age");
    } catch (const ValidationError& e) {
        fail(line_no, e.what());
    }
    if (r.age_months < 0.0) fail(line_no, "age must be ≥ 0");
    try {
        r.gender = parse_gender(fields[2]);
    } catch (const ValidationError& e) {
        fail(line_no, e.what());
    }
    if (fields[3] != "-") {
        double w = 0.0;
        try {
            w = parse_double(fields[3], "weight");
        } catch (const ValidationError& e) {
            fail(line_no, e.what());
        }
        if (!(w > 0.0)) fail(line_no, "weight must be > 0");
        r.weight_kg = w;
    }
    r.image_path = std::string(fields[4]);
    if (fields.size() == 6) r.annotation_path = std::string(fields[5]);
    return r;
}

}  // namespace

char gender_code(Gender g) noexcept {
    return g == Gender::male ? 'M' : 'F';
}

Gender parse_gender(std::string_view code) {
    if (code == "M") return Gender::male;
    if (code == "F") return Gender::female;
    throw ValidationError("gender must be M or F, got '" + std::string(code) + "'");
}

std::vector<SheepRecord> parse_metadata_text(std::string_view text) {
    std::vector<SheepRecord> records;
    std::set<std::string> ids;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = text.find('\n', start);
        std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty() && line.front() != '#') {
            SheepRecord r = parse_line(line, line_no);
            if (!ids.insert(r.id).second) fail(line_no, "duplicate id '" + r.id + "'");
            records.push_back(std::move(r));
        }
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return records;
}

std::vector<SheepRecord> parse_metadata(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) throw MissingInputError("metadata file not found: " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read metadata file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    std::vector<SheepRecord> records;
    try {
        records = parse_metadata_text(buf.str());
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    const auto base = path.parent_path();
    for (SheepRecord& r : records) {
        if (r.image_path.is_relative()) r.image_path = base / r.image_path;
        if (r.annotation_path && r.annotation_path->is_relative()) r.annotation_path = base / *r.annotation_path;
    }
    return records;
}

std::string write_metadata_text(std::span<const SheepRecord> records) {
    std::string out = "# id age_months gender weight_kg image [annotation]\n";
    for (const SheepRecord& r : records) {
        auto check_field = [&](const std::string& field, const char* what) {
            if (field.empty() || field.find_first_of(" \n\r") != std::string::npos) {
                throw ValidationError("record '" + r.id + "': " + what + " must be non-empty without spaces");
            }
        };
        check_field(r.id, "id");
        check_field(r.image_path.string(), "image path");
        if (r.annotation_path) check_field(r.annotation_path->string(), "annotation path");
        out += r.id;
        out += ' ';
        out += format_double(r.age_months);
        out += ' ';
        out += gender_code(r.gender);
        out += ' ';
        out += r.weight_kg ? format_double(*r.weight_kg) : std::string("-");
        out += ' ';
        out += r.image_path.string();
        if (r.annotation_path) {
            out += ' ';
            out += r.annotation_path->string();
        }
        out += '\n';
    }
    return out;
}

}  // namespace sheepweight
