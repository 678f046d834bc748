#pragma once

// Small text utilities shared by the file formats: shortest round-trip
// number formatting, strict number parsing, CSV reading/writing and flat
// key-value documents.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace asigboost {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Parses the whole of `text` as a double; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

std::string_view trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// 64-bit FNV-1a of a file's bytes, as 16 lowercase hex digits.
std::string file_digest(const std::filesystem::path& path);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Comma-separated, optional double-quoted fields ("" escapes a quote),
/// CRLF or LF line endings, UTF-8 passed through untouched. The first
/// record is the header. Throws DataError on ragged rows.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

/// Quotes a field only when it contains a comma, quote or line break.
std::string csv_field(std::string_view field);

/// Flat "key = value" document. '#' starts a comment line; blank lines are
/// ignored; keys are unique and keep file order.
class KeyValueDoc {
public:
    KeyValueDoc() = default;

    static KeyValueDoc parse(std::string_view text, std::string_view origin = "<text>");
    static KeyValueDoc load(const std::filesystem::path& path);

    void set(std::string key, std::string value);
    bool contains(std::string_view key) const;
    std::optional<std::string> get(std::string_view key) const;
    std::string require(std::string_view key) const;
    double get_double(std::string_view key, double fallback) const;
    std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
    bool get_bool(std::string_view key, bool fallback) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
    std::string to_string() const;

private:
    std::string origin_;
    std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace asigboost
