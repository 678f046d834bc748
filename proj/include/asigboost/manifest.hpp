#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace asigboost {

/// Provenance record written next to every CLI output. Replaying `args`
/// against inputs with the recorded digests reproduces the outputs.
struct RunManifest {
    std::string command;
    std::vector<std::string> args;  // argv after the program name
    std::vector<std::pair<std::string, std::uint64_t>> seeds;
    std::vector<std::pair<std::string, std::string>> inputs;  // (path, digest)
    std::vector<std::pair<std::string, double>> achieved_irs;
    std::vector<std::string> outputs;
    std::vector<std::pair<std::string, std::string>> settings;
    std::string started_utc;
    double wall_clock_seconds = 0.0;

    /// Records `path` with its current file digest.
    void add_input(const std::filesystem::path& path);

    /// Flat key-value document; see docs/file_formats.md.
    std::string serialize() const;
    static RunManifest parse(std::string_view text);
    static RunManifest load(const std::filesystem::path& path);
    void write(const std::filesystem::path& path) const;
};

/// `<output>.manifest`
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

}  // namespace asigboost
