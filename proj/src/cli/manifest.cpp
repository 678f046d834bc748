#include "asigboost/manifest.hpp"

#include <algorithm>
#include <map>

#include "asigboost/error.hpp"
#include "asigboost/text_io.hpp"

namespace asigboost {

namespace {

constexpr std::string_view kFormat = "asigboost-manifest 1";

std::size_t index_suffix(const std::string& key, std::size_t prefix) {
    const auto v = parse_int(std::string_view(key).substr(prefix));
    if (!v || *v < 0) throw ConfigError("manifest: bad index in key '" + key + "'");
    return static_cast<std::size_t>(*v);
}

}  // namespace

void RunManifest::add_input(const std::filesystem::path& path) {
    inputs.emplace_back(path.string(), file_digest(path));
}

std::string RunManifest::serialize() const {
    KeyValueDoc doc;
    doc.set("format", std::string(kFormat));
    doc.set("command", command);
    for (std::size_t i = 0; i < args.size(); ++i) doc.set("arg." + std::to_string(i), args[i]);
    for (const auto& [name, seed] : seeds) doc.set("seed." + name, std::to_string(seed));
    for (std::size_t i = 0; i < inputs.size(); ++i)
        doc.set("input." + std::to_string(i), inputs[i].second + " " + inputs[i].first);
    for (const auto& [label, ir] : achieved_irs) doc.set("achieved_ir." + label, format_double(ir));
    for (std::size_t i = 0; i < outputs.size(); ++i) doc.set("output." + std::to_string(i), outputs[i]);
    for (const auto& [key, value] : settings) doc.set("setting." + key, value);
    doc.set("started_utc", started_utc);
    doc.set("wall_clock_seconds", format_double(wall_clock_seconds));
    return doc.to_string();
}

RunManifest RunManifest::parse(std::string_view text) {
    const auto doc = KeyValueDoc::parse(text, "manifest");
    if (doc.require("format") != kFormat) throw ConfigError("manifest: unsupported format '" + doc.require("format") + "'");
    RunManifest m;
    m.command = doc.require("command");
    std::map<std::size_t, std::string> args, outputs;
    std::map<std::size_t, std::pair<std::string, std::string>> inputs;
    for (const auto& [key, value] : doc.entries()) {
        if (key.starts_with("arg.")) {
            args[index_suffix(key, 4)] = value;
        } else if (key.starts_with("seed.")) {
            const auto s = parse_int(value);
            if (!s) throw ConfigError("manifest: bad seed '" + value + "'");
            m.seeds.emplace_back(key.substr(5), static_cast<std::uint64_t>(*s));
        } else if (key.starts_with("input.")) {
            const auto space = value.find(' ');
            if (space == std::string::npos) throw ConfigError("manifest: input entry needs '<digest> <path>'");
            inputs[index_suffix(key, 6)] = {value.substr(space + 1), value.substr(0, space)};
        } else if (key.starts_with("achieved_ir.")) {
            const auto v = parse_double(value);
            if (!v) throw ConfigError("manifest: bad IR '" + value + "'");
            m.achieved_irs.emplace_back(key.substr(12), *v);
        } else if (key.starts_with("output.")) {
            outputs[index_suffix(key, 7)] = value;
        } else if (key.starts_with("setting.")) {
            m.settings.emplace_back(key.substr(8), value);
        } else if (key == "started_utc") {
            m.started_utc = value;
        } else if (key == "wall_clock_seconds") {
            m.wall_clock_seconds = parse_double(value).value_or(0.0);
        } else if (key != "format" && key != "command") {
            throw ConfigError("manifest: unknown key '" + key + "'");
        }
    }
    auto dense = [](const auto& indexed, const char* what) {
        std::size_t expect = 0;
        for (const auto& [i, v] : indexed)
            if (i != expect++) throw ConfigError(std::string("manifest: ") + what + " indices are not contiguous");
    };
    dense(args, "arg");
    dense(inputs, "input");
    dense(outputs, "output");
    for (auto& [i, v] : args) m.args.push_back(std::move(v));
    for (auto& [i, v] : inputs) m.inputs.push_back(std::move(v));
    for (auto& [i, v] : outputs) m.outputs.push_back(std::move(v));
    return m;
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("manifest not found: " + path.string());
    return parse(read_file(path));
}

void RunManifest::write(const std::filesystem::path& path) const { write_file(path, serialize()); }

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
    auto p = output;
    p += ".manifest";
    return p;
}

}  // namespace asigboost
