#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace bnat {

/// Record of one CLI invocation, written next to its outputs. `argv` holds
/// the fully resolved arguments after the command name (defaults filled
/// in), so replaying it reproduces the run byte for byte.
struct RunManifest {
    std::string version = "0.1.0";
    std::string command;
    std::vector<std::string> argv;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    nlohmann::json config = nlohmann::json::object();
    double wall_seconds = 0.0;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

void save_manifest(const std::string& path, const RunManifest& manifest);
RunManifest load_manifest(const std::string& path);

} // namespace bnat
