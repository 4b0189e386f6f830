#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bnat/dataset.hpp"
#include "bnat/manifest.hpp"

namespace bnat::cli {

// CLI11's vector parse wants the arguments reversed and consumable.
inline std::vector<std::string> cli11_args(const std::vector<std::string>& args) {
    return {args.rbegin(), args.rend()};
}

// Verbosity from BNAT_LOG: quiet < info (default) < debug.
int log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

void save_scaler(const std::filesystem::path& path, const ScalerParams& params);
ScalerParams load_scaler(const std::filesystem::path& path);

/// Comma-separated non-negative integers ("3000,300,300,300").
std::vector<std::size_t> parse_counts(const std::string& text, const std::string& flag);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

/// Collects what a command touched and writes `manifest.json` into a
/// directory when done. `argv` is the raw argument list after the command
/// name, exactly what replay feeds back in.
class ManifestSink {
  public:
    ManifestSink(std::string command, std::vector<std::string> argv);

    void add_input(const std::filesystem::path& p);
    void add_output(const std::filesystem::path& p);
    nlohmann::json& config() { return manifest_.config; }
    void write(const std::filesystem::path& dir);

  private:
    RunManifest manifest_;
    std::chrono::steady_clock::time_point start_;
};

} // namespace bnat::cli
