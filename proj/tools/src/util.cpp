#include "util.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "bnat/errors.hpp"

namespace bnat::cli {

int log_level() {
    static const int level = [] {
        const char* raw = std::getenv("BNAT_LOG");
        if (raw == nullptr) return 1;
        const std::string v(raw);
        if (v == "quiet" || v == "0") return 0;
        if (v == "debug" || v == "2") return 2;
        return 1;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "bnat: " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "bnat: " << msg << "\n";
}

void save_scaler(const std::filesystem::path& path, const ScalerParams& params) {
    nlohmann::json j;
    j["means"] = std::vector<double>(params.means.data(), params.means.data() + params.means.size());
    j["stds"] = std::vector<double>(params.stds.data(), params.stds.data() + params.stds.size());
    write_json_file(path, j);
}

ScalerParams load_scaler(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("scaler: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
        const auto means = j.at("means").get<std::vector<double>>();
        const auto stds = j.at("stds").get<std::vector<double>>();
        if (means.size() != stds.size() || means.empty())
            throw DataError("scaler: means/stds size mismatch in " + path.string());
        ScalerParams p;
        p.means = Eigen::Map<const Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
        p.stds = Eigen::Map<const Eigen::VectorXd>(stds.data(), static_cast<Eigen::Index>(stds.size()));
        for (Eigen::Index i = 0; i < p.stds.size(); ++i)
            if (!(p.stds(i) > 0.0))
                throw DataError("scaler: non-positive std in " + path.string());
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("scaler: " + path.string() + ": " + e.what());
    }
}

std::vector<std::size_t> parse_counts(const std::string& text, const std::string& flag) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string part = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            std::size_t used = 0;
            const long long v = std::stoll(part, &used);
            if (used != part.size() || v < 0) throw std::invalid_argument(part);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw ConfigError(flag + ": '" + part + "' is not a non-negative integer");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
    out.flush();
    if (!out) throw DataError("write failed: " + path.string());
}

ManifestSink::ManifestSink(std::string command, std::vector<std::string> argv)
    : start_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(command);
    manifest_.argv = std::move(argv);
}

void ManifestSink::add_input(const std::filesystem::path& p) {
    manifest_.inputs.push_back(p.string());
}

void ManifestSink::add_output(const std::filesystem::path& p) {
    manifest_.outputs.push_back(p.string());
}

void ManifestSink::write(const std::filesystem::path& dir) {
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
    manifest_.wall_seconds = elapsed.count();
    save_manifest((dir / "manifest.json").string(), manifest_);
}

} // namespace bnat::cli
