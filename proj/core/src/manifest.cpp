#include "bnat/manifest.hpp"

#include <fstream>

#include "bnat/errors.hpp"

namespace bnat {

nlohmann::json RunManifest::to_json() const {
    return nlohmann::json{{"version", version},
                          {"command", command},
                          {"argv", argv},
                          {"inputs", inputs},
                          {"outputs", outputs},
                          {"config", config},
                          {"wall_seconds", wall_seconds}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    try {
        RunManifest m;
        m.version = j.at("version").get<std::string>();
        m.command = j.at("command").get<std::string>();
        m.argv = j.at("argv").get<std::vector<std::string>>();
        m.inputs = j.at("inputs").get<std::vector<std::string>>();
        m.outputs = j.at("outputs").get<std::vector<std::string>>();
        m.config = j.at("config");
        m.wall_seconds = j.at("wall_seconds").get<double>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("manifest: ") + e.what());
    }
}

void save_manifest(const std::string& path, const RunManifest& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << manifest.to_json().dump(2) << '\n';
    if (!out.flush()) throw DataError("write failed for " + path);
}

RunManifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    return RunManifest::from_json(j);
}

} // namespace bnat
