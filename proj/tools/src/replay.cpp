#include <CLI11.hpp>

#include "bnat/errors.hpp"
#include "bnat/manifest.hpp"
#include "cli.hpp"
#include "util.hpp"

namespace bnat::cli {

int run_replay(const std::vector<std::string>& args) {
    CLI::App app{"re-run the command recorded in a manifest", "bnat replay"};
    std::string manifest_path;
    app.add_option("manifest", manifest_path, "manifest.json written by a previous run")
        ->required();

    try {
        app.parse(cli11_args(args));
    } catch (const CLI::ParseError& e) {
        // help exits clean; every other parse problem is the documented usage code
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const RunManifest manifest = load_manifest(manifest_path);
    if (manifest.command == "replay")
        throw ConfigError("refusing to replay a replay manifest");

    std::vector<std::string> command;
    command.push_back(manifest.command);
    command.insert(command.end(), manifest.argv.begin(), manifest.argv.end());
    log_info("replaying '" + manifest.command + "' from " + manifest_path);
    return run(command);
}

} // namespace bnat::cli
