#include "cli.hpp"

#include <iostream>

#include "bnat/errors.hpp"
#include "util.hpp"

namespace bnat::cli {

namespace {

constexpr const char* kUsage =
    "usage: bnat <command> [flags]\n"
    "\n"
    "commands:\n"
    "  gen     generate synthetic per-node traffic datasets\n"
    "  train   train a model under the pclm, clm, or llm scheme\n"
    "  eval    evaluate a saved model on a labeled CSV\n"
    "  detect  classify a record stream and emit JSON alerts\n"
    "  replay  re-run the command recorded in a manifest\n"
    "\n"
    "run 'bnat <command> --help' for the command's flags.\n"
    "BNAT_LOG=quiet|info|debug controls stderr verbosity.\n";

} // namespace

std::filesystem::path scaler_path_for(const std::filesystem::path& model) {
    std::filesystem::path p = model;
    if (p.extension() == ".bndm") p.replace_extension();
    p += ".scaler.json";
    return p;
}

int run(const std::vector<std::string>& args) {
    if (args.empty()) {
        std::cerr << kUsage;
        return 2;
    }
    const std::string& command = args[0];
    if (command == "help" || command == "--help" || command == "-h") {
        std::cout << kUsage;
        return 0;
    }
    const std::vector<std::string> rest(args.begin() + 1, args.end());
    try {
        if (command == "gen") return run_gen(rest);
        if (command == "train") return run_train(rest);
        if (command == "eval") return run_eval(rest);
        if (command == "detect") return run_detect(rest);
        if (command == "replay") return run_replay(rest);
        std::cerr << "bnat: unknown command '" << command << "'\n" << kUsage;
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "bnat: numeric error: " << e.what() << "\n";
        return 5;
    } catch (const ConfigError& e) {
        std::cerr << "bnat: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "bnat: " << e.what() << "\n";
        return 3;
    } catch (const ProtocolError& e) { // TimeoutError included
        std::cerr << "bnat: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "bnat: " << e.what() << "\n";
        return 1;
    }
}

} // namespace bnat::cli
