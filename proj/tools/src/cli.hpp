#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace bnat::cli {

/// Dispatches `args` (command name first, program name stripped) and maps
/// exceptions to the documented exit codes: 0 success, 2 usage, 3 data,
/// 4 protocol/transport, 5 numeric, 1 anything else.
int run(const std::vector<std::string>& args);

int run_gen(const std::vector<std::string>& args);
int run_train(const std::vector<std::string>& args);
int run_eval(const std::vector<std::string>& args);
int run_detect(const std::vector<std::string>& args);
int run_replay(const std::vector<std::string>& args);

/// Sidecar path holding the standardization parameters for a model file:
/// `x.bndm` pairs with `x.scaler.json`.
std::filesystem::path scaler_path_for(const std::filesystem::path& model);

} // namespace bnat::cli
