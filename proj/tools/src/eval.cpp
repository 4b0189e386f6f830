#include <CLI11.hpp>

#include "bnat/dataset.hpp"
#include "bnat/errors.hpp"
#include "bnat/eval.hpp"
#include "bnat/model_io.hpp"
#include "cli.hpp"
#include "util.hpp"

namespace bnat::cli {

namespace fs = std::filesystem;

int run_eval(const std::vector<std::string>& args) {
    CLI::App app{"evaluate a saved model on a labeled CSV", "bnat eval"};
    std::string model_path;
    std::string data_path;
    std::string scaler_path;
    bool no_scaler = false;
    std::string out_path = "report.json";
    std::string scheme = "adhoc";
    std::uint16_t node = 0;

    app.add_option("--model", model_path, "model file (.bndm)")->required();
    app.add_option("--data", data_path, "labeled CSV to grade")->required();
    app.add_option("--scaler", scaler_path,
                   "standardization sidecar (default: the model's .scaler.json)");
    app.add_flag("--no-scaler", no_scaler, "grade the data as-is, without standardization");
    app.add_option("--out", out_path, "report destination")->capture_default_str();
    app.add_option("--scheme", scheme, "scheme tag stamped into the report")
        ->capture_default_str();
    app.add_option("--node", node, "node id stamped into the report")->capture_default_str();

    try {
        app.parse(cli11_args(args));
    } catch (const CLI::ParseError& e) {
        // help exits clean; every other parse problem is the documented usage code
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (no_scaler && !scaler_path.empty())
        throw ConfigError("--scaler and --no-scaler are mutually exclusive");

    const DbnModel model = load_model(model_path);
    Dataset data = load_csv(data_path, model.arch.input_dim, model.arch.classes);

    ManifestSink sink("eval", args);
    sink.add_input(model_path);
    sink.add_input(data_path);

    if (!no_scaler) {
        const fs::path sidecar =
            scaler_path.empty() ? scaler_path_for(model_path) : fs::path(scaler_path);
        if (!fs::exists(sidecar))
            throw DataError("no scaler at " + sidecar.string() +
                            "; pass --scaler or --no-scaler explicitly");
        data = apply_scaler(data, load_scaler(sidecar));
        sink.add_input(sidecar);
    }

    const ConfusionMatrix cm = evaluate_model(model, data);
    const nlohmann::json report = metrics_report(scheme, node, cm);
    write_json_file(out_path, report);
    sink.add_output(out_path);
    log_info("accuracy " + std::to_string(report["accuracy_eq15"].get<double>()) + " over " +
             std::to_string(data.size()) + " rows");

    sink.config() = {{"scheme", scheme}, {"node", node}, {"standardized", !no_scaler}};
    sink.write(fs::path(out_path).has_parent_path() ? fs::path(out_path).parent_path()
                                                    : fs::path("."));
    return 0;
}

} // namespace bnat::cli
