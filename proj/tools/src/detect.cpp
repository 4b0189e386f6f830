#include <unistd.h>

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "bnat/dataset.hpp"
#include "bnat/dbn.hpp"
#include "bnat/errors.hpp"
#include "bnat/eval.hpp"
#include "bnat/model_io.hpp"
#include "cli.hpp"
#include "util.hpp"

namespace bnat::cli {

namespace fs = std::filesystem;

namespace {

// the record loader wants a path, so stdin gets spooled to a temp file
class StdinSpool {
  public:
    StdinSpool() {
        path_ = fs::temp_directory_path() /
                ("bnat_stdin_" + std::to_string(::getpid()) + ".csv");
        std::ofstream out(path_, std::ios::binary);
        out << std::cin.rdbuf();
        if (!out) throw DataError("failed to spool standard input");
    }
    ~StdinSpool() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    const fs::path& path() const { return path_; }

  private:
    fs::path path_;
};

} // namespace

int run_detect(const std::vector<std::string>& args) {
    CLI::App app{"classify a stream of traffic records into JSON alerts", "bnat detect"};
    std::string model_path;
    std::string data_path;
    std::string scaler_path;
    bool no_scaler = false;
    std::string out_path = "alerts.jsonl";
    std::string summary_path = "summary.json";
    double window = 2.0;

    app.add_option("--model", model_path, "model file (.bndm)")->required();
    app.add_option("--data", data_path, "record CSV, or '-' for standard input; the label "
                                        "column is optional")
        ->required();
    app.add_option("--scaler", scaler_path,
                   "standardization sidecar (default: the model's .scaler.json)");
    app.add_flag("--no-scaler", no_scaler, "classify the records as-is");
    app.add_option("--out", out_path, "alert stream destination, one JSON line per record")
        ->capture_default_str();
    app.add_option("--summary", summary_path, "run summary destination")->capture_default_str();
    app.add_option("--window", window, "labeling window in seconds; throughput accounting only")
        ->capture_default_str();

    try {
        app.parse(cli11_args(args));
    } catch (const CLI::ParseError& e) {
        // help exits clean; every other parse problem is the documented usage code
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (no_scaler && !scaler_path.empty())
        throw ConfigError("--scaler and --no-scaler are mutually exclusive");
    if (window <= 0.0) throw ConfigError("--window must be positive");

    const DbnModel model = load_model(model_path);

    ManifestSink sink("detect", args);
    sink.add_input(model_path);

    std::unique_ptr<StdinSpool> spool;
    fs::path source(data_path);
    if (data_path == "-") {
        spool = std::make_unique<StdinSpool>();
        source = spool->path();
    } else {
        sink.add_input(source);
    }
    const FeatureRecords records =
        load_feature_csv(source, model.arch.input_dim, model.arch.classes);
    if (records.size() == 0) throw DataError("no records in " + data_path);

    Eigen::MatrixXd features = records.features;
    if (!no_scaler) {
        const fs::path sidecar =
            scaler_path.empty() ? scaler_path_for(model_path) : fs::path(scaler_path);
        if (!fs::exists(sidecar))
            throw DataError("no scaler at " + sidecar.string() +
                            "; pass --scaler or --no-scaler explicitly");
        features = apply_scaler(features, load_scaler(sidecar));
        sink.add_input(sidecar);
    }

    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::MatrixXd probs = head_probs(model.head, forward(model, features));
    std::vector<ClassLabel> predicted;
    predicted.reserve(records.size());
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        Eigen::Index best = 0;
        probs.row(i).maxCoeff(&best);
        predicted.push_back(ClassLabel::from_index(static_cast<std::size_t>(best)));
    }
    const std::chrono::duration<double> classify_time = std::chrono::steady_clock::now() - t0;

    std::ofstream alerts(out_path, std::ios::binary);
    if (!alerts) throw DataError("cannot open " + out_path + " for writing");
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        nlohmann::json line;
        line["timestamp"] = i;
        line["predicted_class"] = predicted[i].value;
        nlohmann::json p = nlohmann::json::array();
        for (Eigen::Index c = 0; c < probs.cols(); ++c)
            p.push_back(probs(static_cast<Eigen::Index>(i), c));
        line["probabilities"] = std::move(p);
        alerts << line.dump() << "\n";
    }
    alerts.flush();
    if (!alerts) throw DataError("write failed: " + out_path);
    sink.add_output(out_path);

    const double rate =
        classify_time.count() > 0.0 ? static_cast<double>(records.size()) / classify_time.count()
                                    : 0.0;
    nlohmann::json summary;
    summary["records"] = records.size();
    summary["window_seconds"] = window;
    summary["classify_seconds"] = classify_time.count();
    summary["records_per_second"] = rate;
    if (records.labels) {
        const ConfusionMatrix cm =
            confusion(*records.labels, predicted, model.arch.classes);
        summary["metrics"] = metrics_report("detect", 0, cm);
    }
    write_json_file(summary_path, summary);
    sink.add_output(summary_path);

    log_info(std::to_string(records.size()) + " records in " +
             std::to_string(classify_time.count()) + "s (" + std::to_string(rate) +
             " records/s)");

    sink.config() = {{"window_seconds", window}, {"standardized", !no_scaler}};
    sink.write(fs::path(out_path).has_parent_path() ? fs::path(out_path).parent_path()
                                                    : fs::path("."));
    return 0;
}

} // namespace bnat::cli
