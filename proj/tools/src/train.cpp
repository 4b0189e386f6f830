#include <CLI11.hpp>

#include "bnat/collab.hpp"
#include "bnat/dataset.hpp"
#include "bnat/errors.hpp"
#include "bnat/eval.hpp"
#include "bnat/model_io.hpp"
#include "bnat/transport.hpp"
#include "cli.hpp"
#include "util.hpp"

namespace bnat::cli {

namespace fs = std::filesystem;

namespace {

// node{l}.train.csv wins over node{l}.csv so generated splits train on the
// train side by default.
fs::path node_file(const fs::path& dir, std::size_t node, const char* preferred,
                   const char* fallback) {
    const std::string stem = "node" + std::to_string(node);
    const fs::path first = dir / (stem + preferred);
    if (fs::exists(first)) return first;
    const fs::path second = dir / (stem + fallback);
    if (fs::exists(second)) return second;
    throw DataError("no data for node " + std::to_string(node) + ": tried " + first.string() +
                    " and " + second.string());
}

PeerAddress parse_peer(const std::string& text) {
    const std::size_t first = text.find(':');
    const std::size_t second = text.find(':', first == std::string::npos ? first : first + 1);
    if (first == std::string::npos || second == std::string::npos)
        throw ConfigError("--peer expects host:port:id, got '" + text + "'");
    PeerAddress peer;
    peer.host = text.substr(0, first);
    try {
        peer.port = static_cast<std::uint16_t>(std::stoul(text.substr(first + 1, second - first - 1)));
        peer.node_id = static_cast<std::uint16_t>(std::stoul(text.substr(second + 1)));
    } catch (const std::exception&) {
        throw ConfigError("--peer expects host:port:id, got '" + text + "'");
    }
    if (peer.host.empty() || peer.port == 0 || peer.node_id == 0)
        throw ConfigError("--peer expects host:port:id with nonzero port and id, got '" + text + "'");
    return peer;
}

struct EvalSource {
    std::vector<Dataset> per_node; // one per slot when present
    std::vector<fs::path> paths;
};

EvalSource load_eval_data(const std::string& eval_arg, std::size_t nodes, std::size_t classes,
                          std::size_t dim) {
    EvalSource src;
    if (eval_arg.empty()) return src;
    const fs::path p(eval_arg);
    if (fs::is_directory(p)) {
        for (std::size_t l = 1; l <= nodes; ++l) {
            const fs::path f = node_file(p, l, ".test.csv", ".csv");
            src.per_node.push_back(load_csv(f, dim, classes));
            src.paths.push_back(f);
        }
    } else {
        const Dataset shared = load_csv(p, dim, classes);
        src.per_node.assign(nodes, shared);
        src.paths.push_back(p);
    }
    return src;
}

void save_artifact(const fs::path& dir, const std::string& stem, const DbnModel& model,
                   const ScalerParams& scaler, ManifestSink& sink) {
    const fs::path model_path = dir / (stem + ".bndm");
    save_model(model_path.string(), model);
    sink.add_output(model_path);
    const fs::path scaler_path = scaler_path_for(model_path);
    save_scaler(scaler_path, scaler);
    sink.add_output(scaler_path);
}

} // namespace

int run_train(const std::vector<std::string>& args) {
    CLI::App app{"train a detection model under one collaboration scheme", "bnat train"};
    std::string scheme;
    std::string data_dir;
    std::string out_dir;
    std::size_t nodes = 3;
    std::size_t epochs = 700;
    double lr = 0.01;
    int cd_k = 1;
    std::size_t batch = 64;
    std::string arch_text = "16,8";
    std::size_t classes = 4;
    std::uint64_t seed = 42;
    std::vector<std::uint64_t> node_seeds;
    std::size_t eval_every = 0;
    std::string eval_data;
    bool plateau = false;
    double plateau_delta = 0.001;
    std::size_t plateau_window = 50;
    std::string transport = "inproc";
    std::uint16_t node_id = 0;
    std::uint16_t listen_port = 0;
    std::vector<std::string> peer_specs;
    std::size_t timeout_ms = 30000;

    app.add_option("--scheme", scheme, "pclm (decentralized), clm (centralized), or llm (local)")
        ->required()
        ->check(CLI::IsMember({"pclm", "clm", "llm"}));
    app.add_option("--data", data_dir, "directory holding node{l}.train.csv or node{l}.csv")
        ->required();
    app.add_option("--out", out_dir, "output directory for models, history, and report")
        ->required();
    app.add_option("--nodes", nodes, "number of participating nodes")->capture_default_str();
    app.add_option("--epochs", epochs, "training iterations (gradient exchanges for pclm)")
        ->capture_default_str();
    app.add_option("--lr", lr, "learning rate")->capture_default_str();
    app.add_option("--cd-k", cd_k, "contrastive divergence steps")->capture_default_str();
    app.add_option("--batch", batch, "minibatch size")->capture_default_str();
    app.add_option("--arch", arch_text, "hidden layer sizes, comma separated; the input "
                                        "width comes from the data")
        ->capture_default_str();
    app.add_option("--classes", classes, "number of traffic classes")->capture_default_str();
    app.add_option("--seed", seed, "training seed")->capture_default_str();
    app.add_option("--node-seed", node_seeds,
                   "explicit per-node seed; repeat once per node (equal seeds make "
                   "pclm nodes draw identical batches)");
    app.add_option("--eval-every", eval_every,
                   "record accuracy every k iterations (0: final iteration only)")
        ->capture_default_str();
    app.add_option("--eval-data", eval_data,
                   "held-out data: a directory with node{l}.test.csv files or one shared CSV");
    app.add_flag("--plateau", plateau,
                 "stop when accuracy stops moving (llm/clm only; needs --eval-data and "
                 "--eval-every)");
    app.add_option("--plateau-delta", plateau_delta, "accuracy change below this counts as flat")
        ->capture_default_str();
    app.add_option("--plateau-window", plateau_window, "iterations between compared checkpoints")
        ->capture_default_str();
    app.add_option("--transport", transport, "pclm gradient exchange: inproc or socket")
        ->check(CLI::IsMember({"inproc", "socket"}))
        ->capture_default_str();
    app.add_option("--node-id", node_id, "this participant's node id (socket transport)");
    app.add_option("--listen", listen_port, "TCP port to accept lower-id peers on");
    app.add_option("--peer", peer_specs, "peer address as host:port:id; repeat per peer");
    app.add_option("--timeout-ms", timeout_ms, "gather timeout per round in milliseconds")
        ->capture_default_str();

    try {
        app.parse(cli11_args(args));
    } catch (const CLI::ParseError& e) {
        // help exits clean; every other parse problem is the documented usage code
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const bool socket_mode = transport == "socket";
    if (scheme != "pclm") {
        if (socket_mode || node_id != 0 || listen_port != 0 || !peer_specs.empty())
            throw ConfigError(scheme + " trains without gradient exchange; --transport socket, "
                                       "--node-id, --listen, and --peer apply to pclm only");
    }
    if (socket_mode) {
        if (node_id == 0) throw ConfigError("socket transport needs --node-id");
        if (peer_specs.empty()) throw ConfigError("socket transport needs at least one --peer");
    }

    CollabConfig config;
    config.train.learning_rate = lr;
    config.train.cd_steps = cd_k;
    config.train.batch_size = batch;
    config.train.iterations = epochs;
    config.train.seed = seed;
    config.train.arch.classes = classes;
    config.train.arch.hidden = parse_counts(arch_text, "--arch");
    config.nodes = socket_mode ? peer_specs.size() + 1 : nodes;
    config.node_seeds = node_seeds;
    config.eval_every = eval_every;
    config.round_timeout = std::chrono::milliseconds(timeout_ms);
    config.plateau_stop = plateau;
    config.plateau_delta = plateau_delta;
    config.plateau_window = plateau_window;

    ManifestSink sink("train", args);

    // socket mode loads only this participant's shard; everything else loads all
    const fs::path data_path(data_dir);
    std::vector<Dataset> node_data;
    if (socket_mode) {
        const fs::path f = node_file(data_path, node_id, ".train.csv", ".csv");
        node_data.push_back(load_csv(f, std::nullopt, classes));
        sink.add_input(f);
    } else {
        for (std::size_t l = 1; l <= config.nodes; ++l) {
            const fs::path f = node_file(data_path, l, ".train.csv", ".csv");
            node_data.push_back(load_csv(f, node_data.empty()
                                                ? std::optional<std::size_t>{}
                                                : std::optional<std::size_t>{node_data[0].dim()},
                                         classes));
            sink.add_input(f);
        }
    }
    config.train.arch.input_dim = node_data[0].dim();

    EvalSource eval;
    if (socket_mode && !eval_data.empty() && fs::is_directory(eval_data)) {
        const fs::path f = node_file(eval_data, node_id, ".test.csv", ".csv");
        eval.per_node.push_back(load_csv(f, node_data[0].dim(), classes));
        eval.paths.push_back(f);
    } else {
        eval = load_eval_data(eval_data, socket_mode ? 1 : config.nodes, classes,
                              node_data[0].dim());
    }
    for (const fs::path& p : eval.paths) sink.add_input(p);

    sink.config() = {{"scheme", scheme},
                     {"nodes", config.nodes},
                     {"epochs", epochs},
                     {"lr", lr},
                     {"cd_k", cd_k},
                     {"batch", batch},
                     {"hidden", config.train.arch.hidden},
                     {"classes", classes},
                     {"seed", seed},
                     {"eval_every", eval_every},
                     {"transport", transport}};
    if (plateau) {
        sink.config()["plateau_delta"] = plateau_delta;
        sink.config()["plateau_window"] = plateau_window;
    }

    log_info("training " + scheme + " with " + std::to_string(config.nodes) + " node(s), " +
             std::to_string(epochs) + " iterations");

    SchemeResult result;
    if (scheme == "llm") {
        result = train_llm(node_data, config, eval.per_node.empty() ? nullptr : &eval.per_node);
    } else if (scheme == "clm") {
        std::optional<Dataset> pooled_eval;
        if (!eval.per_node.empty()) {
            // one shared file is already one pooled set; per-node files get pooled
            pooled_eval = eval.paths.size() == 1 ? eval.per_node[0] : pool_datasets(eval.per_node);
        }
        result = train_clm(node_data, config, pooled_eval ? &*pooled_eval : nullptr);
    } else if (socket_mode) {
        SocketConfig sock;
        sock.node_id = node_id;
        sock.listen_port = listen_port;
        sock.connect_timeout = std::chrono::milliseconds(timeout_ms);
        for (const std::string& spec : peer_specs) sock.peers.push_back(parse_peer(spec));
        log_info("connecting socket mesh as node " + std::to_string(node_id));
        const std::unique_ptr<Transport> mesh = connect_socket_mesh(sock);
        result = train_pclm_participant(node_data[0], config, *mesh, node_id,
                                        eval.per_node.empty() ? nullptr : &eval.per_node[0]);
    } else {
        result = train_pclm(node_data, config, eval.per_node.empty() ? nullptr : &eval.per_node);
    }

    fs::create_directories(out_dir);
    const fs::path out_path(out_dir);

    if (scheme == "clm") {
        save_artifact(out_path, "clm", result.models[0], result.scalers[0], sink);
    } else if (scheme == "llm") {
        for (std::size_t i = 0; i < result.models.size(); ++i)
            save_artifact(out_path, "llm_node" + std::to_string(result.node_ids[i]),
                          result.models[i], result.scalers[i], sink);
    } else if (socket_mode) {
        save_artifact(out_path, "pclm_node" + std::to_string(node_id), result.models[0],
                      result.scalers[0], sink);
    } else {
        // the trained model is shared; the standardization stays per node
        save_artifact(out_path, "pclm_global", result.models[0], result.scalers[0], sink);
        for (std::size_t i = 0; i < result.scalers.size(); ++i) {
            const fs::path p =
                out_path / ("pclm_node" + std::to_string(result.node_ids[i]) + ".scaler.json");
            save_scaler(p, result.scalers[i]);
            sink.add_output(p);
        }
    }

    const fs::path history_path = out_path / "history.csv";
    write_history_csv(history_path.string(), result);
    sink.add_output(history_path);

    // the report grades each node's final model: held-out data when given,
    // otherwise its own standardized training data
    nlohmann::json report = nlohmann::json::array();
    for (std::size_t i = 0; i < result.models.size(); ++i) {
        Dataset graded;
        if (!eval.per_node.empty()) {
            graded = scheme == "clm" && eval.paths.size() > 1 ? pool_datasets(eval.per_node)
                                                              : eval.per_node[i];
        } else if (scheme == "clm") {
            graded = pool_datasets(node_data);
        } else {
            graded = node_data[socket_mode ? 0 : i];
        }
        const Dataset standardized = apply_scaler(graded, result.scalers[i]);
        const ConfusionMatrix cm = evaluate_model(result.models[i], standardized);
        report.push_back(metrics_report(result.scheme, result.node_ids[i], cm));
        log_info("node " + std::to_string(result.node_ids[i]) + " accuracy " +
                 std::to_string(report.back()["accuracy_eq15"].get<double>()));
    }
    const fs::path report_path = out_path / "report.json";
    write_json_file(report_path, report);
    sink.add_output(report_path);

    sink.write(out_path);
    return 0;
}

} // namespace bnat::cli
