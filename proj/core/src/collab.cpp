#include "bnat/collab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <optional>
#include <thread>

#include "bnat/eval.hpp"
#include "bnat/rng.hpp"

namespace bnat {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kPrepTag = 0x70726570;  // "prep"
constexpr std::uint64_t kNodeTag = 0x6e6f6465;  // "node"
constexpr std::uint64_t kBatchTag = 0x62746368; // "btch"
constexpr std::uint64_t kChainTag = 0x63686e73; // "chns"

double elapsed_seconds(Clock::time_point from) {
    return std::chrono::duration<double>(Clock::now() - from).count();
}

void require_congruent(const GradientBundle& a, const GradientBundle& b) {
    const auto same = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
        return x.rows() == y.rows() && x.cols() == y.cols();
    };
    bool ok = same(a.grbm.weights, b.grbm.weights) &&
              a.grbm.visible_bias.size() == b.grbm.visible_bias.size() &&
              a.grbm.hidden_bias.size() == b.grbm.hidden_bias.size() &&
              a.rbms.size() == b.rbms.size() &&
              same(a.head.weights, b.head.weights) &&
              a.head.bias.size() == b.head.bias.size();
    for (std::size_t i = 0; ok && i < a.rbms.size(); ++i)
        ok = same(a.rbms[i].weights, b.rbms[i].weights) &&
             a.rbms[i].visible_bias.size() == b.rbms[i].visible_bias.size() &&
             a.rbms[i].hidden_bias.size() == b.rbms[i].hidden_bias.size();
    if (!ok) throw ProtocolError("average: gradient shapes disagree");
}

/// Mean with canonically ordered addends and extended-precision
/// accumulation. Order-independent, and exact for identical addends: the
/// sum of count <= 2048 equal doubles fits the 64-bit extended mantissa,
/// and dividing it back by count recovers the addend.
class SortedMean {
  public:
    explicit SortedMean(std::size_t count) : values_(count) {}

    template <typename Get>
    double operator()(Get&& get) {
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] = get(k);
        std::sort(values_.begin(), values_.end());
        long double acc = 0.0L;
        for (double v : values_) acc += v;
        return static_cast<double>(acc / static_cast<long double>(values_.size()));
    }

  private:
    std::vector<double> values_;
};

bool bundle_finite(const GradientBundle& g) {
    bool ok = g.grbm.weights.allFinite() && g.grbm.visible_bias.allFinite() &&
              g.grbm.hidden_bias.allFinite() && g.head.weights.allFinite() &&
              g.head.bias.allFinite();
    for (const LayerGradient& layer : g.rbms)
        ok = ok && layer.weights.allFinite() && layer.visible_bias.allFinite() &&
             layer.hidden_bias.allFinite();
    return ok;
}

struct ParticipantLog {
    std::vector<double> loss;
    std::vector<double> accuracy; // NaN outside evaluation points
    std::vector<double> seconds;
};

bool is_eval_iteration(const CollabConfig& cfg, std::size_t iteration) {
    if (iteration == cfg.train.iterations) return true;
    return cfg.eval_every > 0 && iteration % cfg.eval_every == 0;
}

double eval_accuracy(const DbnModel& model, const Dataset& data) {
    return macro_binary_accuracy(evaluate_model(model, data));
}

/// Full budget loop for one participant. eval_std must already be
/// standardized with this node's scaler.
ParticipantLog run_participant_loop(NodeState& node, Transport* transport,
                                    const CollabConfig& cfg, const Dataset* eval_std) {
    ParticipantLog log;
    std::vector<std::pair<std::size_t, double>> eval_points;
    for (std::size_t i = 1; i <= cfg.train.iterations; ++i) {
        const auto start = Clock::now();
        const double loss =
            participant_step(node, transport, cfg, static_cast<std::uint32_t>(i));
        double acc = std::numeric_limits<double>::quiet_NaN();
        if (eval_std && is_eval_iteration(cfg, i)) {
            acc = eval_accuracy(node.model, *eval_std);
            eval_points.emplace_back(i, acc);
        }
        log.loss.push_back(loss);
        log.accuracy.push_back(acc);
        log.seconds.push_back(elapsed_seconds(start));

        if (cfg.plateau_stop && transport == nullptr && !std::isnan(acc)) {
            for (auto it = eval_points.rbegin(); it != eval_points.rend(); ++it) {
                if (it->first + cfg.plateau_window > i) continue;
                if (std::abs(acc - it->second) < cfg.plateau_delta) return log;
                break;
            }
        }
    }
    return log;
}

std::vector<RoundRecord> zip_history(const std::vector<ParticipantLog>& logs) {
    std::size_t rounds = 0;
    for (const ParticipantLog& log : logs) rounds = std::max(rounds, log.loss.size());
    std::vector<RoundRecord> history;
    history.reserve(rounds);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < rounds; ++i) {
        RoundRecord rec;
        rec.iteration = i + 1;
        bool any_acc = false;
        double secs = 0.0;
        for (const ParticipantLog& log : logs) {
            rec.loss.push_back(i < log.loss.size() ? log.loss[i] : nan);
            const double a = i < log.accuracy.size() ? log.accuracy[i] : nan;
            rec.accuracy.push_back(a);
            any_acc = any_acc || !std::isnan(a);
            if (i < log.seconds.size()) secs = std::max(secs, log.seconds[i]);
        }
        if (!any_acc) rec.accuracy.clear();
        rec.seconds = secs;
        history.push_back(std::move(rec));
    }
    return history;
}

void require_training_inputs(const std::vector<Dataset>& node_data,
                             const CollabConfig& cfg) {
    cfg.validate();
    if (node_data.size() != cfg.nodes)
        throw ConfigError("training: " + std::to_string(node_data.size()) +
                          " datasets for " + std::to_string(cfg.nodes) + " nodes");
    for (const Dataset& d : node_data) {
        if (d.empty()) throw DataError("training: empty node dataset");
        if (d.dim() != cfg.train.arch.input_dim)
            throw ConfigError("training: data dimension " + std::to_string(d.dim()) +
                              " disagrees with architecture input " +
                              std::to_string(cfg.train.arch.input_dim));
        d.validate_labels(cfg.train.arch.classes);
    }
}

/// The canonical scaler for a node: fit on the canonicalized row order, so
/// the parameters are bitwise identical for any source ordering of the
/// same sample multiset (prepare_nodes fits the very same way).
ScalerParams canonical_scaler(const Dataset& raw, std::uint64_t seed) {
    return fit_scaler(canonical_prep(raw, seed));
}

Dataset standardized_eval(const Dataset& raw, const ScalerParams& scaler,
                          std::size_t classes) {
    raw.validate_labels(classes);
    return apply_scaler(raw, scaler);
}

/// Join all threads, then propagate the most informative failure: a round
/// abort in one node leaves its peers timing out in gather, and those
/// timeouts are secondary.
void join_and_rethrow(std::vector<std::thread>& threads,
                      std::vector<std::exception_ptr>& errors) {
    for (std::thread& t : threads)
        if (t.joinable()) t.join();
    std::exception_ptr timeout;
    std::exception_ptr other;
    for (const std::exception_ptr& e : errors) {
        if (!e) continue;
        bool is_timeout = false;
        try {
            std::rethrow_exception(e);
        } catch (const TimeoutError&) {
            is_timeout = true;
        } catch (...) {
        }
        if (is_timeout) {
            if (!timeout) timeout = e;
        } else if (!other) {
            other = e;
        }
    }
    if (other) std::rethrow_exception(other);
    if (timeout) std::rethrow_exception(timeout);
}

} // namespace

void CollabConfig::validate() const {
    train.validate();
    if (nodes == 0) throw ConfigError("config: need at least one node");
    if (!node_seeds.empty() && node_seeds.size() != nodes)
        throw ConfigError("config: " + std::to_string(node_seeds.size()) +
                          " node seeds for " + std::to_string(nodes) + " nodes");
    if (train.iterations > std::numeric_limits<std::uint32_t>::max())
        throw ConfigError("config: iteration budget exceeds the round counter");
    if (round_timeout.count() <= 0) throw ConfigError("config: round timeout must be positive");
    if (plateau_stop && plateau_window == 0)
        throw ConfigError("config: plateau window must be positive");
    if (plateau_stop && !(plateau_delta >= 0.0))
        throw ConfigError("config: plateau delta must be non-negative");
}

std::uint64_t CollabConfig::seed_for(std::size_t slot) const {
    if (!node_seeds.empty()) return node_seeds.at(slot);
    return mix_seed(train.seed, kNodeTag, static_cast<std::uint64_t>(slot + 1));
}

GradientBundle average_gradients(const std::vector<GradientBundle>& bundles,
                                 std::size_t count) {
    if (count == 0) throw ProtocolError("average: zero bundles");
    if (bundles.size() != count)
        throw ProtocolError("average: got " + std::to_string(bundles.size()) +
                            " bundles, expected " + std::to_string(count));
    for (const GradientBundle& b : bundles) require_congruent(bundles.front(), b);

    SortedMean mean(count);
    GradientBundle out = bundles.front(); // shapes; every element overwritten
    out.batch_size = 0;
    for (const GradientBundle& b : bundles) out.batch_size += b.batch_size;

    const auto average_matrix = [&](Eigen::MatrixXd& dst, auto&& pick) {
        for (Eigen::Index r = 0; r < dst.rows(); ++r)
            for (Eigen::Index c = 0; c < dst.cols(); ++c)
                dst(r, c) = mean([&](std::size_t k) { return pick(k)(r, c); });
    };
    const auto average_vector = [&](Eigen::VectorXd& dst, auto&& pick) {
        for (Eigen::Index r = 0; r < dst.size(); ++r)
            dst(r) = mean([&](std::size_t k) { return pick(k)(r); });
    };

    average_matrix(out.grbm.weights,
                   [&](std::size_t k) -> const Eigen::MatrixXd& { return bundles[k].grbm.weights; });
    average_vector(out.grbm.visible_bias, [&](std::size_t k) -> const Eigen::VectorXd& {
        return bundles[k].grbm.visible_bias;
    });
    average_vector(out.grbm.hidden_bias, [&](std::size_t k) -> const Eigen::VectorXd& {
        return bundles[k].grbm.hidden_bias;
    });
    for (std::size_t layer = 0; layer < out.rbms.size(); ++layer) {
        average_matrix(out.rbms[layer].weights, [&](std::size_t k) -> const Eigen::MatrixXd& {
            return bundles[k].rbms[layer].weights;
        });
        average_vector(out.rbms[layer].visible_bias,
                       [&](std::size_t k) -> const Eigen::VectorXd& {
                           return bundles[k].rbms[layer].visible_bias;
                       });
        average_vector(out.rbms[layer].hidden_bias,
                       [&](std::size_t k) -> const Eigen::VectorXd& {
                           return bundles[k].rbms[layer].hidden_bias;
                       });
    }
    average_matrix(out.head.weights,
                   [&](std::size_t k) -> const Eigen::MatrixXd& { return bundles[k].head.weights; });
    average_vector(out.head.bias,
                   [&](std::size_t k) -> const Eigen::VectorXd& { return bundles[k].head.bias; });
    return out;
}

Dataset canonical_prep(const Dataset& data, std::uint64_t seed) {
    if (data.empty()) throw DataError("prep: empty dataset");
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const Eigen::MatrixXd& rows = data.features();
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ra = static_cast<Eigen::Index>(a);
        const auto rb = static_cast<Eigen::Index>(b);
        for (Eigen::Index c = 0; c < rows.cols(); ++c) {
            if (rows(ra, c) != rows(rb, c)) return rows(ra, c) < rows(rb, c);
        }
        return data.label(a).value < data.label(b).value;
    });
    Rng rng(mix_seed(seed, kPrepTag));
    rng.shuffle(order);
    return data.select(order);
}

std::vector<NodeState> prepare_nodes(const std::vector<Dataset>& node_data,
                                     const CollabConfig& config) {
    require_training_inputs(node_data, config);
    const DbnModel initial = init_model(config.train.arch, config.train.seed);
    std::vector<NodeState> nodes;
    nodes.reserve(node_data.size());
    for (std::size_t slot = 0; slot < node_data.size(); ++slot) {
        NodeState state;
        state.node_id = static_cast<std::uint16_t>(slot + 1);
        state.seed = config.seed_for(slot);
        state.model = initial;
        Dataset prepped = canonical_prep(node_data[slot], config.train.seed);
        state.train = apply_scaler(prepped, fit_scaler(prepped));
        nodes.push_back(std::move(state));
    }
    return nodes;
}

double participant_step(NodeState& node, Transport* transport, const CollabConfig& config,
                        std::uint32_t iteration) {
    const TrainConfig& tc = config.train;
    const std::size_t n = node.train.size();
    const std::size_t batch_n = std::min(tc.batch_size, n);

    Rng batch_rng(mix_seed(node.seed, kBatchTag, iteration));
    const std::vector<std::size_t> idx = batch_rng.sample_indices(n, batch_n);

    Eigen::MatrixXd batch(static_cast<Eigen::Index>(batch_n),
                          static_cast<Eigen::Index>(node.train.dim()));
    std::vector<ClassLabel> labels(batch_n);
    for (std::size_t r = 0; r < batch_n; ++r) {
        batch.row(static_cast<Eigen::Index>(r)) =
            node.train.features().row(static_cast<Eigen::Index>(idx[r]));
        labels[r] = node.train.label(idx[r]);
    }

    GradientBundle own = total_gradient(node.model, batch, labels, tc.cd_steps,
                                        mix_seed(node.seed, kChainTag, iteration));

    GradientBundle update;
    if (transport) {
        transport->broadcast({iteration, node.node_id, flatten(own)});
        std::vector<RoundMessage> peers = transport->gather(iteration, config.round_timeout);
        std::vector<GradientBundle> bundles;
        bundles.reserve(peers.size() + 1);
        bundles.push_back(std::move(own));
        for (const RoundMessage& msg : peers) {
            try {
                bundles.push_back(unflatten_gradient(msg.gradient, tc.arch));
            } catch (const ConfigError& e) {
                throw ProtocolError("node " + std::to_string(msg.node_id) +
                                    " sent an incompatible gradient: " + e.what());
            }
        }
        update = average_gradients(bundles, bundles.size());
    } else {
        update = std::move(own);
    }

    if (!bundle_finite(update))
        throw NumericError("iteration " + std::to_string(iteration) +
                           ": non-finite gradient");
    apply_update(node.model, update, tc.learning_rate);

    return -head_log_likelihood(node.model.head, forward(node.model, batch), labels);
}

RoundRecord run_round(std::vector<NodeState>& nodes,
                      const std::vector<Transport*>& transports,
                      const CollabConfig& config, std::uint32_t iteration) {
    if (nodes.empty()) throw ConfigError("round: no nodes");
    if (transports.size() != nodes.size())
        throw ConfigError("round: transport count disagrees with node count");

    const auto start = Clock::now();
    RoundRecord rec;
    rec.iteration = iteration;
    rec.loss.resize(nodes.size());

    if (nodes.size() == 1) {
        rec.loss[0] = participant_step(nodes[0], transports[0], config, iteration);
    } else {
        std::vector<std::thread> threads;
        std::vector<std::exception_ptr> errors(nodes.size());
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            threads.emplace_back([&, k] {
                try {
                    rec.loss[k] = participant_step(nodes[k], transports[k], config, iteration);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            });
        }
        join_and_rethrow(threads, errors);
    }
    rec.seconds = elapsed_seconds(start);
    return rec;
}

SchemeResult train_pclm(const std::vector<Dataset>& node_data, const CollabConfig& config,
                        const std::vector<Dataset>* eval_data) {
    if (config.plateau_stop)
        throw ConfigError("plateau stop is unsupported with gradient exchange");
    std::vector<NodeState> nodes = prepare_nodes(node_data, config);
    if (eval_data && eval_data->size() != nodes.size())
        throw ConfigError("training: evaluation set count disagrees with node count");

    std::vector<ScalerParams> scalers;
    scalers.reserve(node_data.size());
    for (const Dataset& d : node_data)
        scalers.push_back(canonical_scaler(d, config.train.seed));

    std::vector<std::uint16_t> ids;
    for (const NodeState& s : nodes) ids.push_back(s.node_id);
    std::vector<std::unique_ptr<Transport>> mesh = make_inproc_mesh(ids);

    std::vector<Dataset> eval_std;
    if (eval_data) {
        for (std::size_t k = 0; k < nodes.size(); ++k)
            eval_std.push_back(standardized_eval((*eval_data)[k], scalers[k],
                                                 config.train.arch.classes));
    }

    std::vector<ParticipantLog> logs(nodes.size());
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        threads.emplace_back([&, k] {
            try {
                logs[k] = run_participant_loop(nodes[k], mesh[k].get(), config,
                                               eval_data ? &eval_std[k] : nullptr);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        });
    }
    join_and_rethrow(threads, errors);

    SchemeResult result;
    result.scheme = "pclm";
    result.node_ids = ids;
    for (NodeState& s : nodes) result.models.push_back(std::move(s.model));
    result.scalers = std::move(scalers);
    result.history = zip_history(logs);
    return result;
}

SchemeResult train_clm(const std::vector<Dataset>& node_data, const CollabConfig& config,
                       const Dataset* eval_data) {
    config.validate();
    if (node_data.size() != config.nodes)
        throw ConfigError("training: " + std::to_string(node_data.size()) +
                          " datasets for " + std::to_string(config.nodes) + " nodes");

    CollabConfig pooled_config = config;
    pooled_config.nodes = 1;
    if (!config.node_seeds.empty())
        pooled_config.node_seeds = {config.node_seeds.front()};

    const std::vector<Dataset> pooled = {pool_datasets(node_data)};
    std::vector<NodeState> nodes = prepare_nodes(pooled, pooled_config);
    const ScalerParams scaler = canonical_scaler(pooled[0], config.train.seed);

    std::optional<Dataset> eval_std;
    if (eval_data)
        eval_std = standardized_eval(*eval_data, scaler, config.train.arch.classes);

    std::vector<ParticipantLog> logs(1);
    logs[0] = run_participant_loop(nodes[0], nullptr, pooled_config,
                                   eval_std ? &*eval_std : nullptr);

    SchemeResult result;
    result.scheme = "clm";
    result.node_ids = {1};
    result.models.push_back(std::move(nodes[0].model));
    result.scalers.push_back(scaler);
    result.history = zip_history(logs);
    return result;
}

SchemeResult train_llm(const std::vector<Dataset>& node_data, const CollabConfig& config,
                       const std::vector<Dataset>* eval_data) {
    std::vector<NodeState> nodes = prepare_nodes(node_data, config);
    if (eval_data && eval_data->size() != nodes.size())
        throw ConfigError("training: evaluation set count disagrees with node count");

    std::vector<ScalerParams> scalers;
    scalers.reserve(node_data.size());
    for (const Dataset& d : node_data)
        scalers.push_back(canonical_scaler(d, config.train.seed));

    std::vector<Dataset> eval_std;
    if (eval_data) {
        for (std::size_t k = 0; k < nodes.size(); ++k)
            eval_std.push_back(standardized_eval((*eval_data)[k], scalers[k],
                                                 config.train.arch.classes));
    }

    std::vector<ParticipantLog> logs(nodes.size());
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        threads.emplace_back([&, k] {
            try {
                logs[k] = run_participant_loop(nodes[k], nullptr, config,
                                               eval_data ? &eval_std[k] : nullptr);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        });
    }
    join_and_rethrow(threads, errors);

    SchemeResult result;
    result.scheme = "llm";
    for (NodeState& s : nodes) {
        result.node_ids.push_back(s.node_id);
        result.models.push_back(std::move(s.model));
    }
    result.scalers = std::move(scalers);
    result.history = zip_history(logs);
    return result;
}

SchemeResult train_pclm_participant(const Dataset& data, const CollabConfig& config,
                                    Transport& transport, std::uint16_t node_id,
                                    const Dataset* eval_data) {
    if (config.plateau_stop)
        throw ConfigError("plateau stop is unsupported with gradient exchange");
    config.validate();
    if (node_id == 0 || node_id > config.nodes)
        throw ConfigError("participant: node id " + std::to_string(node_id) +
                          " outside 1.." + std::to_string(config.nodes));
    if (transport.peer_count() + 1 != config.nodes)
        throw ConfigError("participant: mesh size " +
                          std::to_string(transport.peer_count() + 1) +
                          " disagrees with configured " + std::to_string(config.nodes));
    if (transport.node_id() != node_id)
        throw ConfigError("participant: transport is bound to node " +
                          std::to_string(transport.node_id()));
    if (data.empty()) throw DataError("training: empty node dataset");
    if (data.dim() != config.train.arch.input_dim)
        throw ConfigError("training: data dimension " + std::to_string(data.dim()) +
                          " disagrees with architecture input " +
                          std::to_string(config.train.arch.input_dim));
    data.validate_labels(config.train.arch.classes);

    NodeState state;
    state.node_id = node_id;
    state.seed = config.seed_for(node_id - 1);
    state.model = init_model(config.train.arch, config.train.seed);
    Dataset prepped = canonical_prep(data, config.train.seed);
    const ScalerParams scaler = fit_scaler(prepped);
    state.train = apply_scaler(prepped, scaler);

    std::optional<Dataset> eval_std;
    if (eval_data)
        eval_std = standardized_eval(*eval_data, scaler, config.train.arch.classes);

    std::vector<ParticipantLog> logs(1);
    logs[0] = run_participant_loop(state, &transport, config, eval_std ? &*eval_std : nullptr);

    SchemeResult result;
    result.scheme = "pclm";
    result.node_ids = {node_id};
    result.models.push_back(std::move(state.model));
    result.scalers.push_back(scaler);
    result.history = zip_history(logs);
    return result;
}

void write_history_csv(const std::string& path, const SchemeResult& result) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw DataError("cannot open " + path + " for writing");
    const auto close_guard = std::unique_ptr<std::FILE, int (*)(std::FILE*)>(f, &std::fclose);

    const auto put_number = [&](double v) {
        if (!std::isnan(v)) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            std::fputs(buf, f);
        }
    };

    std::fputs("iteration,scheme,node,loss,accuracy\n", f);
    for (const RoundRecord& rec : result.history) {
        for (std::size_t k = 0; k < result.node_ids.size(); ++k) {
            const double loss = k < rec.loss.size() ? rec.loss[k]
                                                    : std::numeric_limits<double>::quiet_NaN();
            if (std::isnan(loss)) continue; // participant had stopped
            std::fprintf(f, "%zu,%s,%u,", rec.iteration, result.scheme.c_str(),
                         static_cast<unsigned>(result.node_ids[k]));
            put_number(loss);
            std::fputc(',', f);
            if (!rec.accuracy.empty() && k < rec.accuracy.size())
                put_number(rec.accuracy[k]);
            std::fputc('\n', f);
        }
    }
    if (std::fflush(f) != 0) throw DataError("flush failed for " + path);
}

} // namespace bnat
