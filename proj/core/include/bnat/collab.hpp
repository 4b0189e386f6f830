#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "bnat/dataset.hpp"
#include "bnat/dbn.hpp"
#include "bnat/transport.hpp"

namespace bnat {

/// Shared settings for the three training schemes. Every participant slot
/// (0-based; node_id = slot + 1) draws its private randomness from
/// seed_for(slot); the centralized scheme occupies slot 0, which is what
/// makes the single-dataset degeneracies exact.
struct CollabConfig {
    TrainConfig train;
    std::size_t nodes = 3;
    /// Per-slot seed overrides; empty selects seeds derived from
    /// train.seed. Setting all entries equal synchronizes batch and chain
    /// randomness across nodes.
    std::vector<std::uint64_t> node_seeds;
    /// Evaluate every this many iterations (plus always the last); 0 means
    /// last only. No effect without evaluation data.
    std::size_t eval_every = 0;
    std::chrono::milliseconds round_timeout{30000};
    /// Optional early stop for schemes without gradient exchange: stop
    /// once accuracy moved less than plateau_delta over the last
    /// plateau_window iterations (measured between evaluation points).
    bool plateau_stop = false;
    double plateau_delta = 0.001;
    std::size_t plateau_window = 50;

    void validate() const;
    std::uint64_t seed_for(std::size_t slot) const;
};

/// One participant mid-training.
struct NodeState {
    std::uint16_t node_id = 1;
    std::uint64_t seed = 0;
    DbnModel model;
    Dataset train; // canonicalized and standardized
};

/// One iteration's history row group: losses (and, at evaluation points,
/// accuracies) per participant in orchestrator order. A NaN entry means
/// the participant had already stopped or was not evaluated.
struct RoundRecord {
    std::size_t iteration = 0;
    std::vector<double> loss;
    std::vector<double> accuracy; // empty when nobody evaluated
    double seconds = 0.0;
};

struct SchemeResult {
    std::string scheme;
    std::vector<std::uint16_t> node_ids;
    std::vector<DbnModel> models;
    std::vector<ScalerParams> scalers;
    std::vector<RoundRecord> history;
};

/// Element-wise arithmetic mean of `count` shape-congruent bundles. The
/// addends of every element are ordered canonically before summation, so
/// the result is independent of bundle order, and the mean of identical
/// bundles reproduces them bitwise.
GradientBundle average_gradients(const std::vector<GradientBundle>& bundles,
                                 std::size_t count);

/// Sorts rows lexicographically (features, then label) and applies one
/// seed-derived shuffle. Canonicalizes away source row order so every
/// scheme trains on the same stream for the same sample multiset.
Dataset canonical_prep(const Dataset& data, std::uint64_t seed);

/// Builds the per-slot states all schemes share: canonical prep, per-node
/// scaler fit + standardization, one synchronized initial model.
std::vector<NodeState> prepare_nodes(const std::vector<Dataset>& node_data,
                                     const CollabConfig& config);

/// One node's share of round `iteration`: draw a mini-batch, compute the
/// combined gradient, exchange over `transport` when given (including the
/// own bundle in the average), update, and return the post-update batch
/// loss. transport == nullptr trains purely locally.
double participant_step(NodeState& node, Transport* transport, const CollabConfig& config,
                        std::uint32_t iteration);

/// One synchronized round across all nodes; nodes run concurrently and the
/// returned record holds their post-update losses. transports[k] may be
/// nullptr (no exchange) but must match nodes[k] otherwise.
RoundRecord run_round(std::vector<NodeState>& nodes,
                      const std::vector<Transport*>& transports,
                      const CollabConfig& config, std::uint32_t iteration);

/// Collaborative scheme: every node trains on its own data and the mesh
/// averages gradients each round. eval_data, when given, holds one test
/// set per node.
SchemeResult train_pclm(const std::vector<Dataset>& node_data, const CollabConfig& config,
                        const std::vector<Dataset>* eval_data = nullptr);

/// Centralized baseline: all node data pooled, one model, participant
/// slot 0.
SchemeResult train_clm(const std::vector<Dataset>& node_data, const CollabConfig& config,
                       const Dataset* eval_data = nullptr);

/// Local baseline: every node trains alone; no communication.
SchemeResult train_llm(const std::vector<Dataset>& node_data, const CollabConfig& config,
                       const std::vector<Dataset>* eval_data = nullptr);

/// One collaborative participant over an externally connected transport
/// (socket mode: one process per node). `data` is this node's raw training
/// data; config.nodes must equal the mesh size.
SchemeResult train_pclm_participant(const Dataset& data, const CollabConfig& config,
                                    Transport& transport, std::uint16_t node_id,
                                    const Dataset* eval_data = nullptr);

/// CSV export: header `iteration,scheme,node,loss,accuracy`, one row per
/// participant per iteration trained; accuracy empty outside evaluation
/// points.
void write_history_csv(const std::string& path, const SchemeResult& result);

} // namespace bnat
