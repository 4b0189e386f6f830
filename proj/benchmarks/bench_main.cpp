#include <benchmark/benchmark.h>

#include "bnat/crc32.hpp"
#include "bnat/dbn.hpp"
#include "bnat/rng.hpp"
#include "bnat/transport.hpp"

using namespace bnat;

namespace {

DbnModel benchmark_model() {
    Architecture arch;
    arch.input_dim = 10;
    arch.hidden = {16, 8};
    arch.classes = 4;
    return init_model(arch, 42);
}

Eigen::MatrixXd random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.gaussian();
    return m;
}

void bm_forward(benchmark::State& state) {
    const DbnModel model = benchmark_model();
    const Eigen::MatrixXd batch = random_batch(static_cast<std::size_t>(state.range(0)), 10, 7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(model, batch));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bm_total_gradient(benchmark::State& state) {
    const DbnModel model = benchmark_model();
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const Eigen::MatrixXd batch = random_batch(n, 10, 7);
    std::vector<ClassLabel> labels;
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) labels.push_back(ClassLabel::from_index(i % 4));
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(total_gradient(model, batch, labels, 1, ++seed));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bm_encode_decode(benchmark::State& state) {
    RoundMessage msg;
    msg.round = 17;
    msg.node_id = 2;
    msg.gradient.assign(static_cast<std::size_t>(state.range(0)), 0.125);
    for (auto _ : state) {
        benchmark::DoNotOptimize(decode_message(encode_message(msg)));
    }
    state.SetBytesProcessed(state.iterations() * (20 + 8 * state.range(0)));
}

void bm_crc32(benchmark::State& state) {
    std::vector<std::uint8_t> data(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<std::uint8_t>(i * 31);
    for (auto _ : state) {
        benchmark::DoNotOptimize(crc32(data));
    }
    state.SetBytesProcessed(state.iterations() * state.range(0));
}

BENCHMARK(bm_forward)->Arg(1)->Arg(64)->Arg(1024);
BENCHMARK(bm_total_gradient)->Arg(16)->Arg(64);
BENCHMARK(bm_encode_decode)->Arg(64)->Arg(4096);
BENCHMARK(bm_crc32)->Arg(1024)->Arg(65536);

} // namespace

BENCHMARK_MAIN();
