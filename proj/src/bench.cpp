#include "hairseg/bench.hpp"

#include "hairseg/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace hairseg {

std::string BenchReport::to_json() const {
    nlohmann::json j;
    j["input_size"] = {{"height", input_size.height}, {"width", input_size.width}, {"channels", input_size.channels}};
    j["warmup_iters"] = warmup_iters;
    j["timed_iters"] = timed_iters;
    j["mean_ms"] = mean_ms;
    j["p50_ms"] = p50_ms;
    j["p95_ms"] = p95_ms;
    return j.dump();
}

double percentile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw ValueError("percentile of an empty sample");
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
    return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

BenchReport summarize_timings(Shape input_size, std::size_t warmup_iters, std::vector<double> timings_ms) {
    if (timings_ms.empty()) throw ValueError("bench needs at least one timed iteration");
    BenchReport r;
    r.input_size = input_size;
    r.warmup_iters = warmup_iters;
    r.timed_iters = timings_ms.size();
    r.mean_ms = std::accumulate(timings_ms.begin(), timings_ms.end(), 0.0) / static_cast<double>(timings_ms.size());
    std::sort(timings_ms.begin(), timings_ms.end());
    r.p50_ms = percentile_sorted(timings_ms, 0.50);
    r.p95_ms = percentile_sorted(timings_ms, 0.95);
    return r;
}

BenchReport run_bench(const Network& network, std::size_t warmup_iters, std::size_t timed_iters, const ExecOptions& exec,
                      std::uint64_t input_seed) {
    if (timed_iters < 1) throw ValueError("bench needs at least one timed iteration");
    Tensor input(network.input_shape());
    SplitMix64 rng(input_seed);
    for (float& v : input.data()) v = static_cast<float>(rng.uniform());

    for (std::size_t i = 0; i < warmup_iters; ++i) (void)network.forward(input, exec);

    using clock = std::chrono::steady_clock;
    std::vector<double> timings;
    timings.reserve(timed_iters);
    for (std::size_t i = 0; i < timed_iters; ++i) {
        const auto start = clock::now();
        const Tensor out = network.forward(input, exec);
        const auto stop = clock::now();
        timings.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    }
    return summarize_timings(network.input_shape(), warmup_iters, std::move(timings));
}

} // namespace hairseg
