#pragma once

#include "hairseg/segnet.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hairseg {

struct BenchReport {
    Shape input_size;
    std::size_t warmup_iters = 0;
    std::size_t timed_iters = 0;
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;

    /// Single-line JSON object.
    std::string to_json() const;
};

/// Nearest-rank percentile of an ascending sample (q in (0, 1]).
double percentile_sorted(const std::vector<double>& sorted, double q);

BenchReport summarize_timings(Shape input_size, std::size_t warmup_iters, std::vector<double> timings_ms);

/// Times `timed_iters` forward passes (after `warmup_iters` untimed ones) on
/// a fixed seeded input of the network's input size. Only forward() is
/// inside the timed region.
BenchReport run_bench(const Network& network, std::size_t warmup_iters, std::size_t timed_iters,
                      const ExecOptions& exec = {}, std::uint64_t input_seed = 7);

} // namespace hairseg
