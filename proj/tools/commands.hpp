#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hairseg::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kInputMismatch = 2,
    kBadWeights = 3,
    kBadParameters = 4,
};

struct InferArgs {
    fs::path weights;
    fs::path config;
    fs::path frames;
    fs::path out;
    std::size_t reset_every = 0;
};

struct RecolorArgs {
    fs::path frames;
    fs::path masks;
    fs::path profile_dark;
    fs::path profile_light;
    double i_dark = 0.0;
    double i_light = 1.0;
    fs::path out;
};

struct AugmentArgs {
    fs::path images;
    fs::path masks;
    fs::path out;
    std::string policy = "0.3,0.2,0.3,0.2";
    double tps_sigma = 0.0;
    std::uint64_t seed = 0;
    std::size_t count = 0;
    std::size_t tps_grid = 4;
};

struct BenchArgs {
    std::optional<fs::path> weights;  // seeded random weights when absent
    std::optional<fs::path> config;   // default config when absent
    std::size_t size = 256;
    std::size_t warmup = 3;
    std::size_t iters = 10;
    unsigned threads = 1;
};

struct EvalArgs {
    fs::path pred;
    fs::path gt;
    double threshold = 0.5;
};

int cmd_infer(const InferArgs& args, std::ostream& out, std::ostream& err);
int cmd_recolor(const RecolorArgs& args, std::ostream& out, std::ostream& err);
int cmd_augment(const AugmentArgs& args, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchArgs& args, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);

/// Parses `argv` (without the program name) and dispatches to a command.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

/// Sorted regular files in `dir` with the given extension (".ppm", ".pgm").
std::vector<fs::path> list_files(const fs::path& dir, const std::string& extension);

} // namespace hairseg::cli
