#pragma once

#include "hairseg/tensor.hpp"
#include "hairseg/weights.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace hairseg {

/// Strided convolution with `same` padding followed by an activation.
struct ConvBlock {
    std::size_t kernel = 3;
    std::size_t stride = 1;
    std::size_t out_channels = 1;
    ActivationKind activation = ActivationKind::prelu;
    bool operator==(const ConvBlock&) const = default;
};

/// E-Net style residual bottleneck: reduce (1x1, or 2x2 stride 2 when
/// downsampling) -> 3x3 -> 1x1 expand, added to a shortcut that is
/// max-pooled and zero-channel-padded when downsampling.
struct EnetBottleneck {
    std::size_t out_channels = 1;
    std::size_t squeeze_factor = 16;
    bool downsample = false;

    std::size_t internal_channels() const {
        return std::max<std::size_t>(1, out_channels / squeeze_factor);
    }
    bool operator==(const EnetBottleneck&) const = default;
};

struct UpsampleBlock {
    std::size_t factor = 2;
    bool operator==(const UpsampleBlock&) const = default;
};

/// Concatenates the output of an earlier layer (or the network input) onto
/// the current features. A non-zero projection inserts a 1x1 convolution on
/// the skipped tensor first.
struct SkipJoin {
    static constexpr int kNetworkInput = -1;
    int source_layer = kNetworkInput;
    std::size_t projection_channels = 0;
    bool operator==(const SkipJoin&) const = default;
};

/// Full-resolution densely connected 3x3 layers; each layer sees the
/// concatenation of the block input and all earlier layer outputs.
struct DenseRefine {
    std::size_t growth = 4;
    std::size_t layers = 2;
    bool operator==(const DenseRefine&) const = default;
};

/// 1x1 convolution to a single channel with a sigmoid.
struct OutputHead {
    bool operator==(const OutputHead&) const = default;
};

using LayerSpec = std::variant<ConvBlock, EnetBottleneck, UpsampleBlock, SkipJoin, DenseRefine, OutputHead>;

std::string layer_kind(const LayerSpec& layer);

struct NetworkConfig {
    static constexpr std::size_t kInputChannels = 4;

    Shape input_size{256, 256, kInputChannels};
    std::vector<LayerSpec> layers;

    bool operator==(const NetworkConfig&) const = default;
};

/// Small hourglass: k7/s4 stem, squeezed bottlenecks at 1/8, two U-Net
/// joins back to full resolution, dense refinement and a sigmoid head.
NetworkConfig default_config(std::size_t height = 256, std::size_t width = 256);

/// The same config with every SkipJoin removed (skip-connection ablation).
NetworkConfig without_skips(const NetworkConfig& config);

NetworkConfig config_from_json(const std::string& text);
std::string config_to_json(const NetworkConfig& config);

struct WeightRequirement {
    std::size_t layer = 0;
    std::string name;
    std::vector<std::uint32_t> dims;
};

/// Result of static shape inference over a config at a given input size.
struct ShapePlan {
    std::vector<Shape> layer_outputs;
    std::vector<WeightRequirement> weights;
    std::size_t downsample_factor = 1;
};

/// Validates every structural invariant and infers per-layer output shapes.
/// Throws ConfigError naming the offending layer.
ShapePlan infer_shapes(const NetworkConfig& config);

/// Same as infer_shapes but at a different spatial input size.
ShapePlan infer_shapes(const NetworkConfig& config, std::size_t height, std::size_t width);

/// Name of a layer-qualified weight, e.g. weight_name(3, "reduce", "weight") == "layer03.reduce.weight".
std::string weight_name(std::size_t layer, const std::string& part, const std::string& param);

/// He-uniform kernels, zero biases, prelu slopes 0.25; deterministic per seed.
WeightStore random_weights(const NetworkConfig& config, std::uint64_t seed);

} // namespace hairseg
