#pragma once

#include "hairseg/network_config.hpp"
#include "hairseg/tensor.hpp"
#include "hairseg/weights.hpp"

#include <memory>
#include <optional>
#include <variant>

namespace hairseg {

namespace detail {

struct ConvParams {
    Kernel kernel;
    std::vector<float> bias;
    std::vector<float> slope; // empty unless activation is prelu
    std::size_t stride = 1;
    ActivationKind activation = ActivationKind::none;
};

struct CompiledConv {
    ConvParams conv;
};
struct CompiledBottleneck {
    ConvParams reduce, body, expand;
    std::vector<float> out_slope;
    bool downsample = false;
    std::size_t out_channels = 0;
};
struct CompiledUpsample {
    std::size_t factor = 1;
};
struct CompiledSkip {
    int source_layer = SkipJoin::kNetworkInput;
    std::optional<ConvParams> projection;
};
struct CompiledDense {
    std::vector<ConvParams> layers;
};
struct CompiledHead {
    ConvParams conv;
};

using CompiledLayer =
    std::variant<CompiledConv, CompiledBottleneck, CompiledUpsample, CompiledSkip, CompiledDense, CompiledHead>;

} // namespace detail

/// A validated, immutable hourglass network. Fully convolutional: the
/// weights do not depend on the input resolution, so any input whose sides
/// are multiples of downsample_factor() can be run.
class Network {
  public:
    const NetworkConfig& config() const { return config_; }
    const Shape& input_shape() const { return config_.input_size; }
    Shape output_shape() const { return {config_.input_size.height, config_.input_size.width, 1}; }
    std::size_t downsample_factor() const { return downsample_factor_; }

    /// input4 is h x w x 4; returns the h x w x 1 soft mask in [0, 1].
    Tensor forward(const Tensor& input4, const ExecOptions& exec = {}) const;

  private:
    friend Network build_network(const NetworkConfig&, const WeightStore&);

    NetworkConfig config_;
    std::size_t downsample_factor_ = 1;
    std::vector<detail::CompiledLayer> layers_;
};

/// Runs full shape inference and cross-checks every weight: missing
/// tensors, wrong shapes (with layer index, expected and found dims) and
/// unexpected extras all throw ConfigError.
Network build_network(const NetworkConfig& config, const WeightStore& weights);

/// Interleaves the RGB frame with the prior mask as the fourth channel.
/// An absent prior is an all-zero channel.
Tensor make_input(const Tensor& frame, const std::optional<Tensor>& prev_mask);

inline Tensor forward(const Network& network, const Tensor& input4, const ExecOptions& exec = {}) {
    return network.forward(input4, exec);
}

/// Per-stream temporal feedback state. One step at a time per session.
class SegSession {
  public:
    explicit SegSession(std::shared_ptr<const Network> network, ExecOptions exec = {});

    /// make_input(frame, prev_mask) -> forward -> store as the next prior.
    Tensor step(const Tensor& frame);
    void reset();

    const std::optional<Tensor>& prev_mask() const { return prev_mask_; }
    std::size_t frame_counter() const { return frame_counter_; }
    /// The 4-channel tensor fed to the network on the most recent step.
    const std::optional<Tensor>& last_input() const { return last_input_; }
    const Network& network() const { return *network_; }

  private:
    std::shared_ptr<const Network> network_;
    ExecOptions exec_;
    std::optional<Tensor> prev_mask_;
    std::optional<Tensor> last_input_;
    std::size_t frame_counter_ = 0;
};

} // namespace hairseg
