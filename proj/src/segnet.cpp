#include "hairseg/segnet.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace hairseg {
namespace {

using namespace detail;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string dims_string(const std::vector<std::uint32_t>& dims) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
    os << ']';
    return os.str();
}

class WeightReader {
  public:
    explicit WeightReader(const WeightStore& store) : store_(store) {}

    const std::vector<float>& values(std::size_t layer, const std::string& part, const std::string& param) const {
        return store_.at(weight_name(layer, part, param)).values;
    }

    Kernel kernel(std::size_t layer, const std::string& part) const {
        const WeightTensor& t = store_.at(weight_name(layer, part, "weight"));
        return Kernel(t.dims[0], t.dims[1], t.dims[2], t.dims[3], t.values);
    }

    ConvParams conv(std::size_t layer, const std::string& part, std::size_t stride, ActivationKind act) const {
        ConvParams p{kernel(layer, part), values(layer, part, "bias"), {}, stride, act};
        if (act == ActivationKind::prelu) p.slope = values(layer, part, "slope");
        return p;
    }

  private:
    const WeightStore& store_;
};

Tensor run_conv(const Tensor& x, const ConvParams& p, const ExecOptions& exec) {
    Tensor y = conv2d(x, p.kernel, p.bias, p.stride, Padding::same, exec);
    if (p.activation == ActivationKind::none) return y;
    return activate(y, p.activation, p.slope);
}

} // namespace

Network build_network(const NetworkConfig& config, const WeightStore& weights) {
    const ShapePlan plan = infer_shapes(config);

    std::set<std::string> expected;
    for (const auto& req : plan.weights) {
        expected.insert(req.name);
        const auto it = weights.find(req.name);
        if (it == weights.end()) {
            throw ConfigError("layer " + std::to_string(req.layer) + ": missing weight '" + req.name + "' with shape " +
                              dims_string(req.dims));
        }
        if (it->second.dims != req.dims) {
            throw ConfigError("layer " + std::to_string(req.layer) + ": weight '" + req.name + "' expected shape " +
                              dims_string(req.dims) + ", found " + dims_string(it->second.dims));
        }
        if (it->second.values.size() != it->second.element_count()) {
            throw ConfigError("weight '" + req.name + "' payload does not match its dims");
        }
    }
    for (const auto& [name, tensor] : weights) {
        if (!expected.contains(name)) throw ConfigError("unexpected weight '" + name + "' not used by the network config");
    }

    Network net;
    net.config_ = config;
    net.downsample_factor_ = plan.downsample_factor;
    const WeightReader reader(weights);
    for (std::size_t i = 0; i < config.layers.size(); ++i) {
        net.layers_.push_back(std::visit(
            overloaded{
                [&](const ConvBlock& c) -> CompiledLayer {
                    return CompiledConv{reader.conv(i, "conv", c.stride, c.activation)};
                },
                [&](const EnetBottleneck& b) -> CompiledLayer {
                    CompiledBottleneck out;
                    out.reduce = reader.conv(i, "reduce", b.downsample ? 2 : 1, ActivationKind::prelu);
                    out.body = reader.conv(i, "body", 1, ActivationKind::prelu);
                    out.expand = reader.conv(i, "expand", 1, ActivationKind::none);
                    out.out_slope = reader.values(i, "out", "slope");
                    out.downsample = b.downsample;
                    out.out_channels = b.out_channels;
                    return out;
                },
                [&](const UpsampleBlock& u) -> CompiledLayer { return CompiledUpsample{u.factor}; },
                [&](const SkipJoin& s) -> CompiledLayer {
                    CompiledSkip out{s.source_layer, std::nullopt};
                    if (s.projection_channels > 0) out.projection = reader.conv(i, "proj", 1, ActivationKind::none);
                    return out;
                },
                [&](const DenseRefine& d) -> CompiledLayer {
                    CompiledDense out;
                    for (std::size_t j = 0; j < d.layers; ++j) {
                        out.layers.push_back(reader.conv(i, "dense" + std::to_string(j), 1, ActivationKind::prelu));
                    }
                    return out;
                },
                [&](const OutputHead&) -> CompiledLayer {
                    return CompiledHead{reader.conv(i, "head", 1, ActivationKind::sigmoid)};
                },
            },
            config.layers[i]));
    }
    return net;
}

Tensor Network::forward(const Tensor& input4, const ExecOptions& exec) const {
    if (input4.channels() != NetworkConfig::kInputChannels) {
        throw ShapeError("forward: expected a 4-channel input, got " + to_string(input4.shape()));
    }
    if (input4.height() % downsample_factor_ != 0 || input4.width() % downsample_factor_ != 0) {
        throw ShapeError("forward: input size " + std::to_string(input4.height()) + "x" + std::to_string(input4.width()) +
                         " is not divisible by the total downsampling factor " + std::to_string(downsample_factor_));
    }

    std::vector<Tensor> outputs;
    outputs.reserve(layers_.size());
    const Tensor* cur = &input4;
    for (const auto& layer : layers_) {
        Tensor next = std::visit(
            overloaded{
                [&](const CompiledConv& c) { return run_conv(*cur, c.conv, exec); },
                [&](const CompiledBottleneck& b) {
                    Tensor main = run_conv(*cur, b.reduce, exec);
                    main = run_conv(main, b.body, exec);
                    main = run_conv(main, b.expand, exec);
                    Tensor shortcut = b.downsample ? pad_channels(max_pool2(*cur), b.out_channels) : *cur;
                    return activate(add_residual(main, shortcut), ActivationKind::prelu, b.out_slope);
                },
                [&](const CompiledUpsample& u) { return upsample_nearest(*cur, u.factor); },
                [&](const CompiledSkip& s) {
                    const Tensor& src = s.source_layer == SkipJoin::kNetworkInput
                                            ? input4
                                            : outputs[static_cast<std::size_t>(s.source_layer)];
                    if (src.height() != cur->height() || src.width() != cur->width()) {
                        throw ShapeError("forward: skip source " + to_string(src.shape()) + " does not match " +
                                         to_string(cur->shape()));
                    }
                    return concat_channels(*cur, s.projection ? run_conv(src, *s.projection, exec) : src);
                },
                [&](const CompiledDense& d) {
                    Tensor features = *cur;
                    for (const auto& p : d.layers) features = concat_channels(features, run_conv(features, p, exec));
                    return features;
                },
                [&](const CompiledHead& h) { return run_conv(*cur, h.conv, exec); },
            },
            layer);
        outputs.push_back(std::move(next));
        cur = &outputs.back();
    }
    if (cur->height() != input4.height() || cur->width() != input4.width() || cur->channels() != 1) {
        throw ShapeError("forward: network produced " + to_string(cur->shape()) + " for input " + to_string(input4.shape()));
    }
    return std::move(outputs.back());
}

Tensor make_input(const Tensor& frame, const std::optional<Tensor>& prev_mask) {
    if (frame.channels() != 3) throw ShapeError("make_input: frame must have 3 channels, got " + to_string(frame.shape()));
    if (!frame.in_unit_range()) throw ValueError("make_input: frame values must lie in [0, 1]");
    if (!prev_mask) return concat_channels(frame, Tensor({frame.height(), frame.width(), 1}));
    const Tensor& mask = *prev_mask;
    if (mask.channels() != 1 || mask.height() != frame.height() || mask.width() != frame.width()) {
        throw ShapeError("make_input: prior mask " + to_string(mask.shape()) + " does not match frame " +
                         to_string(frame.shape()));
    }
    if (!mask.in_unit_range()) throw ValueError("make_input: prior mask values must lie in [0, 1]");
    return concat_channels(frame, mask);
}

SegSession::SegSession(std::shared_ptr<const Network> network, ExecOptions exec)
    : network_(std::move(network)), exec_(exec) {
    if (!network_) throw ConfigError("SegSession requires a network");
}

Tensor SegSession::step(const Tensor& frame) {
    const Shape& in = network_->input_shape();
    if (frame.height() != in.height || frame.width() != in.width || frame.channels() != 3) {
        throw ShapeError("session_step: frame " + to_string(frame.shape()) + " does not match network input " +
                         std::to_string(in.height) + "x" + std::to_string(in.width) + "x3");
    }
    Tensor input = make_input(frame, prev_mask_);
    Tensor mask = network_->forward(input, exec_);
    last_input_ = std::move(input);
    prev_mask_ = mask;
    ++frame_counter_;
    return mask;
}

void SegSession::reset() {
    prev_mask_.reset();
    last_input_.reset();
    frame_counter_ = 0;
}

} // namespace hairseg
