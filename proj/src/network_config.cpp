#include "hairseg/network_config.hpp"

#include "hairseg/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>

namespace hairseg {
namespace {

using json = nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string activation_name(ActivationKind kind) {
    switch (kind) {
    case ActivationKind::none: return "none";
    case ActivationKind::relu: return "relu";
    case ActivationKind::prelu: return "prelu";
    case ActivationKind::sigmoid: return "sigmoid";
    }
    return "none";
}

ActivationKind parse_activation(const std::string& name) {
    if (name == "none") return ActivationKind::none;
    if (name == "relu") return ActivationKind::relu;
    if (name == "prelu") return ActivationKind::prelu;
    if (name == "sigmoid") return ActivationKind::sigmoid;
    throw ConfigError("unknown activation '" + name + "'");
}

std::uint32_t dim(std::size_t v) { return static_cast<std::uint32_t>(v); }

[[noreturn]] void layer_error(std::size_t index, const LayerSpec& layer, const std::string& what) {
    throw ConfigError("layer " + std::to_string(index) + " (" + layer_kind(layer) + "): " + what);
}

std::size_t total_downsampling(const NetworkConfig& config) {
    std::size_t factor = 1;
    for (const auto& layer : config.layers) {
        if (const auto* c = std::get_if<ConvBlock>(&layer)) factor *= std::max<std::size_t>(c->stride, 1);
        if (const auto* b = std::get_if<EnetBottleneck>(&layer); b && b->downsample) factor *= 2;
    }
    return factor;
}

} // namespace

std::string layer_kind(const LayerSpec& layer) {
    return std::visit(overloaded{
                          [](const ConvBlock&) { return std::string("conv"); },
                          [](const EnetBottleneck&) { return std::string("enet_bottleneck"); },
                          [](const UpsampleBlock&) { return std::string("upsample"); },
                          [](const SkipJoin&) { return std::string("skip_join"); },
                          [](const DenseRefine&) { return std::string("dense_refine"); },
                          [](const OutputHead&) { return std::string("output_head"); },
                      },
                      layer);
}

NetworkConfig default_config(std::size_t height, std::size_t width) {
    NetworkConfig config;
    config.input_size = {height, width, NetworkConfig::kInputChannels};
    config.layers = {
        ConvBlock{7, 4, 16, ActivationKind::prelu},
        EnetBottleneck{32, 16, true},
        EnetBottleneck{32, 16, false},
        EnetBottleneck{32, 16, false},
        UpsampleBlock{2},
        SkipJoin{0, 0},
        ConvBlock{3, 1, 16, ActivationKind::prelu},
        UpsampleBlock{4},
        SkipJoin{SkipJoin::kNetworkInput, 8},
        DenseRefine{4, 2},
        OutputHead{},
    };
    return config;
}

NetworkConfig without_skips(const NetworkConfig& config) {
    NetworkConfig out;
    out.input_size = config.input_size;
    // Only SkipJoin layers carry layer references, so dropping them needs no renumbering.
    for (const auto& layer : config.layers) {
        if (!std::holds_alternative<SkipJoin>(layer)) out.layers.push_back(layer);
    }
    return out;
}

std::string weight_name(std::size_t layer, const std::string& part, const std::string& param) {
    char prefix[32];
    std::snprintf(prefix, sizeof prefix, "layer%02zu.", layer);
    return prefix + part + "." + param;
}

ShapePlan infer_shapes(const NetworkConfig& config) {
    return infer_shapes(config, config.input_size.height, config.input_size.width);
}

ShapePlan infer_shapes(const NetworkConfig& config, std::size_t height, std::size_t width) {
    if (config.input_size.channels != NetworkConfig::kInputChannels) {
        throw ConfigError("network input must have 4 channels (RGB + prior mask), config declares " +
                          std::to_string(config.input_size.channels));
    }
    if (height < 1 || width < 1) throw ConfigError("network input size must be >= 1");
    if (config.layers.empty() || !std::holds_alternative<OutputHead>(config.layers.back())) {
        throw ConfigError("final layer must be an output_head producing the 1-channel mask");
    }

    ShapePlan plan;
    plan.downsample_factor = total_downsampling(config);
    if (height % plan.downsample_factor != 0 || width % plan.downsample_factor != 0) {
        throw ConfigError("input size " + std::to_string(height) + "x" + std::to_string(width) +
                          " is not divisible by the total downsampling factor " +
                          std::to_string(plan.downsample_factor));
    }

    const Shape input{height, width, NetworkConfig::kInputChannels};
    Shape cur = input;
    std::size_t current_layer = 0;
    auto require = [&plan, &current_layer](std::string name, std::vector<std::uint32_t> dims) {
        plan.weights.push_back({current_layer, std::move(name), std::move(dims)});
    };

    for (std::size_t i = 0; i < config.layers.size(); ++i) {
        current_layer = i;
        const LayerSpec& layer = config.layers[i];
        std::visit(
            overloaded{
                [&](const ConvBlock& c) {
                    if (c.kernel < 1 || c.stride < 1 || c.out_channels < 1) {
                        layer_error(i, layer, "kernel, stride and out_channels must be >= 1");
                    }
                    require(weight_name(i, "conv", "weight"), {dim(c.kernel), dim(c.kernel), dim(cur.channels), dim(c.out_channels)});
                    require(weight_name(i, "conv", "bias"), {dim(c.out_channels)});
                    if (c.activation == ActivationKind::prelu) require(weight_name(i, "conv", "slope"), {dim(c.out_channels)});
                    cur = {cur.height / c.stride, cur.width / c.stride, c.out_channels};
                },
                [&](const EnetBottleneck& b) {
                    if (b.squeeze_factor != 16 && b.squeeze_factor != 32) {
                        layer_error(i, layer, "squeeze_factor must be 16 or 32, got " + std::to_string(b.squeeze_factor));
                    }
                    if (b.out_channels < 1) layer_error(i, layer, "out_channels must be >= 1");
                    if (!b.downsample && b.out_channels != cur.channels) {
                        layer_error(i, layer, "non-downsampling bottleneck must preserve channels (" +
                                                  std::to_string(cur.channels) + " in, " + std::to_string(b.out_channels) + " out)");
                    }
                    if (b.downsample && b.out_channels < cur.channels) {
                        layer_error(i, layer, "downsampling bottleneck cannot reduce channels");
                    }
                    const std::size_t mid = b.internal_channels();
                    const std::uint32_t reduce_k = b.downsample ? 2 : 1;
                    require(weight_name(i, "reduce", "weight"), {reduce_k, reduce_k, dim(cur.channels), dim(mid)});
                    require(weight_name(i, "reduce", "bias"), {dim(mid)});
                    require(weight_name(i, "reduce", "slope"), {dim(mid)});
                    require(weight_name(i, "body", "weight"), {3, 3, dim(mid), dim(mid)});
                    require(weight_name(i, "body", "bias"), {dim(mid)});
                    require(weight_name(i, "body", "slope"), {dim(mid)});
                    require(weight_name(i, "expand", "weight"), {1, 1, dim(mid), dim(b.out_channels)});
                    require(weight_name(i, "expand", "bias"), {dim(b.out_channels)});
                    require(weight_name(i, "out", "slope"), {dim(b.out_channels)});
                    if (b.downsample) cur = {cur.height / 2, cur.width / 2, b.out_channels};
                },
                [&](const UpsampleBlock& u) {
                    if (u.factor < 1) layer_error(i, layer, "factor must be >= 1");
                    cur = {cur.height * u.factor, cur.width * u.factor, cur.channels};
                },
                [&](const SkipJoin& s) {
                    if (s.source_layer < SkipJoin::kNetworkInput || s.source_layer >= static_cast<int>(i)) {
                        layer_error(i, layer, "source_layer " + std::to_string(s.source_layer) + " is not an earlier layer");
                    }
                    const Shape src = s.source_layer == SkipJoin::kNetworkInput
                                          ? input
                                          : plan.layer_outputs[static_cast<std::size_t>(s.source_layer)];
                    if (src.height != cur.height || src.width != cur.width) {
                        layer_error(i, layer, "skip source " + to_string(src) + " has incompatible spatial size with " + to_string(cur));
                    }
                    std::size_t added = src.channels;
                    if (s.projection_channels > 0) {
                        require(weight_name(i, "proj", "weight"), {1, 1, dim(src.channels), dim(s.projection_channels)});
                        require(weight_name(i, "proj", "bias"), {dim(s.projection_channels)});
                        added = s.projection_channels;
                    }
                    cur.channels += added;
                },
                [&](const DenseRefine& d) {
                    if (d.growth < 1 || d.layers < 1) layer_error(i, layer, "growth and layers must be >= 1");
                    if (cur.height != input.height || cur.width != input.width) {
                        layer_error(i, layer, "runs at " + to_string(cur) +
                                                  " but downsampling must be fully undone before dense refinement");
                    }
                    for (std::size_t j = 0; j < d.layers; ++j) {
                        const std::string part = "dense" + std::to_string(j);
                        require(weight_name(i, part, "weight"), {3, 3, dim(cur.channels + j * d.growth), dim(d.growth)});
                        require(weight_name(i, part, "bias"), {dim(d.growth)});
                        require(weight_name(i, part, "slope"), {dim(d.growth)});
                    }
                    cur.channels += d.layers * d.growth;
                },
                [&](const OutputHead&) {
                    if (i + 1 != config.layers.size()) layer_error(i, layer, "output_head must be the final layer");
                    if (cur.height != input.height || cur.width != input.width) {
                        layer_error(i, layer, "output resolution " + to_string(cur) + " does not return to the input size " +
                                                  to_string(input));
                    }
                    require(weight_name(i, "head", "weight"), {1, 1, dim(cur.channels), 1});
                    require(weight_name(i, "head", "bias"), {1});
                    cur.channels = 1;
                },
            },
            layer);
        plan.layer_outputs.push_back(cur);
    }
    return plan;
}

WeightStore random_weights(const NetworkConfig& config, std::uint64_t seed) {
    const ShapePlan plan = infer_shapes(config);
    SplitMix64 rng(seed);
    WeightStore store;
    for (const auto& req : plan.weights) {
        WeightTensor t;
        t.dims = req.dims;
        t.values.resize(t.element_count());
        const std::string_view name = req.name;
        if (name.ends_with(".weight")) {
            const double fan_in = static_cast<double>(req.dims[0]) * req.dims[1] * req.dims[2];
            const double bound = std::sqrt(6.0 / fan_in);
            for (float& v : t.values) v = static_cast<float>(rng.uniform(-bound, bound));
        } else if (name.ends_with(".slope")) {
            std::fill(t.values.begin(), t.values.end(), 0.25f);
        }
        store.emplace(req.name, std::move(t));
    }
    return store;
}

NetworkConfig config_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("network config is not valid JSON: ") + e.what());
    }
    try {
        NetworkConfig config;
        if (doc.contains("input")) {
            const auto& in = doc.at("input");
            config.input_size = {in.at("height").get<std::size_t>(), in.at("width").get<std::size_t>(),
                                 in.value("channels", NetworkConfig::kInputChannels)};
        }
        for (const auto& l : doc.at("layers")) {
            const std::string type = l.at("type").get<std::string>();
            if (type == "conv") {
                config.layers.push_back(ConvBlock{l.at("kernel").get<std::size_t>(), l.at("stride").get<std::size_t>(),
                                                  l.at("out_channels").get<std::size_t>(),
                                                  parse_activation(l.value("activation", std::string("prelu")))});
            } else if (type == "enet_bottleneck") {
                config.layers.push_back(EnetBottleneck{l.at("out_channels").get<std::size_t>(),
                                                       l.value("squeeze_factor", std::size_t{16}),
                                                       l.value("downsample", false)});
            } else if (type == "upsample") {
                config.layers.push_back(UpsampleBlock{l.at("factor").get<std::size_t>()});
            } else if (type == "skip_join") {
                SkipJoin s;
                const auto& src = l.at("source");
                s.source_layer = src.is_string() && src.get<std::string>() == "input" ? SkipJoin::kNetworkInput
                                                                                       : src.get<int>();
                s.projection_channels = l.value("projection_channels", std::size_t{0});
                config.layers.push_back(s);
            } else if (type == "dense_refine") {
                config.layers.push_back(DenseRefine{l.at("growth").get<std::size_t>(), l.at("layers").get<std::size_t>()});
            } else if (type == "output_head") {
                config.layers.push_back(OutputHead{});
            } else {
                throw ConfigError("unknown layer type '" + type + "'");
            }
        }
        return config;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed network config: ") + e.what());
    }
}

std::string config_to_json(const NetworkConfig& config) {
    json doc;
    doc["input"] = {{"height", config.input_size.height},
                    {"width", config.input_size.width},
                    {"channels", config.input_size.channels}};
    json layers = json::array();
    for (const auto& layer : config.layers) {
        layers.push_back(std::visit(
            overloaded{
                [](const ConvBlock& c) {
                    return json{{"type", "conv"}, {"kernel", c.kernel}, {"stride", c.stride},
                                {"out_channels", c.out_channels}, {"activation", activation_name(c.activation)}};
                },
                [](const EnetBottleneck& b) {
                    return json{{"type", "enet_bottleneck"}, {"out_channels", b.out_channels},
                                {"squeeze_factor", b.squeeze_factor}, {"downsample", b.downsample}};
                },
                [](const UpsampleBlock& u) { return json{{"type", "upsample"}, {"factor", u.factor}}; },
                [](const SkipJoin& s) {
                    json j{{"type", "skip_join"}, {"projection_channels", s.projection_channels}};
                    if (s.source_layer == SkipJoin::kNetworkInput) {
                        j["source"] = "input";
                    } else {
                        j["source"] = s.source_layer;
                    }
                    return j;
                },
                [](const DenseRefine& d) { return json{{"type", "dense_refine"}, {"growth", d.growth}, {"layers", d.layers}}; },
                [](const OutputHead&) { return json{{"type", "output_head"}}; },
            },
            layer));
    }
    doc["layers"] = std::move(layers);
    return doc.dump(2) + "\n";
}

} // namespace hairseg
