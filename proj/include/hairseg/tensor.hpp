#pragma once

#include "hairseg/error.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hairseg {

/// Spatial extent plus channel count of a single (batch 1) tensor.
struct Shape {
    std::size_t height = 1;
    std::size_t width = 1;
    std::size_t channels = 1;

    std::size_t pixels() const { return height * width; }
    std::size_t elements() const { return height * width * channels; }

    bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

/// Dense height x width x channel grid of floats, channel fastest:
/// index = (y * width + x) * channels + c.
///
/// A zero-channel tensor is permitted only as the neutral operand of
/// concat_channels; every other dimension must be at least 1.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(Shape shape, float fill = 0.0f);
    Tensor(Shape shape, std::vector<float> data);

    static Tensor empty_channels(std::size_t height, std::size_t width);

    const Shape& shape() const { return shape_; }
    std::size_t height() const { return shape_.height; }
    std::size_t width() const { return shape_.width; }
    std::size_t channels() const { return shape_.channels; }
    std::size_t size() const { return data_.size(); }

    std::size_t index(std::size_t y, std::size_t x, std::size_t c) const {
        return (y * shape_.width + x) * shape_.channels + c;
    }

    float at(std::size_t y, std::size_t x, std::size_t c) const { return data_[index(y, x, c)]; }
    float& at(std::size_t y, std::size_t x, std::size_t c) { return data_[index(y, x, c)]; }

    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }

    /// True when every element lies in [0, 1] (image and mask tensors).
    bool in_unit_range() const;

    bool operator==(const Tensor&) const = default;

  private:
    Shape shape_{0, 0, 0};
    std::vector<float> data_;
};

/// Convolution kernel laid out [kh][kw][in][out], out fastest.
class Kernel {
  public:
    Kernel() = default;
    Kernel(std::size_t kh, std::size_t kw, std::size_t in, std::size_t out, std::vector<float> data);

    std::size_t kh() const { return kh_; }
    std::size_t kw() const { return kw_; }
    std::size_t in_channels() const { return in_; }
    std::size_t out_channels() const { return out_; }

    float at(std::size_t dy, std::size_t dx, std::size_t i, std::size_t o) const {
        return data_[((dy * kw_ + dx) * in_ + i) * out_ + o];
    }
    std::span<const float> data() const { return data_; }

  private:
    std::size_t kh_ = 0, kw_ = 0, in_ = 0, out_ = 0;
    std::vector<float> data_;
};

enum class Padding { same, valid };

enum class ActivationKind { none, relu, prelu, sigmoid };

/// Internal row parallelism. Results never depend on the thread count.
struct ExecOptions {
    unsigned threads = 1;
};

Tensor conv2d(const Tensor& input, const Kernel& kernel, std::span<const float> bias, std::size_t stride,
              Padding padding, const ExecOptions& exec = {});

Tensor upsample_nearest(const Tensor& input, std::size_t factor);

Tensor concat_channels(const Tensor& a, const Tensor& b);

/// Copies channels [first, first + count) into a new tensor.
Tensor slice_channels(const Tensor& input, std::size_t first, std::size_t count);

/// `slopes` is consulted only for prelu and must then have one entry per channel.
Tensor activate(const Tensor& input, ActivationKind kind, std::span<const float> slopes = {});

Tensor add_residual(const Tensor& a, const Tensor& b);

/// 2x2 stride-2 max pooling; height and width must be even.
Tensor max_pool2(const Tensor& input);

/// Appends zero-valued channels until the tensor has `channels` channels.
Tensor pad_channels(const Tensor& input, std::size_t channels);

} // namespace hairseg
