#include "hairseg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace hairseg {
namespace {

void check_shape(const Shape& s) {
    if (s.height < 1 || s.width < 1 || s.channels < 1) {
        throw ShapeError("tensor dimensions must be >= 1, got " + to_string(s));
    }
    constexpr auto max = std::numeric_limits<std::size_t>::max();
    if (s.width > max / s.height || s.channels > max / (s.height * s.width)) {
        throw ShapeError("tensor element count overflows: " + to_string(s));
    }
}

// Runs fn(row_begin, row_end) over [0, rows) split into contiguous chunks.
template <typename Fn>
void parallel_rows(std::size_t rows, unsigned threads, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), rows);
    if (workers <= 1) {
        fn(std::size_t{0}, rows);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    const std::size_t chunk = (rows + workers - 1) / workers;
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(rows, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    fn(std::size_t{0}, std::min(rows, chunk));
}

} // namespace

std::string to_string(const Shape& s) {
    return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" + std::to_string(s.channels);
}

Tensor::Tensor(Shape shape, float fill) : shape_(shape) {
    check_shape(shape_);
    data_.assign(shape_.elements(), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_.elements()) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         to_string(shape_));
    }
}

Tensor Tensor::empty_channels(std::size_t height, std::size_t width) {
    check_shape({height, width, 1});
    Tensor t;
    t.shape_ = {height, width, 0};
    return t;
}

bool Tensor::in_unit_range() const {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return v >= 0.0f && v <= 1.0f; });
}

Kernel::Kernel(std::size_t kh, std::size_t kw, std::size_t in, std::size_t out, std::vector<float> data)
    : kh_(kh), kw_(kw), in_(in), out_(out), data_(std::move(data)) {
    if (kh < 1 || kw < 1 || in < 1 || out < 1) {
        throw ShapeError("kernel dimensions must be >= 1");
    }
    if (data_.size() != kh * kw * in * out) {
        throw ShapeError("kernel data length " + std::to_string(data_.size()) + " does not match " +
                         std::to_string(kh) + "x" + std::to_string(kw) + "x" + std::to_string(in) + "x" +
                         std::to_string(out));
    }
}

Tensor conv2d(const Tensor& input, const Kernel& kernel, std::span<const float> bias, std::size_t stride,
              Padding padding, const ExecOptions& exec) {
    if (kernel.in_channels() != input.channels()) {
        throw ShapeError("conv2d: kernel expects " + std::to_string(kernel.in_channels()) +
                         " input channels, input has " + std::to_string(input.channels()));
    }
    if (bias.size() != kernel.out_channels()) {
        throw ShapeError("conv2d: bias length " + std::to_string(bias.size()) + " != out channels " +
                         std::to_string(kernel.out_channels()));
    }
    if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");

    const std::size_t in_h = input.height(), in_w = input.width();
    const std::size_t kh = kernel.kh(), kw = kernel.kw();
    std::size_t out_h = 0, out_w = 0;
    std::ptrdiff_t pad_top = 0, pad_left = 0;
    if (padding == Padding::same) {
        out_h = (in_h + stride - 1) / stride;
        out_w = (in_w + stride - 1) / stride;
        const auto total_h = std::max<std::ptrdiff_t>(
            static_cast<std::ptrdiff_t>((out_h - 1) * stride + kh) - static_cast<std::ptrdiff_t>(in_h), 0);
        const auto total_w = std::max<std::ptrdiff_t>(
            static_cast<std::ptrdiff_t>((out_w - 1) * stride + kw) - static_cast<std::ptrdiff_t>(in_w), 0);
        pad_top = total_h / 2;
        pad_left = total_w / 2;
    } else {
        if (kh > in_h || kw > in_w) {
            throw ShapeError("conv2d: valid output dimension < 1 for input " + to_string(input.shape()) +
                             " and kernel " + std::to_string(kh) + "x" + std::to_string(kw));
        }
        out_h = (in_h - kh) / stride + 1;
        out_w = (in_w - kw) / stride + 1;
    }

    const std::size_t c_in = input.channels();
    const std::size_t c_out = kernel.out_channels();
    Tensor out({out_h, out_w, c_out});
    const float* src = input.data().data();
    const float* weights = kernel.data().data();
    float* dst = out.data().data();

    parallel_rows(out_h, exec.threads, [&](std::size_t row_begin, std::size_t row_end) {
        std::vector<float> acc(c_out);
        for (std::size_t y = row_begin; y < row_end; ++y) {
            for (std::size_t x = 0; x < out_w; ++x) {
                std::copy(bias.begin(), bias.end(), acc.begin());
                for (std::size_t dy = 0; dy < kh; ++dy) {
                    const auto iy = static_cast<std::ptrdiff_t>(y * stride + dy) - pad_top;
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) continue;
                    for (std::size_t dx = 0; dx < kw; ++dx) {
                        const auto ix = static_cast<std::ptrdiff_t>(x * stride + dx) - pad_left;
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_w)) continue;
                        const float* px = src + (static_cast<std::size_t>(iy) * in_w + static_cast<std::size_t>(ix)) * c_in;
                        const float* tap = weights + (dy * kw + dx) * c_in * c_out;
                        for (std::size_t i = 0; i < c_in; ++i) {
                            const float v = px[i];
                            const float* k = tap + i * c_out;
                            for (std::size_t o = 0; o < c_out; ++o) acc[o] += v * k[o];
                        }
                    }
                }
                std::copy(acc.begin(), acc.end(), dst + (y * out_w + x) * c_out);
            }
        }
    });
    return out;
}

Tensor upsample_nearest(const Tensor& input, std::size_t factor) {
    if (factor < 1) throw ShapeError("upsample_nearest: factor must be >= 1");
    const Shape& s = input.shape();
    Tensor out({s.height * factor, s.width * factor, s.channels});
    const std::size_t c = s.channels;
    for (std::size_t y = 0; y < out.height(); ++y) {
        for (std::size_t x = 0; x < out.width(); ++x) {
            const float* from = input.data().data() + input.index(y / factor, x / factor, 0);
            std::copy(from, from + c, out.data().data() + out.index(y, x, 0));
        }
    }
    return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.height() != b.height() || a.width() != b.width()) {
        throw ShapeError("concat_channels: spatial mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
    }
    const std::size_t ca = a.channels(), cb = b.channels();
    if (ca + cb == 0) return Tensor::empty_channels(a.height(), a.width());
    Tensor out({a.height(), a.width(), ca + cb});
    float* dst = out.data().data();
    for (std::size_t p = 0; p < a.shape().pixels(); ++p) {
        dst = std::copy_n(a.data().data() + p * ca, ca, dst);
        dst = std::copy_n(b.data().data() + p * cb, cb, dst);
    }
    return out;
}

Tensor slice_channels(const Tensor& input, std::size_t first, std::size_t count) {
    if (count == 0 || first + count > input.channels()) {
        throw ShapeError("slice_channels: range [" + std::to_string(first) + ", " + std::to_string(first + count) +
                         ") outside " + std::to_string(input.channels()) + " channels");
    }
    Tensor out({input.height(), input.width(), count});
    const std::size_t c = input.channels();
    float* dst = out.data().data();
    for (std::size_t p = 0; p < input.shape().pixels(); ++p) {
        dst = std::copy_n(input.data().data() + p * c + first, count, dst);
    }
    return out;
}

Tensor activate(const Tensor& input, ActivationKind kind, std::span<const float> slopes) {
    if (kind == ActivationKind::prelu && slopes.size() != input.channels()) {
        throw ShapeError("activate: prelu slope length " + std::to_string(slopes.size()) + " != channels " +
                         std::to_string(input.channels()));
    }
    Tensor out = input;
    auto values = out.data();
    switch (kind) {
    case ActivationKind::none:
        break;
    case ActivationKind::relu:
        for (float& v : values) v = std::max(v, 0.0f);
        break;
    case ActivationKind::prelu: {
        const std::size_t c = input.channels();
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i] < 0.0f) values[i] *= slopes[i % c];
        }
        break;
    }
    case ActivationKind::sigmoid:
        for (float& v : values) v = 1.0f / (1.0f + std::exp(-v));
        break;
    }
    return out;
}

Tensor add_residual(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError("add_residual: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
    }
    Tensor out = a;
    auto dst = out.data();
    auto rhs = b.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += rhs[i];
    return out;
}

Tensor max_pool2(const Tensor& input) {
    if (input.height() % 2 != 0 || input.width() % 2 != 0) {
        throw ShapeError("max_pool2: odd spatial size " + to_string(input.shape()));
    }
    const std::size_t c = input.channels();
    Tensor out({input.height() / 2, input.width() / 2, c});
    for (std::size_t y = 0; y < out.height(); ++y) {
        for (std::size_t x = 0; x < out.width(); ++x) {
            for (std::size_t k = 0; k < c; ++k) {
                out.at(y, x, k) = std::max({input.at(2 * y, 2 * x, k), input.at(2 * y, 2 * x + 1, k),
                                            input.at(2 * y + 1, 2 * x, k), input.at(2 * y + 1, 2 * x + 1, k)});
            }
        }
    }
    return out;
}

Tensor pad_channels(const Tensor& input, std::size_t channels) {
    if (channels < input.channels()) {
        throw ShapeError("pad_channels: cannot shrink " + std::to_string(input.channels()) + " channels to " +
                         std::to_string(channels));
    }
    if (channels == input.channels()) return input;
    return concat_channels(input, Tensor({input.height(), input.width(), channels - input.channels()}));
}

} // namespace hairseg
