#include "hairseg/formats.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

namespace hairseg {
namespace {

class HeaderParser {
  public:
    explicit HeaderParser(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    // Reads one whitespace-delimited token, skipping '#' comments.
    std::string token() {
        skip_space_and_comments();
        std::string out;
        while (pos_ < bytes_.size() && !is_space(bytes_[pos_]) && bytes_[pos_] != '#') out.push_back(static_cast<char>(bytes_[pos_++]));
        if (out.empty()) throw FormatError("PNM header truncated");
        return out;
    }

    std::uint32_t number() {
        const std::string t = token();
        std::uint64_t v = 0;
        for (char c : t) {
            if (c < '0' || c > '9') throw FormatError("PNM header field '" + t + "' is not a number");
            v = v * 10 + static_cast<std::uint64_t>(c - '0');
            if (v > 0xFFFFFFFFu) throw FormatError("PNM header field '" + t + "' is too large");
        }
        return static_cast<std::uint32_t>(v);
    }

    // Exactly one whitespace byte separates maxval from the raster.
    std::size_t raster_offset() {
        if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) throw FormatError("PNM header not terminated by whitespace");
        return pos_ + 1;
    }

  private:
    static bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (is_space(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

Tensor read_image(std::span<const std::uint8_t> bytes, std::optional<std::size_t> expected_channels) {
    HeaderParser header(bytes);
    const std::string magic = header.token();
    std::size_t channels = 0;
    if (magic == "P6") {
        channels = 3;
    } else if (magic == "P5") {
        channels = 1;
    } else {
        throw FormatError("unsupported image magic '" + magic + "' (expected P5 or P6)");
    }
    if (expected_channels && *expected_channels != channels) {
        throw FormatError(magic + " image has " + std::to_string(channels) + " channel(s), expected " +
                          std::to_string(*expected_channels));
    }
    const std::uint32_t width = header.number();
    const std::uint32_t height = header.number();
    const std::uint32_t maxval = header.number();
    if (width == 0 || height == 0) throw FormatError("PNM image has zero size");
    if (maxval == 0 || maxval > 65535) throw FormatError("PNM maxval must be in [1, 65535], got " + std::to_string(maxval));
    const std::size_t offset = header.raster_offset();

    const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
    const std::size_t samples = static_cast<std::size_t>(width) * height * channels;
    if (samples > (bytes.size() - offset) / sample_bytes || bytes.size() - offset != samples * sample_bytes) {
        throw FormatError("PNM payload is " + std::to_string(bytes.size() - offset) + " bytes, header implies " +
                          std::to_string(samples * sample_bytes));
    }

    std::vector<float> data(samples);
    const std::uint8_t* p = bytes.data() + offset;
    for (std::size_t i = 0; i < samples; ++i) {
        const std::uint32_t v = sample_bytes == 2 ? (static_cast<std::uint32_t>(p[2 * i]) << 8 | p[2 * i + 1]) : p[i];
        if (v > maxval) throw FormatError("PNM sample exceeds maxval");
        data[i] = static_cast<float>(static_cast<double>(v) / maxval);
    }
    return Tensor({height, width, channels}, std::move(data));
}

std::vector<std::uint8_t> write_image(const Tensor& image, std::uint32_t mask_maxval) {
    const std::size_t channels = image.channels();
    if (channels != 1 && channels != 3) {
        throw ShapeError("write_image: channel count must be 1 or 3, got " + std::to_string(channels));
    }
    if (!image.in_unit_range()) throw ValueError("write_image: values must lie in [0, 1]");
    const std::uint32_t maxval = channels == 3 ? 255 : mask_maxval;
    if (maxval != 255 && maxval != 65535) throw ValueError("write_image: mask maxval must be 255 or 65535");

    const std::string header = std::string(channels == 3 ? "P6" : "P5") + "\n" + std::to_string(image.width()) + " " +
                               std::to_string(image.height()) + "\n" + std::to_string(maxval) + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + image.size() * (maxval > 255 ? 2 : 1));
    for (float v : image.data()) {
        const auto q = static_cast<std::uint32_t>(std::lround(static_cast<double>(v) * maxval));
        if (maxval > 255) out.push_back(static_cast<std::uint8_t>(q >> 8));
        out.push_back(static_cast<std::uint8_t>(q & 0xFF));
    }
    return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return {bytes.begin(), bytes.end()};
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

} // namespace hairseg
