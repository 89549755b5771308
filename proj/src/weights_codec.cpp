#include "hairseg/weights.hpp"

#include "hairseg/error.hpp"

#include <bit>
#include <limits>

namespace hairseg {
namespace {

constexpr char kMagic[4] = {'H', 'S', 'W', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class ByteReader {
  public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t remaining() const { return bytes_.size() - pos_; }

    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        if (n > remaining()) {
            throw FormatError(std::string("weight file truncated while reading ") + what + " (need " + std::to_string(n) +
                              " bytes, " + std::to_string(remaining()) + " left)");
        }
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::uint32_t u32(const char* what) {
        const auto b = take(4, what);
        return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
               static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
    }

  private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::size_t WeightTensor::element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

std::vector<std::uint8_t> encode_weights(const WeightStore& store) {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, static_cast<std::uint32_t>(store.size()));
    for (const auto& [name, tensor] : store) {
        if (tensor.values.size() != tensor.element_count()) {
            throw FormatError("weight '" + name + "' has " + std::to_string(tensor.values.size()) +
                              " values but its dims imply " + std::to_string(tensor.element_count()));
        }
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        put_u32(out, static_cast<std::uint32_t>(tensor.dims.size()));
        for (auto d : tensor.dims) put_u32(out, d);
        for (float v : tensor.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

WeightStore decode_weights(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    const auto magic = in.take(4, "magic");
    if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) throw FormatError("weight file has bad magic (expected HSW1)");
    const std::uint32_t count = in.u32("entry count");

    WeightStore store;
    for (std::uint32_t e = 0; e < count; ++e) {
        const std::uint32_t name_len = in.u32("name length");
        const auto name_bytes = in.take(name_len, "tensor name");
        std::string name(name_bytes.begin(), name_bytes.end());
        const std::uint32_t rank = in.u32("rank");
        if (rank > in.remaining() / 4) throw FormatError("weight '" + name + "': rank " + std::to_string(rank) + " exceeds file size");

        WeightTensor t;
        t.dims.reserve(rank);
        std::size_t elements = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            const std::uint32_t d = in.u32("dims");
            if (d != 0 && elements > std::numeric_limits<std::size_t>::max() / 4 / d) {
                throw FormatError("weight '" + name + "': dimension product overflows");
            }
            elements *= d;
            t.dims.push_back(d);
        }
        if (elements > in.remaining() / 4) {
            throw FormatError("weight '" + name + "' declares " + std::to_string(elements) +
                              " values but the file is truncated");
        }
        const auto payload = in.take(elements * 4, "tensor data");
        t.values.resize(elements);
        for (std::size_t i = 0; i < elements; ++i) {
            const auto* b = payload.data() + 4 * i;
            const std::uint32_t raw = static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
                                      static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
            t.values[i] = std::bit_cast<float>(raw);
        }
        if (!store.emplace(std::move(name), std::move(t)).second) {
            throw FormatError("weight file contains duplicate tensor name '" + std::string(name_bytes.begin(), name_bytes.end()) + "'");
        }
    }
    if (in.remaining() != 0) throw FormatError("weight file has " + std::to_string(in.remaining()) + " trailing bytes");
    return store;
}

} // namespace hairseg
