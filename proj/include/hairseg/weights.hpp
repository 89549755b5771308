#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace hairseg {

/// A named N-dimensional float array as stored in a weight file.
struct WeightTensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> values;

    std::size_t element_count() const;
    bool operator==(const WeightTensor&) const = default;
};

/// Layer-qualified tensor name -> tensor. std::map keeps names in
/// lexicographic byte order, which is also the canonical file order.
using WeightStore = std::map<std::string, WeightTensor>;

/// Binary weight file ("HSW1"):
///   magic "HSW1" | u32 entry_count | entry_count x
///   { u32 name_len | name bytes | u32 rank | rank x u32 dims | prod(dims) x f32 }
/// All integers and floats little-endian; entries sorted by name; no trailing bytes.
std::vector<std::uint8_t> encode_weights(const WeightStore& store);
WeightStore decode_weights(std::span<const std::uint8_t> bytes);

} // namespace hairseg
