#pragma once

#include "hairseg/recolor.hpp"
#include "hairseg/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hairseg {

// .cube 3-D LUTs. Supports TITLE, LUT_3D_SIZE, DOMAIN_MIN/DOMAIN_MAX (unit
// domain only), '#' comments and blank lines.
Lut3d parse_cube(std::string_view text);
std::string write_cube(const Lut3d& lut, const std::string& title = {});

// Binary PNM: P6 (RGB, maxval 255) and P5 (grey, maxval 255 or 65535).

/// Decodes a P5/P6 image into [0, 1]. When expected_channels is given, a P5
/// vs P6 disagreement is an error.
Tensor read_image(std::span<const std::uint8_t> bytes, std::optional<std::size_t> expected_channels = std::nullopt);

/// 3-channel tensors become P6/255, 1-channel tensors P5 with `mask_maxval`.
std::vector<std::uint8_t> write_image(const Tensor& image, std::uint32_t mask_maxval = 255);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

} // namespace hairseg
