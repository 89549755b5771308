#pragma once

#include "hairseg/tensor.hpp"

#include <array>
#include <string>
#include <vector>

namespace hairseg {

using Rgb = std::array<float, 3>;

/// Cubic 3-D colour lattice with n points per axis. Entries are ordered red
/// fastest, then green, then blue: index = r + n * (g + n * b).
class Lut3d {
  public:
    Lut3d() = default;
    Lut3d(std::size_t n, std::vector<Rgb> entries);

    /// Entry (i, j, k) = (i, j, k) / (n - 1).
    static Lut3d identity(std::size_t n);
    static Lut3d constant(std::size_t n, Rgb value);

    std::size_t size() const { return n_; }
    const std::vector<Rgb>& entries() const { return entries_; }
    const Rgb& at(std::size_t r, std::size_t g, std::size_t b) const { return entries_[r + n_ * (g + n_ * b)]; }

    /// Trilinear lookup of an RGB value in [0, 1]^3.
    Rgb sample(const Rgb& rgb) const;

    bool operator==(const Lut3d&) const = default;

  private:
    std::size_t n_ = 0;
    std::vector<Rgb> entries_;
};

/// How "average hair intensity" is measured: mask-weighted mean luma.
struct IntensityModel {
    double weight_r = 0.299;
    double weight_g = 0.587;
    double weight_b = 0.114;
    double epsilon_mass = 1e-3;  // minimal sum of mask values
    double fallback_intensity = 0.5;
};

struct IntensityResult {
    double value = 0.0;
    double mass = 0.0;
    bool low_mass = false;
};

/// Artist-authored dark/light LUT pair with the measured intensities of
/// their reference images.
struct RecolorProfile {
    Lut3d lut_dark;
    Lut3d lut_light;
    double i_dark = 0.0;
    double i_light = 1.0;
    std::string name;

    /// Throws ValueError unless i_dark < i_light and both LUTs share n.
    void validate() const;
};

IntensityResult average_intensity(const Tensor& image, const Tensor& mask, const IntensityModel& model = {});

/// t = clamp((intensity - i_dark) / (i_light - i_dark), 0, 1);
/// entry k = (1 - t) * dark_k + t * light_k.
Lut3d interpolate_luts(const RecolorProfile& profile, double intensity);

Tensor apply_lut(const Tensor& image, const Lut3d& lut);

/// out = m * L(px) + (1 - m) * px with L interpolated for this frame's
/// measured hair intensity.
Tensor recolor_frame(const Tensor& image, const Tensor& mask, const RecolorProfile& profile,
                     const IntensityModel& model = {});

struct ReferenceImage {
    Tensor image;
    Tensor mask;
};

/// Measures both reference intensities and packages the profile.
RecolorProfile calibrate_profile(const ReferenceImage& ref_dark, const ReferenceImage& ref_light, Lut3d lut_dark,
                                 Lut3d lut_light, const IntensityModel& model = {}, std::string name = {});

} // namespace hairseg
