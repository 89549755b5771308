#include "hairseg/recolor.hpp"

#include <algorithm>
#include <cmath>

namespace hairseg {
namespace {

void check_image_and_mask(const Tensor& image, const Tensor& mask, const char* op) {
    if (image.channels() != 3) {
        throw ShapeError(std::string(op) + ": image must have 3 channels, got " + to_string(image.shape()));
    }
    if (mask.channels() != 1 || mask.height() != image.height() || mask.width() != image.width()) {
        throw ShapeError(std::string(op) + ": mask " + to_string(mask.shape()) + " does not match image " +
                         to_string(image.shape()));
    }
    if (!image.in_unit_range() || !mask.in_unit_range()) {
        throw ValueError(std::string(op) + ": image and mask values must lie in [0, 1]");
    }
}

// Luma written relative to green so grey pixels map to their own value exactly.
double luma(const IntensityModel& m, double r, double g, double b) {
    return g + m.weight_r * (r - g) + m.weight_b * (b - g);
}

float clamp_unit(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

} // namespace

Lut3d::Lut3d(std::size_t n, std::vector<Rgb> entries) : n_(n), entries_(std::move(entries)) {
    if (n_ < 2) throw ValueError("Lut3d: grid size must be >= 2, got " + std::to_string(n_));
    if (entries_.size() != n_ * n_ * n_) {
        throw ValueError("Lut3d: expected " + std::to_string(n_ * n_ * n_) + " entries, got " +
                         std::to_string(entries_.size()));
    }
    for (const Rgb& e : entries_) {
        for (float v : e) {
            if (!(v >= 0.0f && v <= 1.0f)) throw ValueError("Lut3d: entry component outside [0, 1]");
        }
    }
}

Lut3d Lut3d::identity(std::size_t n) {
    if (n < 2) throw ValueError("Lut3d: grid size must be >= 2");
    std::vector<Rgb> entries;
    entries.reserve(n * n * n);
    const double scale = 1.0 / static_cast<double>(n - 1);
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t g = 0; g < n; ++g) {
            for (std::size_t r = 0; r < n; ++r) {
                entries.push_back({static_cast<float>(r * scale), static_cast<float>(g * scale), static_cast<float>(b * scale)});
            }
        }
    }
    return Lut3d(n, std::move(entries));
}

Lut3d Lut3d::constant(std::size_t n, Rgb value) { return Lut3d(n, std::vector<Rgb>(n * n * n, value)); }

Rgb Lut3d::sample(const Rgb& rgb) const {
    const double last = static_cast<double>(n_ - 1);
    std::size_t lo[3];
    double frac[3];
    for (int a = 0; a < 3; ++a) {
        const double c = std::clamp(static_cast<double>(rgb[a]), 0.0, 1.0) * last;
        const auto i = std::min(static_cast<std::size_t>(c), n_ - 2);
        lo[a] = i;
        frac[a] = c - static_cast<double>(i);
    }
    Rgb out{};
    for (int ch = 0; ch < 3; ++ch) {
        double acc = 0.0;
        for (int corner = 0; corner < 8; ++corner) {
            const int dr = corner & 1, dg = (corner >> 1) & 1, db = (corner >> 2) & 1;
            const double w = (dr ? frac[0] : 1.0 - frac[0]) * (dg ? frac[1] : 1.0 - frac[1]) *
                             (db ? frac[2] : 1.0 - frac[2]);
            acc += w * at(lo[0] + dr, lo[1] + dg, lo[2] + db)[ch];
        }
        out[ch] = clamp_unit(acc);
    }
    return out;
}

void RecolorProfile::validate() const {
    if (lut_dark.size() != lut_light.size()) {
        throw ValueError("recolor profile: dark LUT has n=" + std::to_string(lut_dark.size()) + ", light LUT has n=" +
                         std::to_string(lut_light.size()));
    }
    if (!(i_dark < i_light)) {
        throw ValueError("recolor profile: i_dark (" + std::to_string(i_dark) + ") must be below i_light (" +
                         std::to_string(i_light) + ")");
    }
}

IntensityResult average_intensity(const Tensor& image, const Tensor& mask, const IntensityModel& model) {
    check_image_and_mask(image, mask, "average_intensity");
    double weighted = 0.0;
    double mass = 0.0;
    const auto px = image.data();
    const auto m = mask.data();
    for (std::size_t p = 0; p < m.size(); ++p) {
        if (m[p] == 0.0f) continue;
        weighted += m[p] * luma(model, px[3 * p], px[3 * p + 1], px[3 * p + 2]);
        mass += m[p];
    }
    if (mass < model.epsilon_mass) return {model.fallback_intensity, mass, true};
    return {std::clamp(weighted / mass, 0.0, 1.0), mass, false};
}

Lut3d interpolate_luts(const RecolorProfile& profile, double intensity) {
    profile.validate();
    if (!(intensity >= 0.0 && intensity <= 1.0)) throw ValueError("interpolate_luts: intensity outside [0, 1]");
    const double t = std::clamp((intensity - profile.i_dark) / (profile.i_light - profile.i_dark), 0.0, 1.0);
    if (t == 0.0) return profile.lut_dark;
    if (t == 1.0) return profile.lut_light;
    const auto& dark = profile.lut_dark.entries();
    const auto& light = profile.lut_light.entries();
    std::vector<Rgb> out(dark.size());
    for (std::size_t k = 0; k < dark.size(); ++k) {
        for (int c = 0; c < 3; ++c) out[k][c] = clamp_unit((1.0 - t) * dark[k][c] + t * light[k][c]);
    }
    return Lut3d(profile.lut_dark.size(), std::move(out));
}

Tensor apply_lut(const Tensor& image, const Lut3d& lut) {
    if (image.channels() != 3) throw ShapeError("apply_lut: image must have 3 channels, got " + to_string(image.shape()));
    Tensor out(image.shape());
    const auto src = image.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); i += 3) {
        const Rgb mapped = lut.sample({src[i], src[i + 1], src[i + 2]});
        std::copy(mapped.begin(), mapped.end(), dst.begin() + static_cast<std::ptrdiff_t>(i));
    }
    return out;
}

Tensor recolor_frame(const Tensor& image, const Tensor& mask, const RecolorProfile& profile, const IntensityModel& model) {
    const IntensityResult intensity = average_intensity(image, mask, model);
    const Lut3d lut = interpolate_luts(profile, intensity.value);
    Tensor out = image;
    const auto src = image.data();
    const auto m = mask.data();
    auto dst = out.data();
    for (std::size_t p = 0; p < m.size(); ++p) {
        const double w = m[p];
        if (w == 0.0) continue;
        const Rgb mapped = lut.sample({src[3 * p], src[3 * p + 1], src[3 * p + 2]});
        for (int c = 0; c < 3; ++c) dst[3 * p + c] = clamp_unit(w * mapped[c] + (1.0 - w) * src[3 * p + c]);
    }
    return out;
}

RecolorProfile calibrate_profile(const ReferenceImage& ref_dark, const ReferenceImage& ref_light, Lut3d lut_dark,
                                 Lut3d lut_light, const IntensityModel& model, std::string name) {
    const IntensityResult dark = average_intensity(ref_dark.image, ref_dark.mask, model);
    const IntensityResult light = average_intensity(ref_light.image, ref_light.mask, model);
    if (dark.low_mass || light.low_mass) throw ValueError("calibrate_profile: reference mask has no hair area");
    if (!(dark.value < light.value)) {
        throw ValueError("calibrate_profile: measured i_dark=" + std::to_string(dark.value) +
                         " >= i_light=" + std::to_string(light.value));
    }
    RecolorProfile profile{std::move(lut_dark), std::move(lut_light), dark.value, light.value, std::move(name)};
    profile.validate();
    return profile;
}

} // namespace hairseg
