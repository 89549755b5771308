#pragma once

#include "hairseg/tensor.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hairseg {

/// Rotation (degrees) and scale about the image centre, then a translation
/// given as a fraction of width/height.
struct AffinePerturbation {
    double angle_deg = 0.0;
    double scale = 1.0;
    double translate_x = 0.0;
    double translate_y = 0.0;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
};

/// Parameter ranges for the "minor" (propagate) and "major" (discard)
/// prior-mask perturbations. Angles and translations are magnitudes; the
/// sign is drawn separately for the major branch.
struct PerturbationRanges {
    double minor_max_angle = 10.0;
    Interval minor_scale{0.95, 1.05};
    double minor_max_translate = 0.03;

    Interval major_angle{20.0, 60.0};
    Interval major_scale_low{0.6, 0.9};
    Interval major_scale_high{1.1, 1.6};
    Interval major_translate{0.1, 0.3};

    void validate() const;
};

enum class PriorBranch { empty, identity, minor, major };

std::string_view branch_name(PriorBranch branch);

/// Branch probabilities for synthesising the previous-frame mask.
struct PriorPolicy {
    double p_empty = 0.3;
    double p_identity = 0.2;
    double p_minor = 0.3;
    double p_major = 0.2;

    /// Nonnegative and summing to 1 within 1e-9; throws ValueError otherwise.
    void validate() const;

    /// Parses "p_empty,p_identity,p_minor,p_major".
    static PriorPolicy parse(std::string_view text);
};

struct PriorSample {
    Tensor mask;
    PriorBranch branch = PriorBranch::empty;
    AffinePerturbation params;
};

/// Backward warp with bilinear sampling; out-of-bounds taps read 0.
/// source = A^-1 (dst - centre) + centre - translation, A = R(angle) * scale.
Tensor affine_warp(const Tensor& image, const AffinePerturbation& p);

/// Draws one branch and its parameters from SplitMix64(seed) in this order:
///   u                                   -> branch (cumulative empty, identity, minor, major)
///   minor: angle U(-a, a), scale U(lo, hi), tx U(-t, t), ty U(-t, t)
///   major: |angle| U(lo, hi), sign, interval pick (by length), scale U(interval),
///          |tx| U(lo, hi), sign, |ty| U(lo, hi), sign     (sign: u < 0.5 -> negative)
PriorSample sample_prior_mask(const Tensor& gt_mask, const PriorPolicy& policy, const PerturbationRanges& ranges,
                              std::uint64_t seed);

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point2&) const = default;
};

/// Thin-plate spline f(p) = a0 + a1 x + a2 y + sum_i w_i U(|p - src_i|),
/// one set of coefficients per output coordinate, U(r) = r^2 log(r^2).
struct TpsWarp {
    std::vector<Point2> control_src;
    std::vector<Point2> control_dst;
    std::array<std::array<double, 3>, 2> affine{};  // rows: x', y'; columns: 1, x, y
    std::vector<std::array<double, 2>> rbf_weights;
    double regularization = 0.0;

    Point2 map(Point2 p) const;
};

/// U(r) expressed on the squared distance; U(0) = 0.
double tps_kernel(double r2);

/// Solves [[K + lambda I, P], [P^T, 0]] [w; a] = [v; 0] per coordinate.
/// Throws ValueError for fewer than 3, duplicate, or collinear control points
/// and when the solve's residual exceeds 1e-8.
TpsWarp tps_fit(const std::vector<Point2>& control_src, const std::vector<Point2>& control_dst, double lambda = 0.0);

/// grid_n x grid_n control grid on the output image; each point's source
/// location is jittered by N(0, sigma^2) per axis (SplitMix64(seed), row-major,
/// x then y) and fitted with lambda = 1e-6. The warp maps output -> source.
TpsWarp jittered_grid_warp(std::size_t height, std::size_t width, std::size_t grid_n, double sigma, std::uint64_t seed,
                           double lambda = 1e-6);

/// Backward-warps every channel through `warp` with bilinear sampling.
Tensor warp_image(const Tensor& image, const TpsWarp& warp);

Tensor tps_warp_image(const Tensor& image, std::size_t grid_n, double sigma, std::uint64_t seed);

} // namespace hairseg
