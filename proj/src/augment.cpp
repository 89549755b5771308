#include "hairseg/augment.hpp"

#include "hairseg/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

namespace hairseg {
namespace {

// Bilinear read with zero outside the grid.
float bilinear(const Tensor& img, double sx, double sy, std::size_t c) {
    const double fx = std::floor(sx), fy = std::floor(sy);
    const double ax = sx - fx, ay = sy - fy;
    const auto x0 = static_cast<std::ptrdiff_t>(fx), y0 = static_cast<std::ptrdiff_t>(fy);
    const auto w = static_cast<std::ptrdiff_t>(img.width()), h = static_cast<std::ptrdiff_t>(img.height());
    auto tap = [&](std::ptrdiff_t x, std::ptrdiff_t y) -> double {
        if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
        return img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c);
    };
    const double v = (1.0 - ay) * ((1.0 - ax) * tap(x0, y0) + ax * tap(x0 + 1, y0)) +
                     ay * ((1.0 - ax) * tap(x0, y0 + 1) + ax * tap(x0 + 1, y0 + 1));
    return static_cast<float>(v);
}

template <typename MapFn>
Tensor backward_warp(const Tensor& image, MapFn&& map) {
    Tensor out(image.shape());
    for (std::size_t y = 0; y < image.height(); ++y) {
        for (std::size_t x = 0; x < image.width(); ++x) {
            const Point2 s = map(Point2{static_cast<double>(x), static_cast<double>(y)});
            for (std::size_t c = 0; c < image.channels(); ++c) {
                out.at(y, x, c) = std::clamp(bilinear(image, s.x, s.y, c), 0.0f, 1.0f);
            }
        }
    }
    return out;
}

double signed_draw(SplitMix64& rng, const Interval& magnitude) {
    const double m = rng.uniform(magnitude.lo, magnitude.hi);
    return rng.uniform() < 0.5 ? -m : m;
}

} // namespace

void PerturbationRanges::validate() const {
    auto ordered = [](const Interval& i) { return i.lo <= i.hi; };
    if (minor_max_angle < 0 || minor_max_translate < 0 || !ordered(minor_scale) || !ordered(major_angle) ||
        !ordered(major_scale_low) || !ordered(major_scale_high) || !ordered(major_translate)) {
        throw ValueError("perturbation ranges: malformed interval");
    }
    if (minor_scale.lo <= 0 || major_scale_low.lo <= 0 || major_scale_high.lo <= 0) {
        throw ValueError("perturbation ranges: scales must be positive");
    }
    if (major_scale_low.length() + major_scale_high.length() <= 0) {
        throw ValueError("perturbation ranges: major scale intervals are empty");
    }
    const bool angle_disjoint = minor_max_angle < major_angle.lo;
    const bool translate_disjoint = minor_max_translate < major_translate.lo;
    const bool scale_disjoint = minor_scale.lo > major_scale_low.hi && minor_scale.hi < major_scale_high.lo;
    if (!angle_disjoint && !translate_disjoint && !scale_disjoint) {
        throw ValueError("perturbation ranges: minor and major ranges overlap in every component");
    }
}

std::string_view branch_name(PriorBranch branch) {
    switch (branch) {
    case PriorBranch::empty: return "empty";
    case PriorBranch::identity: return "identity";
    case PriorBranch::minor: return "minor";
    case PriorBranch::major: return "major";
    }
    return "empty";
}

void PriorPolicy::validate() const {
    const double p[] = {p_empty, p_identity, p_minor, p_major};
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ValueError("prior policy: probabilities must be nonnegative");
    }
    const double sum = p_empty + p_identity + p_minor + p_major;
    if (std::abs(sum - 1.0) > 1e-9) throw ValueError("prior policy: probabilities sum to " + std::to_string(sum) + ", not 1");
}

PriorPolicy PriorPolicy::parse(std::string_view text) {
    double values[4];
    std::size_t count = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto field = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        if (count == 4) throw ValueError("prior policy: expected 4 comma-separated probabilities");
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc{} || ptr != field.data() + field.size()) {
            throw ValueError("prior policy: '" + std::string(field) + "' is not a number");
        }
        values[count++] = v;
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    if (count != 4) throw ValueError("prior policy: expected 4 comma-separated probabilities");
    PriorPolicy policy{values[0], values[1], values[2], values[3]};
    policy.validate();
    return policy;
}

Tensor affine_warp(const Tensor& image, const AffinePerturbation& p) {
    if (!(p.scale > 0.0)) throw ValueError("affine_warp: scale must be > 0");
    if (!image.in_unit_range()) throw ValueError("affine_warp: input values must lie in [0, 1]");
    const double theta = p.angle_deg * std::numbers::pi / 180.0;
    const double cos_t = std::cos(theta), sin_t = std::sin(theta);
    const double inv_scale = 1.0 / p.scale;
    const double cx = (static_cast<double>(image.width()) - 1.0) / 2.0;
    const double cy = (static_cast<double>(image.height()) - 1.0) / 2.0;
    const double tx = p.translate_x * static_cast<double>(image.width());
    const double ty = p.translate_y * static_cast<double>(image.height());
    return backward_warp(image, [&](Point2 d) {
        const double dx = d.x - cx, dy = d.y - cy;
        // A^-1 = R(-theta) / scale
        return Point2{inv_scale * (cos_t * dx + sin_t * dy) + cx - tx, inv_scale * (-sin_t * dx + cos_t * dy) + cy - ty};
    });
}

PriorSample sample_prior_mask(const Tensor& gt_mask, const PriorPolicy& policy, const PerturbationRanges& ranges,
                              std::uint64_t seed) {
    policy.validate();
    ranges.validate();
    if (gt_mask.channels() != 1) throw ShapeError("sample_prior_mask: mask must have 1 channel, got " + to_string(gt_mask.shape()));
    if (!gt_mask.in_unit_range()) throw ValueError("sample_prior_mask: mask values must lie in [0, 1]");

    SplitMix64 rng(seed);
    const double u = rng.uniform();
    const double probs[] = {policy.p_empty, policy.p_identity, policy.p_minor, policy.p_major};
    PriorBranch branch = PriorBranch::empty;
    double acc = 0.0;
    bool chosen = false;
    for (int b = 0; b < 4; ++b) {
        acc += probs[b];
        if (u < acc) {
            branch = static_cast<PriorBranch>(b);
            chosen = true;
            break;
        }
    }
    if (!chosen) {
        // Rounding left u above the cumulative total: take the last branch that can occur.
        for (int b = 3; b >= 0; --b) {
            if (probs[b] > 0.0) {
                branch = static_cast<PriorBranch>(b);
                break;
            }
        }
    }

    PriorSample out{Tensor(gt_mask.shape()), branch, {}};
    switch (branch) {
    case PriorBranch::empty:
        break;
    case PriorBranch::identity:
        out.mask = gt_mask;
        break;
    case PriorBranch::minor: {
        AffinePerturbation& p = out.params;
        p.angle_deg = rng.uniform(-ranges.minor_max_angle, ranges.minor_max_angle);
        p.scale = rng.uniform(ranges.minor_scale.lo, ranges.minor_scale.hi);
        p.translate_x = rng.uniform(-ranges.minor_max_translate, ranges.minor_max_translate);
        p.translate_y = rng.uniform(-ranges.minor_max_translate, ranges.minor_max_translate);
        out.mask = affine_warp(gt_mask, p);
        break;
    }
    case PriorBranch::major: {
        AffinePerturbation& p = out.params;
        p.angle_deg = signed_draw(rng, ranges.major_angle);
        const double low_len = ranges.major_scale_low.length();
        const double total = low_len + ranges.major_scale_high.length();
        const Interval& scale = rng.uniform() < low_len / total ? ranges.major_scale_low : ranges.major_scale_high;
        p.scale = rng.uniform(scale.lo, scale.hi);
        p.translate_x = signed_draw(rng, ranges.major_translate);
        p.translate_y = signed_draw(rng, ranges.major_translate);
        out.mask = affine_warp(gt_mask, p);
        break;
    }
    }
    return out;
}

double tps_kernel(double r2) { return r2 > 0.0 ? r2 * std::log(r2) : 0.0; }

Point2 TpsWarp::map(Point2 p) const {
    double out[2] = {affine[0][0] + affine[0][1] * p.x + affine[0][2] * p.y,
                     affine[1][0] + affine[1][1] * p.x + affine[1][2] * p.y};
    for (std::size_t i = 0; i < control_src.size(); ++i) {
        const double dx = p.x - control_src[i].x, dy = p.y - control_src[i].y;
        const double u = tps_kernel(dx * dx + dy * dy);
        out[0] += rbf_weights[i][0] * u;
        out[1] += rbf_weights[i][1] * u;
    }
    return {out[0], out[1]};
}

TpsWarp tps_fit(const std::vector<Point2>& control_src, const std::vector<Point2>& control_dst, double lambda) {
    const std::size_t n = control_src.size();
    if (n != control_dst.size()) throw ValueError("tps_fit: source and destination point counts differ");
    if (n < 3) throw ValueError("tps_fit: need at least 3 control points, got " + std::to_string(n));
    if (!(lambda >= 0.0)) throw ValueError("tps_fit: regularization must be >= 0");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (control_src[i] == control_src[j]) {
                throw ValueError("tps_fit: duplicate control point at index " + std::to_string(i) + " and " + std::to_string(j));
            }
        }
    }
    // Non-collinear iff the centred scatter matrix has full rank.
    {
        double mx = 0, my = 0;
        for (const auto& p : control_src) mx += p.x, my += p.y;
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
        double sxx = 0, syy = 0, sxy = 0;
        for (const auto& p : control_src) {
            sxx += (p.x - mx) * (p.x - mx);
            syy += (p.y - my) * (p.y - my);
            sxy += (p.x - mx) * (p.y - my);
        }
        if (sxx * syy - sxy * sxy <= 1e-12 * (sxx + syy) * (sxx + syy)) {
            throw ValueError("tps_fit: control points are collinear");
        }
    }

    const auto m = static_cast<Eigen::Index>(n + 3);
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        for (std::size_t j = 0; j < n; ++j) {
            const double dx = control_src[i].x - control_src[j].x, dy = control_src[i].y - control_src[j].y;
            L(ii, static_cast<Eigen::Index>(j)) = tps_kernel(dx * dx + dy * dy);
        }
        L(ii, ii) += lambda;
        const auto nn = static_cast<Eigen::Index>(n);
        L(ii, nn) = L(nn, ii) = 1.0;
        L(ii, nn + 1) = L(nn + 1, ii) = control_src[i].x;
        L(ii, nn + 2) = L(nn + 2, ii) = control_src[i].y;
        rhs(ii, 0) = control_dst[i].x;
        rhs(ii, 1) = control_dst[i].y;
    }

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(L);
    if (lu.rank() < m) throw ValueError("tps_fit: singular system (degenerate control points)");
    Eigen::MatrixXd sol = lu.solve(rhs);
    sol += lu.solve(rhs - L * sol);  // one step of iterative refinement

    const double scale = L.cwiseAbs().rowwise().sum().maxCoeff() * sol.cwiseAbs().maxCoeff() + rhs.cwiseAbs().maxCoeff();
    const double residual = (L * sol - rhs).cwiseAbs().maxCoeff() / std::max(scale, 1e-300);
    if (residual > 1e-8) throw ValueError("tps_fit: solver residual " + std::to_string(residual) + " exceeds 1e-8");

    TpsWarp warp;
    warp.control_src = control_src;
    warp.control_dst = control_dst;
    warp.regularization = lambda;
    warp.rbf_weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        warp.rbf_weights[i] = {sol(static_cast<Eigen::Index>(i), 0), sol(static_cast<Eigen::Index>(i), 1)};
    }
    const auto nn = static_cast<Eigen::Index>(n);
    for (int k = 0; k < 2; ++k) warp.affine[k] = {sol(nn, k), sol(nn + 1, k), sol(nn + 2, k)};
    return warp;
}

TpsWarp jittered_grid_warp(std::size_t height, std::size_t width, std::size_t grid_n, double sigma, std::uint64_t seed,
                           double lambda) {
    if (grid_n < 2) throw ValueError("tps grid needs grid_n >= 2, got " + std::to_string(grid_n));
    if (height < 2 || width < 2) throw ValueError("tps grid needs an image of at least 2x2 pixels");
    if (!(sigma >= 0.0)) throw ValueError("tps jitter sigma must be >= 0");
    SplitMix64 rng(seed);
    std::vector<Point2> grid, jittered;
    const double step_x = static_cast<double>(width - 1) / static_cast<double>(grid_n - 1);
    const double step_y = static_cast<double>(height - 1) / static_cast<double>(grid_n - 1);
    for (std::size_t j = 0; j < grid_n; ++j) {
        for (std::size_t i = 0; i < grid_n; ++i) {
            const Point2 g{static_cast<double>(i) * step_x, static_cast<double>(j) * step_y};
            const double dx = sigma * rng.normal();
            const double dy = sigma * rng.normal();
            grid.push_back(g);
            jittered.push_back({g.x + dx, g.y + dy});
        }
    }
    return tps_fit(grid, jittered, lambda);
}

Tensor warp_image(const Tensor& image, const TpsWarp& warp) {
    return backward_warp(image, [&](Point2 d) { return warp.map(d); });
}

Tensor tps_warp_image(const Tensor& image, std::size_t grid_n, double sigma, std::uint64_t seed) {
    if (!image.in_unit_range()) throw ValueError("tps_warp_image: input values must lie in [0, 1]");
    return warp_image(image, jittered_grid_warp(image.height(), image.width(), grid_n, sigma, seed));
}

} // namespace hairseg
