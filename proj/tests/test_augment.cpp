#include "hairseg/augment.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

using namespace hairseg;

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a.data()[i]) - b.data()[i]));
    return m;
}

std::size_t foreground(const Tensor& m) {
    return static_cast<std::size_t>(std::count_if(m.data().begin(), m.data().end(), [](float v) { return v >= 0.5f; }));
}

Tensor gradient_image(std::size_t h, std::size_t w) {
    Tensor t({h, w, 3});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            t.at(y, x, 0) = float(x) / float(w - 1);
            t.at(y, x, 1) = float(y) / float(h - 1);
            t.at(y, x, 2) = 0.5f * (float(x) / float(w - 1) + float(y) / float(h - 1));
        }
    return t;
}

} // namespace

TEST(AffineWarp, IdentityParametersReproduceInput) {
    std::mt19937 rng(1);
    const Tensor img = oracle::random_tensor({9, 12, 3}, rng, 0, 1);
    EXPECT_LE(max_abs_diff(affine_warp(img, {0.0, 1.0, 0.0, 0.0}), img), 1e-6);
}

TEST(AffineWarp, HalfWidthTranslationIsIntegerShift) {
    std::mt19937 rng(2);
    Tensor mask({6, 8, 1});
    for (std::size_t y = 0; y < 6; ++y)
        for (std::size_t x = 0; x < 4; ++x) mask.at(y, x, 0) = 1.0f;
    const Tensor out = affine_warp(mask, {0.0, 1.0, 0.5, 0.0});
    for (std::size_t y = 0; y < 6; ++y)
        for (std::size_t x = 0; x < 8; ++x) {
            const float expected = x >= 4 ? mask.at(y, x - 4, 0) : 0.0f;
            EXPECT_NEAR(out.at(y, x, 0), expected, 1e-6) << x << "," << y;
        }

    const Tensor noise = oracle::random_tensor({5, 10, 1}, rng, 0, 1);
    const Tensor shifted = affine_warp(noise, {0.0, 1.0, 0.5, 0.0});
    for (std::size_t y = 0; y < 5; ++y)
        for (std::size_t x = 0; x < 10; ++x)
            EXPECT_NEAR(shifted.at(y, x, 0), x >= 5 ? noise.at(y, x - 5, 0) : 0.0f, 1e-6);
}

TEST(AffineWarp, QuarterTurnOfLShapeMatchesHandRotation) {
    Tensor src({5, 5, 1});
    const std::array<std::array<std::size_t, 2>, 3> pts{{{2, 1}, {2, 2}, {3, 2}}};  // (x, y)
    for (auto [x, y] : pts) src.at(y, x, 0) = 1.0f;
    // Forward rotation about the centre (2, 2): (dx, dy) -> (-dy, dx).
    Tensor expected({5, 5, 1});
    for (auto [x, y] : pts) {
        const long dx = long(x) - 2, dy = long(y) - 2;
        expected.at(std::size_t(2 + dx), std::size_t(2 - dy), 0) = 1.0f;  // row = 2 + dx, col = 2 - dy
    }
    EXPECT_LE(max_abs_diff(affine_warp(src, {90.0, 1.0, 0.0, 0.0}), expected), 1e-6);
    EXPECT_EQ(expected.at(2, 3, 0), 1.0f);  // (2,1) lands on (3,2)
    EXPECT_EQ(expected.at(3, 2, 0), 1.0f);  // (3,2) lands on (2,3)
}

TEST(AffineWarp, RangeZeroAndErrors) {
    std::mt19937 rng(3);
    const Tensor img = oracle::random_tensor({16, 16, 1}, rng, 0, 1);
    for (int i = 0; i < 20; ++i) {
        const AffinePerturbation p{std::uniform_real_distribution<double>(-90, 90)(rng),
                                   std::uniform_real_distribution<double>(0.5, 2)(rng),
                                   std::uniform_real_distribution<double>(-0.3, 0.3)(rng),
                                   std::uniform_real_distribution<double>(-0.3, 0.3)(rng)};
        EXPECT_TRUE(affine_warp(img, p).in_unit_range());
        const Tensor zero_out = affine_warp(Tensor({16, 16, 1}), p);
        EXPECT_TRUE(std::all_of(zero_out.data().begin(), zero_out.data().end(), [](float v) { return v == 0.0f; }));
    }
    EXPECT_THROW(affine_warp(img, {0, 0.0, 0, 0}), ValueError);
    EXPECT_THROW(affine_warp(img, {0, -1.0, 0, 0}), ValueError);
}

TEST(PriorPolicy, ValidateAndParse) {
    EXPECT_NO_THROW(PriorPolicy{}.validate());
    const PriorPolicy p = PriorPolicy::parse("0.1,0.2,0.3,0.4");
    EXPECT_DOUBLE_EQ(p.p_major, 0.4);
    EXPECT_THROW(PriorPolicy::parse("0.5,0.5,0.5,0"), ValueError);
    EXPECT_THROW(PriorPolicy::parse("1,0,0"), ValueError);
    EXPECT_THROW(PriorPolicy::parse("1,0,0,0,0"), ValueError);
    EXPECT_THROW(PriorPolicy::parse("1.2,-0.2,0,0"), ValueError);
    EXPECT_THROW(PriorPolicy::parse("a,b,c,d"), ValueError);
}

TEST(PerturbationRanges, DefaultsValidOverlapRejected) {
    EXPECT_NO_THROW(PerturbationRanges{}.validate());
    PerturbationRanges r;
    r.minor_max_angle = 30;
    r.minor_max_translate = 0.2;
    r.minor_scale = {0.5, 1.5};
    EXPECT_THROW(r.validate(), ValueError);
}

TEST(SamplePriorMask, DegeneratePolicyAlwaysEmpty) {
    const Tensor gt = oracle::blob_mask(16, 16, 1);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const PriorSample s = sample_prior_mask(gt, {1, 0, 0, 0}, {}, seed);
        EXPECT_EQ(s.branch, PriorBranch::empty);
        EXPECT_EQ(foreground(s.mask), 0u);
    }
    const PriorSample id = sample_prior_mask(gt, {0, 1, 0, 0}, {}, 9);
    EXPECT_EQ(id.mask, gt);
}

TEST(SamplePriorMask, SeededDeterminismAndValidity) {
    const Tensor gt = oracle::blob_mask(24, 24, 2);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const PriorSample a = sample_prior_mask(gt, {}, {}, seed);
        const PriorSample b = sample_prior_mask(gt, {}, {}, seed);
        EXPECT_EQ(a.branch, b.branch);
        EXPECT_EQ(a.mask, b.mask);
        EXPECT_EQ(a.mask.shape(), gt.shape());
        EXPECT_TRUE(a.mask.in_unit_range());
    }
    EXPECT_THROW(sample_prior_mask(gt, {0.5, 0.5, 0.5, 0}, {}, 0), ValueError);
}

TEST(SamplePriorMask, EmpiricalBranchFrequencies) {
    const Tensor gt({4, 4, 1}, 1.0f);
    const PriorPolicy policy{0.3, 0.2, 0.3, 0.2};
    std::map<PriorBranch, int> counts;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) ++counts[sample_prior_mask(gt, policy, {}, static_cast<std::uint64_t>(i)).branch];
    EXPECT_NEAR(counts[PriorBranch::empty] / double(draws), 0.3, 0.02);
    EXPECT_NEAR(counts[PriorBranch::identity] / double(draws), 0.2, 0.02);
    EXPECT_NEAR(counts[PriorBranch::minor] / double(draws), 0.3, 0.02);
    EXPECT_NEAR(counts[PriorBranch::major] / double(draws), 0.2, 0.02);
}

TEST(SamplePriorMask, ParametersStayInsideTheirRanges) {
    const Tensor gt({8, 8, 1}, 1.0f);
    const PerturbationRanges r;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const PriorSample s = sample_prior_mask(gt, {0, 0, 0.5, 0.5}, r, seed);
        const auto& p = s.params;
        if (s.branch == PriorBranch::minor) {
            EXPECT_LE(std::abs(p.angle_deg), r.minor_max_angle);
            EXPECT_GE(p.scale, r.minor_scale.lo);
            EXPECT_LE(p.scale, r.minor_scale.hi);
            EXPECT_LE(std::abs(p.translate_x), r.minor_max_translate);
        } else {
            EXPECT_GE(std::abs(p.angle_deg), r.major_angle.lo);
            EXPECT_LE(std::abs(p.angle_deg), r.major_angle.hi);
            const bool low = p.scale >= r.major_scale_low.lo && p.scale <= r.major_scale_low.hi;
            const bool high = p.scale >= r.major_scale_high.lo && p.scale <= r.major_scale_high.hi;
            EXPECT_TRUE(low || high) << p.scale;
            EXPECT_GE(std::abs(p.translate_y), r.major_translate.lo);
        }
    }
}

// prior_branches.csv is produced by tests/golden/gen_prior_golden.py, an
// independent implementation of the sampler that other ports must match.
TEST(SamplePriorMask, MatchesCrossLanguageGolden) {
    std::ifstream in(std::string(HAIRSEG_GOLDEN_DIR) + "/prior_branches.csv");
    ASSERT_TRUE(in) << "missing golden file";
    const Tensor gt({8, 8, 1}, 1.0f);
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string seed, branch, angle, scale, tx, ty;
        std::getline(ss, seed, ',');
        std::getline(ss, branch, ',');
        std::getline(ss, angle, ',');
        std::getline(ss, scale, ',');
        std::getline(ss, tx, ',');
        std::getline(ss, ty, ',');
        const PriorSample s = sample_prior_mask(gt, {}, {}, std::stoull(seed));
        EXPECT_EQ(std::string(branch_name(s.branch)), branch) << "seed " << seed;
        EXPECT_EQ(s.params.angle_deg, std::stod(angle)) << "seed " << seed;
        EXPECT_EQ(s.params.scale, std::stod(scale)) << "seed " << seed;
        EXPECT_EQ(s.params.translate_x, std::stod(tx)) << "seed " << seed;
        EXPECT_EQ(s.params.translate_y, std::stod(ty)) << "seed " << seed;
        ++rows;
    }
    EXPECT_EQ(rows, 100);
}

TEST(TpsFit, IdentityCorrespondence) {
    const std::vector<Point2> pts{{0, 0}, {10, 0}, {0, 10}, {10, 10}, {4, 6}, {7, 2}};
    const TpsWarp w = tps_fit(pts, pts, 0.0);
    EXPECT_NEAR(w.affine[0][0], 0.0, 1e-9);
    EXPECT_NEAR(w.affine[0][1], 1.0, 1e-9);
    EXPECT_NEAR(w.affine[0][2], 0.0, 1e-9);
    EXPECT_NEAR(w.affine[1][0], 0.0, 1e-9);
    EXPECT_NEAR(w.affine[1][1], 0.0, 1e-9);
    EXPECT_NEAR(w.affine[1][2], 1.0, 1e-9);
    for (const auto& rw : w.rbf_weights) {
        EXPECT_NEAR(rw[0], 0.0, 1e-9);
        EXPECT_NEAR(rw[1], 0.0, 1e-9);
    }
    const Point2 q = w.map({3.3, 8.1});
    EXPECT_NEAR(q.x, 3.3, 1e-9);
    EXPECT_NEAR(q.y, 8.1, 1e-9);
}

TEST(TpsFit, PureTranslationIsAffine) {
    const std::vector<Point2> src{{0, 0}, {20, 0}, {0, 20}, {20, 20}};
    std::vector<Point2> dst;
    for (auto p : src) dst.push_back({p.x + 5, p.y});
    const TpsWarp w = tps_fit(src, dst, 0.0);
    EXPECT_NEAR(w.affine[0][0], 5.0, 1e-9);
    EXPECT_NEAR(w.affine[0][1], 1.0, 1e-9);
    EXPECT_NEAR(w.affine[1][2], 1.0, 1e-9);
    for (const auto& rw : w.rbf_weights) {
        EXPECT_LE(std::abs(rw[0]), 1e-8);
        EXPECT_LE(std::abs(rw[1]), 1e-8);
    }
}

TEST(TpsFit, DisplacedGridInterpolatesAndMatchesIndependentSolve) {
    std::vector<Point2> src, dst;
    std::vector<oracle::Pt> osrc, odst;
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) {
            const Point2 p{10.0 * i, 10.0 * j};
            const Point2 q = (i == 1 && j == 1) ? Point2{p.x + 3, p.y - 2} : p;
            src.push_back(p);
            dst.push_back(q);
            osrc.push_back({p.x, p.y});
            odst.push_back({q.x, q.y});
        }
    const TpsWarp w = tps_fit(src, dst, 0.0);
    for (std::size_t i = 0; i < src.size(); ++i) {
        const Point2 m = w.map(src[i]);
        EXPECT_NEAR(m.x, dst[i].x, 1e-6);
        EXPECT_NEAR(m.y, dst[i].y, 1e-6);
    }
    const oracle::TpsOracle ref(osrc, odst, 0.0);
    for (double y = -2; y <= 22; y += 1.7)
        for (double x = -2; x <= 22; x += 1.3) {
            const Point2 m = w.map({x, y});
            const oracle::Pt r = ref(x, y);
            EXPECT_NEAR(m.x, r.x, 1e-6);
            EXPECT_NEAR(m.y, r.y, 1e-6);
        }
}

TEST(TpsFit, SideConditionsAndRandomInterpolation) {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> coord(0, 100), jitter(-5, 5);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<Point2> src, dst;
        for (int i = 0; i < 12; ++i) {
            const Point2 p{coord(rng), coord(rng)};
            src.push_back(p);
            dst.push_back({p.x + jitter(rng), p.y + jitter(rng)});
        }
        const TpsWarp w = tps_fit(src, dst, 0.0);
        for (int k = 0; k < 2; ++k) {
            double s = 0, sx = 0, sy = 0;
            for (std::size_t i = 0; i < src.size(); ++i) {
                s += w.rbf_weights[i][k];
                sx += w.rbf_weights[i][k] * src[i].x;
                sy += w.rbf_weights[i][k] * src[i].y;
            }
            EXPECT_LE(std::abs(s), 1e-8);
            EXPECT_LE(std::abs(sx), 1e-8);
            EXPECT_LE(std::abs(sy), 1e-8);
        }
        for (std::size_t i = 0; i < src.size(); ++i) {
            const Point2 m = w.map(src[i]);
            EXPECT_NEAR(m.x, dst[i].x, 1e-6);
            EXPECT_NEAR(m.y, dst[i].y, 1e-6);
        }
    }
}

TEST(TpsFit, RejectsDegenerateControlPoints) {
    EXPECT_THROW(tps_fit({{0, 0}, {1, 1}}, {{0, 0}, {1, 1}}), ValueError);
    EXPECT_THROW(tps_fit({{0, 0}, {1, 1}, {2, 2}, {3, 3}}, {{0, 0}, {1, 1}, {2, 2}, {3, 3}}), ValueError);
    EXPECT_THROW(tps_fit({{0, 0}, {1, 0}, {0, 1}, {1, 0}}, {{0, 0}, {1, 0}, {0, 1}, {1, 0}}), ValueError);
    EXPECT_THROW(tps_fit({{0, 0}, {1, 0}, {0, 1}}, {{0, 0}, {1, 0}, {0, 1}}, -1.0), ValueError);
}

TEST(TpsWarpImage, ZeroSigmaIsIdentityAndSeedDeterministic) {
    std::mt19937 rng(5);
    const Tensor img = oracle::random_tensor({40, 56, 3}, rng, 0, 1);
    EXPECT_LE(max_abs_diff(tps_warp_image(img, 4, 0.0, 123), img), 1e-6);
    EXPECT_EQ(tps_warp_image(img, 4, 3.0, 99), tps_warp_image(img, 4, 3.0, 99));
    EXPECT_NE(tps_warp_image(img, 4, 3.0, 99), tps_warp_image(img, 4, 3.0, 100));
    EXPECT_THROW(tps_warp_image(img, 1, 1.0, 0), ValueError);
    EXPECT_THROW(tps_warp_image(img, 4, -1.0, 0), ValueError);
}

TEST(TpsWarpImage, MatchesDenseOracleOnGradient) {
    const Tensor img = gradient_image(48, 64);
    const std::uint64_t seed = 2024;
    const TpsWarp fitted = jittered_grid_warp(48, 64, 4, 4.0, seed);
    std::vector<oracle::Pt> src, dst;
    for (std::size_t i = 0; i < fitted.control_src.size(); ++i) {
        src.push_back({fitted.control_src[i].x, fitted.control_src[i].y});
        dst.push_back({fitted.control_dst[i].x, fitted.control_dst[i].y});
    }
    const oracle::TpsOracle ref(src, dst, 1e-6);
    const Tensor got = tps_warp_image(img, 4, 4.0, seed);
    double worst = 0.0;
    for (std::size_t y = 0; y < 48; ++y)
        for (std::size_t x = 0; x < 64; ++x) {
            const oracle::Pt s = ref(double(x), double(y));
            for (std::size_t c = 0; c < 3; ++c) {
                const double expected = std::clamp(oracle::bilinear(img, s.x, s.y, c), 0.0, 1.0);
                worst = std::max(worst, std::abs(expected - got.at(y, x, c)));
            }
        }
    EXPECT_LE(worst, 1e-5);
}

TEST(TpsWarpImage, JointWarpKeepsForegroundCountStable) {
    for (std::uint32_t s = 0; s < 40; ++s) {
        const Tensor mask = oracle::blob_mask(256, 256, s);
        for (double sigma : {1.0, 2.0, 4.0}) {
            const Tensor warped = tps_warp_image(mask, 4, sigma, s * 31 + 7);
            const double before = double(foreground(mask));
            const double after = double(foreground(warped));
            EXPECT_LT(std::abs(after - before) / before, 0.2) << "seed " << s << " sigma " << sigma;
        }
    }
}

// At 128x128 a 4x4 grid has ~42 px spacing, so sigma = 4 strains single
// examples by more than 20% now and then; the dataset total stays put.
TEST(TpsWarpImage, JointWarpKeepsDatasetForegroundStableAt128) {
    for (double sigma : {1.0, 2.0, 4.0}) {
        double before = 0.0, after = 0.0;
        for (std::uint32_t s = 0; s < 200; ++s) {
            const Tensor mask = oracle::blob_mask(128, 128, s);
            before += double(foreground(mask));
            after += double(foreground(tps_warp_image(mask, 4, sigma, s * 31 + 7)));
        }
        EXPECT_LT(std::abs(after - before) / before, 0.2) << "sigma " << sigma;
    }
}
