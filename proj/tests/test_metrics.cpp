#include "hairseg/metrics.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace hairseg;

namespace {

Tensor mask_from(std::size_t h, std::size_t w, std::initializer_list<int> bits) {
    Tensor m({h, w, 1});
    std::size_t i = 0;
    for (int b : bits) m.data()[i++] = float(b);
    return m;
}

Tensor permuted(const Tensor& m, const std::vector<std::size_t>& perm) {
    Tensor out(m.shape());
    for (std::size_t i = 0; i < perm.size(); ++i) out.data()[i] = m.data()[perm[i]];
    return out;
}

// Counts foreground overlap pixel by pixel.
std::pair<std::size_t, std::size_t> brute_counts(const Tensor& a, const Tensor& b, float t) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool fa = a.data()[i] >= t, fb = b.data()[i] >= t;
        inter += fa && fb;
        uni += fa || fb;
    }
    return {inter, uni};
}

} // namespace

TEST(Iou, IdentityDisjointAndEmpty) {
    const Tensor a = oracle::blob_mask(32, 32, 3);
    EXPECT_EQ(iou(a, a).iou, 1.0);
    const Tensor left = mask_from(1, 4, {1, 1, 0, 0});
    const Tensor right = mask_from(1, 4, {0, 0, 1, 1});
    EXPECT_EQ(iou(left, right).iou, 0.0);
    const IouResult e = iou(Tensor({3, 3, 1}), Tensor({3, 3, 1}));
    EXPECT_EQ(e.iou, 1.0);
    EXPECT_EQ(e.union_count, 0u);
}

TEST(Iou, LeftHalfAgainstTopHalf) {
    Tensor left({4, 4, 1}), top({4, 4, 1});
    for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 4; ++x) {
            left.at(y, x, 0) = x < 2 ? 1.0f : 0.0f;
            top.at(y, x, 0) = y < 2 ? 1.0f : 0.0f;
        }
    const IouResult r = iou(left, top);
    EXPECT_EQ(r.intersection, 4u);
    EXPECT_EQ(r.union_count, 12u);
    EXPECT_EQ(r.iou, 1.0 / 3.0);
}

TEST(Iou, ThresholdIsInclusiveAndAdjustable) {
    const Tensor a = mask_from(1, 3, {0, 0, 0});
    Tensor b = a;
    b.data()[0] = 0.5f;
    EXPECT_EQ(iou(b, b).union_count, 1u);
    EXPECT_EQ(iou(b, b, 0.6).union_count, 0u);
    EXPECT_EQ(iou(a, b).iou, 0.0);
}

TEST(Iou, ErrorsOnBadInput) {
    EXPECT_THROW(iou(Tensor({2, 2, 1}), Tensor({2, 3, 1})), ShapeError);
    EXPECT_THROW(iou(Tensor({2, 2, 3}), Tensor({2, 2, 3})), ShapeError);
}

TEST(Iou, RandomPairsAgreeWithBruteForceAndProperties) {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t h = 1 + rng() % 12, w = 1 + rng() % 12;
        const Tensor a = oracle::random_tensor({h, w, 1}, rng, 0, 1);
        const Tensor b = oracle::random_tensor({h, w, 1}, rng, 0, 1);
        const IouResult ab = iou(a, b), ba = iou(b, a);
        const auto [inter, uni] = brute_counts(a, b, 0.5f);
        EXPECT_EQ(ab.intersection, inter);
        EXPECT_EQ(ab.union_count, uni);
        EXPECT_EQ(ab.iou, ba.iou);
        EXPECT_GE(ab.iou, 0.0);
        EXPECT_LE(ab.iou, 1.0);
        EXPECT_LE(ab.intersection, ab.union_count);
        std::vector<std::size_t> perm(h * w);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        EXPECT_EQ(iou(permuted(a, perm), permuted(b, perm)).iou, ab.iou);
    }
}

TEST(TemporalStability, SpecifiedSequences) {
    const Tensor a = mask_from(1, 4, {1, 1, 0, 0});
    const Tensor b = mask_from(1, 4, {0, 0, 1, 1});
    const std::vector<Tensor> constant(5, a);
    EXPECT_EQ(temporal_stability(constant), 1.0);
    const std::vector<Tensor> alternating{a, b, a, b};
    EXPECT_EQ(temporal_stability(alternating), 0.0);

    Tensor q0({1, 20, 1}), q1({1, 20, 1}), q2({1, 20, 1});
    for (int i = 0; i < 10; ++i) q0.data()[std::size_t(i)] = 1;   // 10 px
    for (int i = 0; i < 20; ++i) q1.data()[std::size_t(i)] = 1;   // 20 px: 10/20 = 0.5
    for (int i = 0; i < 14; ++i) q2.data()[std::size_t(i)] = 1;   // 14 px: 14/20 = 0.7
    const IouResult r01 = iou(q0, q1), r12 = iou(q1, q2);
    ASSERT_EQ(r01.iou, 0.5);
    ASSERT_EQ(r12.iou, 0.7);
    const std::vector<Tensor> seq{q0, q1, q2};
    EXPECT_NEAR(temporal_stability(seq), 0.6, 1e-15);
}

TEST(TemporalStability, NeedsTwoMasks) {
    const std::vector<Tensor> one{Tensor({2, 2, 1})};
    EXPECT_THROW(temporal_stability(one), ValueError);
    const std::vector<Tensor> mixed{Tensor({2, 2, 1}), Tensor({2, 3, 1})};
    EXPECT_THROW(temporal_stability(mixed), ShapeError);
}
