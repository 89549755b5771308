#include "hairseg/metrics.hpp"

namespace hairseg {

IouResult iou(const Tensor& a, const Tensor& b, double threshold) {
    if (a.shape() != b.shape() || a.channels() != 1) {
        throw ShapeError("iou: masks must be equal-sized single-channel tensors, got " + to_string(a.shape()) + " and " +
                         to_string(b.shape()));
    }
    IouResult r;
    const auto da = a.data();
    const auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) {
        const bool fa = da[i] >= threshold;
        const bool fb = db[i] >= threshold;
        r.intersection += fa && fb;
        r.union_count += fa || fb;
    }
    r.iou = r.union_count == 0 ? 1.0
                               : static_cast<double>(r.intersection) / static_cast<double>(r.union_count);
    return r;
}

double temporal_stability(std::span<const Tensor> masks, double threshold) {
    if (masks.size() < 2) throw ValueError("temporal_stability: needs at least 2 masks");
    double sum = 0.0;
    for (std::size_t t = 0; t + 1 < masks.size(); ++t) sum += iou(masks[t], masks[t + 1], threshold).iou;
    return sum / static_cast<double>(masks.size() - 1);
}

} // namespace hairseg
