#pragma once

#include "hairseg/tensor.hpp"

#include <cstddef>
#include <span>

namespace hairseg {

struct IouResult {
    double iou = 1.0;
    std::size_t intersection = 0;
    std::size_t union_count = 0;
};

/// Binarizes both masks at `threshold` (>= is foreground). Two empty
/// foregrounds agree perfectly and score 1.
IouResult iou(const Tensor& a, const Tensor& b, double threshold = 0.5);

/// Mean IOU over consecutive mask pairs; needs at least two masks.
double temporal_stability(std::span<const Tensor> masks, double threshold = 0.5);

} // namespace hairseg
