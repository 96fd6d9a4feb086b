#pragma once

#include <functional>
#include <vector>

#include "wavetts/tensor.h"

namespace wavetts {

// Central finite-difference comparison for reverse-mode gradients.
//
// `f` rebuilds the scalar loss from scratch on every call (the probe mutates
// leaf data in place between calls). The reported measure is the worst
// |analytic - numeric| / max(1, |analytic|, |numeric|) over the probed
// coordinates, so it reads as a relative error for O(1) gradients and
// degrades to an absolute error where finite differences lose resolution.
struct GradCheckResult {
    double max_error = 0.0;
    size_t checked = 0;
};

// Checks d f / d leaf for every coordinate (or a sampled subset when
// max_coords_per_leaf > 0) of every listed leaf.
GradCheckResult gradcheck(const std::function<Tensor()>& f, std::vector<Tensor> leaves,
                          double step = 1e-5, size_t max_coords_per_leaf = 0,
                          RngStream* coord_rng = nullptr);

}  // namespace wavetts
