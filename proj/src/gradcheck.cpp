#include "wavetts/gradcheck.h"

#include <algorithm>
#include <cmath>

namespace wavetts {

GradCheckResult gradcheck(const std::function<Tensor()>& f, std::vector<Tensor> leaves,
                          double step, size_t max_coords_per_leaf, RngStream* coord_rng) {
    for (auto& l : leaves) {
        l.set_requires_grad(true);
        l.zero_grad();
    }
    Tensor loss = f();
    backward(loss);

    GradCheckResult result;
    for (auto& leaf : leaves) {
        Tensor g = leaf.grad();
        if (!g.defined()) g = Tensor::zeros(leaf.shape());

        std::vector<size_t> coords;
        const size_t n = leaf.numel();
        if (max_coords_per_leaf == 0 || max_coords_per_leaf >= n) {
            coords.resize(n);
            for (size_t i = 0; i < n; ++i) coords[i] = i;
        } else {
            for (size_t i = 0; i < max_coords_per_leaf; ++i) {
                coords.push_back(coord_rng ? static_cast<size_t>(coord_rng->below(n))
                                           : (i * n) / max_coords_per_leaf);
            }
        }

        auto vals = leaf.mutable_data();
        for (size_t idx : coords) {
            const double saved = vals[idx];
            vals[idx] = saved + step;
            const double fp = f().item();
            vals[idx] = saved - step;
            const double fm = f().item();
            vals[idx] = saved;
            const double numeric = (fp - fm) / (2.0 * step);
            const double analytic = g.data()[idx];
            const double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
            result.max_error = std::max(result.max_error, std::fabs(analytic - numeric) / denom);
            ++result.checked;
        }
    }
    return result;
}

}  // namespace wavetts
