#pragma once

#include <cstdint>
#include <vector>

#include "wavetts/rng.h"
#include "wavetts/tensor.h"

namespace wavetts::vocoder {

// Discretized mixture of logistics over integer classes s in [0, zeta-1].
//
// The mixture CDF is evaluated on a lattice with spacing 2 between adjacent
// classes and bin edges halfway between lattice points, i.e. the probability
// of class s is
//
//   P(s) = sum_i pi_i [ sigma((2(s - mu_i) + 1) / (phi_i * zeta))
//                     - sigma((2(s - mu_i) - 1) / (phi_i * zeta)) ]
//
// with the lower edge replaced by -inf at s = 0 and the upper edge by +inf
// at s = zeta-1, so consecutive bins share edges and the total mass
// telescopes to exactly 1. Equivalently: half-integer bin edges in class
// units with logistic scale phi*zeta/2, which is also the scale used when
// sampling. mu is expressed in class units.
struct DmlParams {
    std::vector<double> logit_pi;  // K mixture weight logits
    std::vector<double> mu;        // K means, class units
    std::vector<double> log_phi;   // K log-scales

    size_t components() const { return logit_pi.size(); }
    // Normalized mixture weights (softmax of the logits).
    std::vector<double> weights() const;
    // Validates K >= 1 and phi > 0 when constructed from raw scales.
    static DmlParams from_scales(std::vector<double> logit_pi, std::vector<double> mu,
                                 std::vector<double> phi);
};

// log P(s); s out of range or invalid params raise DomainError.
double dml_logprob(size_t s, const DmlParams& p, size_t zeta);

// Inverse-CDF sampling: component by pi, then
// v = mu + (phi*zeta/2) * log(u / (1-u)), rounded and clamped to the class
// range (the scale convention matching the CDF above).
size_t dml_sample(const DmlParams& p, size_t zeta, RngStream& rng);

// Head-output decoding shared by the taped loss and the sampler:
//   row = [logit_pi(K) | mu_raw(K) | logphi_raw(K)]
//   mu      = (zeta-1)/2 * (1 + mu_raw)
//   log_phi = max(logphi_raw + log(0.5), kLogPhiFloor)
constexpr double kLogPhiFloor = -7.0;
constexpr double kLogPhiOffset = -0.6931471805599453;  // log 0.5

DmlParams decode_head_row(const double* row, size_t k, size_t zeta);

// Taped negative mean log-likelihood over the selected positions.
// head: [N x 3K]; classes: N target classes; selected: 0/1 per position.
// Throws on empty selection.
Tensor dml_nll(const Tensor& head, const std::vector<uint32_t>& classes,
               const std::vector<uint8_t>& selected, size_t zeta);

// Per-frame random half selection: ceil(hop/2) positions per frame, sampled
// without replacement from a dedicated stream.
std::vector<uint8_t> select_half_per_frame(size_t n_samples, size_t hop, RngStream& rng);

}  // namespace wavetts::vocoder
