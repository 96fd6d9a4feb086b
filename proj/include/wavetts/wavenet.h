#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wavetts/dml.h"
#include "wavetts/dsp.h"
#include "wavetts/tensor.h"
#include "wavetts/wav_io.h"

namespace wavetts::vocoder {

struct WaveNetConfig {
    size_t blocks = 12;
    size_t residual_channels = 64;
    size_t skip_channels = 64;
    size_t kernel_width = 2;
    size_t dilation_cycle = 6;  // dilation of block k is 2^(k mod cycle)
    size_t mixtures = 10;
    size_t zeta = 256;  // 256 (8-bit) or 65536 (16-bit)
    size_t embed_dim = 16;
    std::vector<size_t> upsample_strides = {4, 4, 5};  // product must equal hop

    size_t dilation(size_t block) const { return size_t{1} << (block % dilation_cycle); }
    size_t receptive_field() const;
    void validate() const;
};

// One residual block: dilated causal convs for filter/gate, 1x1 local
// conditioning projections, global conditioning projections, and 1x1
// residual/skip projections.
struct WaveNetBlock {
    Tensor conv_f, conv_g;      // [C x R x KW] dilated causal
    Tensor local_f, local_g;    // [C x 80] (1x1 conv over the upsampled mel)
    Tensor global_f, global_g;  // [C x E]
    Tensor bias_f, bias_g;      // [C x 1]
    Tensor res_w, res_b;        // [R x C], [R x 1]
    Tensor skip_w, skip_b;      // [S x C], [S x 1]
};

struct WaveNetParams {
    WaveNetConfig cfg;
    Tensor input_w, input_b;  // [R x 1], [R x 1] causal sample embedding
    std::vector<WaveNetBlock> blocks;
    Tensor head_w1, head_b1;  // [S x S], [S x 1]
    Tensor head_w2, head_b2;  // [3K x S], [3K x 1]
    Tensor speaker_embed;     // [E x 7]
    std::vector<Tensor> upsample;  // per layer [80 x 80 x 2*stride]
};

WaveNetParams make_wavenet(const WaveNetConfig& cfg, RngStream& rng);

void wavenet_visit(WaveNetParams& p,
                   const std::function<void(const std::string&, Tensor&)>& fn);

// Mel [T x 80] -> conditioning [80 x T*hop] through the transposed-conv
// stack; differentiable back to the mel input.
Tensor upsample(const Tensor& mel, const WaveNetParams& p);

// One gated residual block over [R x T] state.
std::pair<Tensor, Tensor> gated_block(const Tensor& state, const Tensor& cond_local,
                                      const Tensor& cond_global, const WaveNetBlock& block,
                                      size_t dilation);

// Teacher forcing: classes[0..N-1] are the targets; the network input at
// position t is the previous class (zero history at t=0), so position t
// never sees classes[t]. cond is the upsampled mel [80 x N].
// Returns the DML head output [N x 3K].
Tensor wavenet_teacher_forced(const std::vector<uint32_t>& classes, const Tensor& cond,
                              const Tensor& speaker_code, const WaveNetParams& p);

// Waveform <-> class conversions for the configured bit depth.
std::vector<uint32_t> waveform_to_classes(const Waveform& w, size_t zeta);
Waveform classes_to_waveform(const std::vector<uint32_t>& classes, size_t zeta);
double class_to_input(uint32_t cls, size_t zeta);

// Autoregressive generation with per-block ring buffers (no tape).
// `trace_head` optionally receives the decoded head row per step, letting
// tests cross-check the fast path against the teacher-forced graph.
Waveform wavenet_generate(const Tensor& mel, const Tensor& speaker_code,
                          const WaveNetParams& p, RngStream& rng,
                          std::vector<DmlParams>* trace_params = nullptr);

}  // namespace wavetts::vocoder
