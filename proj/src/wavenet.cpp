#include "wavetts/wavenet.h"

#include <algorithm>
#include <cmath>

#include "wavetts/error.h"
#include "wavetts/ops.h"

namespace wavetts::vocoder {

namespace op = wavetts::ops;

size_t WaveNetConfig::receptive_field() const {
    size_t rf = 1;
    for (size_t k = 0; k < blocks; ++k) rf += (kernel_width - 1) * dilation(k);
    return rf;
}

void WaveNetConfig::validate() const {
    if (blocks == 0 || residual_channels == 0 || skip_channels == 0 || mixtures == 0) {
        throw ConfigError("wavenet: zero-sized architecture");
    }
    if (zeta != 256 && zeta != 65536) {
        throw ConfigError("wavenet: zeta must be 256 (8-bit) or 65536 (16-bit), got " +
                          std::to_string(zeta));
    }
    size_t prod = 1;
    for (size_t s : upsample_strides) prod *= s;
    if (prod != dsp::kHop) {
        std::string strides;
        for (size_t s : upsample_strides) strides += std::to_string(s) + ",";
        throw ConfigError("wavenet: upsample strides (" + strides +
                          ") multiply to " + std::to_string(prod) + ", expected hop " +
                          std::to_string(dsp::kHop));
    }
}

WaveNetParams make_wavenet(const WaveNetConfig& cfg, RngStream& rng) {
    cfg.validate();
    WaveNetParams p;
    p.cfg = cfg;
    const size_t r = cfg.residual_channels, s = cfg.skip_channels, kw = cfg.kernel_width;
    const size_t c = r;  // gate width equals residual width
    const size_t e = cfg.embed_dim;
    const size_t k3 = 3 * cfg.mixtures;

    p.input_w = Tensor::glorot({r, 1}, 1, r, rng);
    p.input_b = Tensor::zeros({r, 1});
    for (size_t blk = 0; blk < cfg.blocks; ++blk) {
        WaveNetBlock b;
        b.conv_f = Tensor::glorot({c, r, kw}, r * kw, c * kw, rng);
        b.conv_g = Tensor::glorot({c, r, kw}, r * kw, c * kw, rng);
        b.local_f = Tensor::glorot({c, dsp::kMelChannels}, dsp::kMelChannels, c, rng);
        b.local_g = Tensor::glorot({c, dsp::kMelChannels}, dsp::kMelChannels, c, rng);
        b.global_f = Tensor::glorot({c, e}, e, c, rng);
        b.global_g = Tensor::glorot({c, e}, e, c, rng);
        b.bias_f = Tensor::zeros({c, 1});
        b.bias_g = Tensor::zeros({c, 1});
        b.res_w = Tensor::glorot({r, c}, c, r, rng);
        b.res_b = Tensor::zeros({r, 1});
        b.skip_w = Tensor::glorot({s, c}, c, s, rng);
        b.skip_b = Tensor::zeros({s, 1});
        p.blocks.push_back(std::move(b));
    }
    p.head_w1 = Tensor::glorot({s, s}, s, s, rng);
    p.head_b1 = Tensor::zeros({s, 1});
    p.head_w2 = Tensor::glorot({k3, s}, s, k3, rng);
    p.head_b2 = Tensor::zeros({k3, 1});
    p.speaker_embed = Tensor::glorot({e, 7}, 7, e, rng);
    for (size_t l = 0; l < cfg.upsample_strides.size(); ++l) {
        const size_t ukw = 2 * cfg.upsample_strides[l];
        p.upsample.push_back(Tensor::glorot({dsp::kMelChannels, dsp::kMelChannels, ukw},
                                            dsp::kMelChannels * ukw,
                                            dsp::kMelChannels * ukw, rng));
    }
    return p;
}

void wavenet_visit(WaveNetParams& p,
                   const std::function<void(const std::string&, Tensor&)>& fn) {
    fn("w.input_w", p.input_w);
    fn("w.input_b", p.input_b);
    for (size_t i = 0; i < p.blocks.size(); ++i) {
        auto& b = p.blocks[i];
        const std::string pre = "w.b" + std::to_string(i);
        fn(pre + ".conv_f", b.conv_f);
        fn(pre + ".conv_g", b.conv_g);
        fn(pre + ".local_f", b.local_f);
        fn(pre + ".local_g", b.local_g);
        fn(pre + ".global_f", b.global_f);
        fn(pre + ".global_g", b.global_g);
        fn(pre + ".bias_f", b.bias_f);
        fn(pre + ".bias_g", b.bias_g);
        fn(pre + ".res_w", b.res_w);
        fn(pre + ".res_b", b.res_b);
        fn(pre + ".skip_w", b.skip_w);
        fn(pre + ".skip_b", b.skip_b);
    }
    fn("w.head_w1", p.head_w1);
    fn("w.head_b1", p.head_b1);
    fn("w.head_w2", p.head_w2);
    fn("w.head_b2", p.head_b2);
    fn("w.speaker_embed", p.speaker_embed);
    for (size_t i = 0; i < p.upsample.size(); ++i) {
        fn("w.up" + std::to_string(i), p.upsample[i]);
    }
}

Tensor upsample(const Tensor& mel, const WaveNetParams& p) {
    if (mel.shape().size() != 2 || mel.cols() != dsp::kMelChannels) {
        throw DimensionError("upsample: expected [T x 80] mel, got " + shape_str(mel.shape()));
    }
    Tensor cond = op::transpose(mel);  // [80 x T]
    for (size_t l = 0; l < p.upsample.size(); ++l) {
        cond = op::conv1d_transposed(cond, p.upsample[l], p.cfg.upsample_strides[l]);
    }
    return cond;
}

std::pair<Tensor, Tensor> gated_block(const Tensor& state, const Tensor& cond_local,
                                      const Tensor& cond_global, const WaveNetBlock& block,
                                      size_t dilation) {
    if (state.shape()[1] != cond_local.shape()[1]) {
        throw DimensionError("gated_block: state length " + shape_str(state.shape()) +
                             " vs local condition " + shape_str(cond_local.shape()));
    }
    Tensor pre_f = op::add(
        op::add(op::conv1d_causal(state, block.conv_f, dilation),
                op::matmul(block.local_f, cond_local)),
        op::add(op::matmul(block.global_f, cond_global), block.bias_f));
    Tensor pre_g = op::add(
        op::add(op::conv1d_causal(state, block.conv_g, dilation),
                op::matmul(block.local_g, cond_local)),
        op::add(op::matmul(block.global_g, cond_global), block.bias_g));
    Tensor h = op::mul(op::sigmoid(pre_g), op::tanh_(pre_f));
    Tensor residual_out = op::add(state, op::add(op::matmul(block.res_w, h), block.res_b));
    Tensor skip_out = op::add(op::matmul(block.skip_w, h), block.skip_b);
    return {residual_out, skip_out};
}

double class_to_input(uint32_t cls, size_t zeta) {
    return 2.0 * static_cast<double>(cls) / static_cast<double>(zeta - 1) - 1.0;
}

std::vector<uint32_t> waveform_to_classes(const Waveform& w, size_t zeta) {
    std::vector<uint32_t> classes(w.samples.size());
    for (size_t i = 0; i < classes.size(); ++i) {
        const uint32_t u = static_cast<uint32_t>(static_cast<int32_t>(w.samples[i]) + 32768);
        classes[i] = zeta == 65536 ? u : (u >> 8);
    }
    return classes;
}

Waveform classes_to_waveform(const std::vector<uint32_t>& classes, size_t zeta) {
    Waveform w;
    w.samples.resize(classes.size());
    for (size_t i = 0; i < classes.size(); ++i) {
        // 8-bit classes are upscaled by x256 on write.
        const int32_t v = zeta == 65536 ? static_cast<int32_t>(classes[i]) - 32768
                                        : static_cast<int32_t>(classes[i]) * 256 - 32768;
        w.samples[i] = static_cast<int16_t>(v);
    }
    return w;
}

namespace {

Tensor global_embedding(const Tensor& speaker_code, const WaveNetParams& p) {
    return op::matmul(p.speaker_embed, op::transpose(speaker_code));  // [E x 1]
}

}  // namespace

Tensor wavenet_teacher_forced(const std::vector<uint32_t>& classes, const Tensor& cond,
                              const Tensor& speaker_code, const WaveNetParams& p) {
    const size_t n = classes.size();
    if (cond.shape().size() != 2 || cond.shape()[0] != dsp::kMelChannels ||
        cond.shape()[1] != n) {
        throw DimensionError("wavenet_teacher_forced: conditioning " +
                             shape_str(cond.shape()) + " vs " + std::to_string(n) +
                             " samples");
    }
    // Input shifted right by one sample: position t sees classes[< t] only.
    std::vector<double> x(n);
    x[0] = 0.0;
    for (size_t t = 1; t < n; ++t) x[t] = class_to_input(classes[t - 1], p.cfg.zeta);
    Tensor input = Tensor::from_vector({1, n}, std::move(x));

    Tensor state = op::add(op::matmul(p.input_w, input), p.input_b);
    Tensor embed = global_embedding(speaker_code, p);
    Tensor skip_sum;
    for (size_t blk = 0; blk < p.blocks.size(); ++blk) {
        auto [res, skip] = gated_block(state, cond, embed, p.blocks[blk], p.cfg.dilation(blk));
        state = res;
        skip_sum = blk == 0 ? skip : op::add(skip_sum, skip);
    }
    Tensor h = op::relu(skip_sum);
    h = op::relu(op::add(op::matmul(p.head_w1, h), p.head_b1));
    Tensor head = op::add(op::matmul(p.head_w2, h), p.head_b2);  // [3K x N]
    return op::transpose(head);
}

namespace {

// Per-block ring buffer of past block inputs for incremental generation.
struct BlockState {
    std::vector<double> ring;  // [capacity x R]
    size_t capacity = 1;
};

}  // namespace

Waveform wavenet_generate(const Tensor& mel, const Tensor& speaker_code,
                          const WaveNetParams& p, RngStream& rng,
                          std::vector<DmlParams>* trace_params) {
    NoGradGuard ng;
    const WaveNetConfig& cfg = p.cfg;
    const size_t r = cfg.residual_channels, s = cfg.skip_channels, kw = cfg.kernel_width;
    const size_t k = cfg.mixtures;
    Tensor cond = upsample(mel, p);
    const size_t n = cond.shape()[1];
    auto cond_data = cond.data();

    // Per-block constants: global conditioning folded into the gate biases.
    Tensor embed = global_embedding(speaker_code, p);
    std::vector<std::vector<double>> gf(cfg.blocks), gg(cfg.blocks);
    for (size_t blk = 0; blk < cfg.blocks; ++blk) {
        Tensor f = op::add(op::matmul(p.blocks[blk].global_f, embed), p.blocks[blk].bias_f);
        Tensor g = op::add(op::matmul(p.blocks[blk].global_g, embed), p.blocks[blk].bias_g);
        gf[blk].assign(f.data().begin(), f.data().end());
        gg[blk].assign(g.data().begin(), g.data().end());
    }

    std::vector<BlockState> rings(cfg.blocks);
    for (size_t blk = 0; blk < cfg.blocks; ++blk) {
        rings[blk].capacity = std::max<size_t>(1, (kw - 1) * cfg.dilation(blk) + 1);
        rings[blk].ring.assign(rings[blk].capacity * r, 0.0);
    }

    std::vector<uint32_t> out_classes(n);
    std::vector<double> state(r), block_in(r), h(r), skip_acc(s), head1(s), head_row(3 * k);
    auto iw = p.input_w.data();
    auto ib = p.input_b.data();
    double x_prev = 0.0;

    for (size_t t = 0; t < n; ++t) {
        for (size_t i = 0; i < r; ++i) state[i] = iw[i] * x_prev + ib[i];
        std::fill(skip_acc.begin(), skip_acc.end(), 0.0);
        const double* cond_col_base = cond_data.data();

        for (size_t blk = 0; blk < cfg.blocks; ++blk) {
            const WaveNetBlock& b = p.blocks[blk];
            BlockState& ring = rings[blk];
            const size_t dil = cfg.dilation(blk);
            // Record this block's input at time t.
            std::copy(state.begin(), state.end(),
                      ring.ring.begin() + (t % ring.capacity) * r);
            block_in = state;

            auto wf = b.conv_f.data();
            auto wg = b.conv_g.data();
            auto lf = b.local_f.data();
            auto lg = b.local_g.data();
            for (size_t o = 0; o < r; ++o) {
                double accf = gf[blk][o];
                double accg = gg[blk][o];
                for (size_t kk = 0; kk < kw; ++kk) {
                    const size_t back = (kw - 1 - kk) * dil;
                    if (back > t) continue;
                    const double* src =
                        back == 0 ? block_in.data()
                                  : ring.ring.data() + ((t - back) % ring.capacity) * r;
                    const double* wrow_f = wf.data() + o * r * kw;
                    const double* wrow_g = wg.data() + o * r * kw;
                    for (size_t ci = 0; ci < r; ++ci) {
                        accf += wrow_f[ci * kw + kk] * src[ci];
                        accg += wrow_g[ci * kw + kk] * src[ci];
                    }
                }
                const double* lrow_f = lf.data() + o * dsp::kMelChannels;
                const double* lrow_g = lg.data() + o * dsp::kMelChannels;
                for (size_t c = 0; c < dsp::kMelChannels; ++c) {
                    const double cv = cond_col_base[c * n + t];
                    accf += lrow_f[c] * cv;
                    accg += lrow_g[c] * cv;
                }
                h[o] = (1.0 / (1.0 + std::exp(-accg))) * std::tanh(accf);
            }
            auto rw = b.res_w.data();
            auto rb = b.res_b.data();
            auto sw = b.skip_w.data();
            auto sb = b.skip_b.data();
            for (size_t o = 0; o < r; ++o) {
                double acc = rb[o];
                const double* row = rw.data() + o * r;
                for (size_t ci = 0; ci < r; ++ci) acc += row[ci] * h[ci];
                state[o] = block_in[o] + acc;
            }
            for (size_t o = 0; o < s; ++o) {
                double acc = sb[o];
                const double* row = sw.data() + o * r;
                for (size_t ci = 0; ci < r; ++ci) acc += row[ci] * h[ci];
                skip_acc[o] += acc;
            }
        }

        auto h1w = p.head_w1.data();
        auto h1b = p.head_b1.data();
        for (size_t o = 0; o < s; ++o) {
            double acc = h1b[o];
            const double* row = h1w.data() + o * s;
            for (size_t ci = 0; ci < s; ++ci) {
                acc += row[ci] * std::max(skip_acc[ci], 0.0);
            }
            head1[o] = std::max(acc, 0.0);
        }
        auto h2w = p.head_w2.data();
        auto h2b = p.head_b2.data();
        for (size_t o = 0; o < 3 * k; ++o) {
            double acc = h2b[o];
            const double* row = h2w.data() + o * s;
            for (size_t ci = 0; ci < s; ++ci) acc += row[ci] * head1[ci];
            head_row[o] = acc;
        }

        DmlParams params = decode_head_row(head_row.data(), k, cfg.zeta);
        if (trace_params) trace_params->push_back(params);
        const uint32_t cls = static_cast<uint32_t>(dml_sample(params, cfg.zeta, rng));
        out_classes[t] = cls;
        x_prev = class_to_input(cls, cfg.zeta);
    }
    return classes_to_waveform(out_classes, cfg.zeta);
}

}  // namespace wavetts::vocoder
