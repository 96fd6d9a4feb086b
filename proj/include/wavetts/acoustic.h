#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wavetts/corpus.h"
#include "wavetts/sru.h"
#include "wavetts/tensor.h"

namespace wavetts::nets {

// Acoustic model: input projection over [linguistic || speaker_code], a
// stack of bidirectional SRU layers (both direction outputs concatenated),
// and a linear head to 80 mel channels.
struct GeneratorParams {
    Tensor w_in, b_in;  // [hidden x 388], [1 x hidden]
    struct BiLayer {
        SruDirParams fwd;
        SruDirParams bwd;
    };
    std::vector<BiLayer> layers;
    Tensor w_out, b_out;  // [80 x 2*hidden], [1 x 80]

    size_t hidden() const { return w_in.shape()[0]; }
};

GeneratorParams make_generator(size_t hidden, size_t n_layers, RngStream& rng);

Tensor generator_forward(const corpus::ConditioningBundle& bundle, const GeneratorParams& p);

void generator_visit(GeneratorParams& p,
                     const std::function<void(const std::string&, Tensor&)>& fn);

enum class AdvMode { kGan, kWganGp };

// Speaker-conditioned critic: the speaker code is concatenated at the input
// and at every hidden layer; per-frame scalar scores are mean-pooled into
// one utterance score. GAN mode applies a sigmoid to yield a probability;
// WGAN-GP mode returns the raw score (no output nonlinearity).
struct CriticParams {
    std::vector<Tensor> w;  // 3 hidden layers
    std::vector<Tensor> b;
    Tensor w_out, b_out;  // [1 x (width+7)], [1 x 1]

    size_t width() const { return w.empty() ? 0 : w[0].shape()[0]; }
};

CriticParams make_critic(size_t width, RngStream& rng);

Tensor critic_forward(const Tensor& features, const Tensor& speaker_code,
                      const CriticParams& p, AdvMode mode);

void critic_visit(CriticParams& p, const std::function<void(const std::string&, Tensor&)>& fn);

}  // namespace wavetts::nets
