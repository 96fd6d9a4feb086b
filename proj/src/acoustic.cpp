#include "wavetts/acoustic.h"

namespace wavetts::nets {

namespace op = wavetts::ops;

GeneratorParams make_generator(size_t hidden, size_t n_layers, RngStream& rng) {
    GeneratorParams p;
    const size_t in_dim = corpus::kLinguisticDims + corpus::kSpeakerCodeDims;
    p.w_in = Tensor::glorot({hidden, in_dim}, in_dim, hidden, rng);
    p.b_in = Tensor::zeros({1, hidden});
    for (size_t l = 0; l < n_layers; ++l) {
        const size_t layer_in = l == 0 ? hidden : 2 * hidden;
        GeneratorParams::BiLayer bl;
        bl.fwd = make_sru_dir_params(layer_in, hidden, rng);
        bl.bwd = make_sru_dir_params(layer_in, hidden, rng);
        p.layers.push_back(std::move(bl));
    }
    p.w_out = Tensor::glorot({dsp::kMelChannels, 2 * hidden}, 2 * hidden, dsp::kMelChannels, rng);
    p.b_out = Tensor::zeros({1, dsp::kMelChannels});
    return p;
}

Tensor generator_forward(const corpus::ConditioningBundle& bundle, const GeneratorParams& p) {
    const Tensor& ling = bundle.linguistic;
    if (ling.shape().size() != 2 || ling.cols() != corpus::kLinguisticDims) {
        throw DimensionError("generator_forward: linguistic features " +
                             shape_str(ling.shape()));
    }
    const size_t t = ling.rows();
    Tensor spk = op::broadcast_rows(bundle.speaker_code, t);
    Tensor x = op::concat_cols({ling, spk});
    Tensor h = op::add(op::matmul(x, op::transpose(p.w_in)), op::broadcast_rows(p.b_in, t));
    for (const auto& layer : p.layers) {
        Tensor fwd = sru_layer(h, layer.fwd, Direction::kForward);
        Tensor bwd = sru_layer(h, layer.bwd, Direction::kBackward);
        h = op::concat_cols({fwd, bwd});
    }
    return op::add(op::matmul(h, op::transpose(p.w_out)), op::broadcast_rows(p.b_out, t));
}

void generator_visit(GeneratorParams& p,
                     const std::function<void(const std::string&, Tensor&)>& fn) {
    fn("g.w_in", p.w_in);
    fn("g.b_in", p.b_in);
    for (size_t l = 0; l < p.layers.size(); ++l) {
        sru_dir_visit(p.layers[l].fwd, "g.l" + std::to_string(l) + ".fwd", fn);
        sru_dir_visit(p.layers[l].bwd, "g.l" + std::to_string(l) + ".bwd", fn);
    }
    fn("g.w_out", p.w_out);
    fn("g.b_out", p.b_out);
}

CriticParams make_critic(size_t width, RngStream& rng) {
    CriticParams p;
    size_t in_dim = dsp::kMelChannels + corpus::kSpeakerCodeDims;
    for (size_t l = 0; l < 3; ++l) {
        p.w.push_back(Tensor::glorot({width, in_dim}, in_dim, width, rng));
        p.b.push_back(Tensor::zeros({1, width}));
        in_dim = width + corpus::kSpeakerCodeDims;
    }
    p.w_out = Tensor::glorot({1, in_dim}, in_dim, 1, rng);
    p.b_out = Tensor::zeros({1, 1});
    return p;
}

Tensor critic_forward(const Tensor& features, const Tensor& speaker_code,
                      const CriticParams& p, AdvMode mode) {
    if (features.shape().size() != 2 || features.cols() != dsp::kMelChannels) {
        throw DimensionError("critic_forward: features " + shape_str(features.shape()));
    }
    const size_t t = features.rows();
    Tensor spk = op::broadcast_rows(speaker_code, t);
    Tensor h = features;
    for (size_t l = 0; l < p.w.size(); ++l) {
        Tensor z = op::concat_cols({h, spk});
        h = op::relu(op::add(op::matmul(z, op::transpose(p.w[l])),
                             op::broadcast_rows(p.b[l], t)));
    }
    Tensor z = op::concat_cols({h, spk});
    Tensor frame_scores = op::add(op::matmul(z, op::transpose(p.w_out)),
                                  op::broadcast_rows(p.b_out, t));
    Tensor score = op::mean_all(frame_scores);
    return mode == AdvMode::kGan ? op::sigmoid(score) : score;
}

void critic_visit(CriticParams& p, const std::function<void(const std::string&, Tensor&)>& fn) {
    for (size_t l = 0; l < p.w.size(); ++l) {
        fn("d.w" + std::to_string(l), p.w[l]);
        fn("d.b" + std::to_string(l), p.b[l]);
    }
    fn("d.w_out", p.w_out);
    fn("d.b_out", p.b_out);
}

}  // namespace wavetts::nets
