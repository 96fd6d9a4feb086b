#include "wavetts/losses.h"

#include <cmath>

#include "wavetts/ops.h"

namespace wavetts::train {

namespace op = wavetts::ops;
using nets::AdvMode;

Tensor loss_mse(const Tensor& y, const Tensor& y_hat) {
    if (y.shape() != y_hat.shape()) {
        throw DimensionError("loss_mse: shape mismatch " + shape_str(y.shape()) + " vs " +
                             shape_str(y_hat.shape()));
    }
    Tensor d = op::sub(y_hat, y);
    return op::mean_all(op::mul(d, d));
}

Tensor interpolate_samples(const Tensor& y, const Tensor& y_hat, double epsilon) {
    if (y.shape() != y_hat.shape()) {
        throw DimensionError("interpolate_samples: shape mismatch " + shape_str(y.shape()) +
                             " vs " + shape_str(y_hat.shape()));
    }
    std::vector<double> mix(y.numel());
    auto dy = y.data();
    auto dh = y_hat.data();
    for (size_t i = 0; i < mix.size(); ++i) {
        mix[i] = epsilon * dy[i] + (1.0 - epsilon) * dh[i];
    }
    Tensor y_tilde = Tensor::from_vector(y.shape(), std::move(mix));
    y_tilde.set_requires_grad(true);
    return y_tilde;
}

Tensor gradient_penalty(const Tensor& y_tilde, const Tensor& speaker_code,
                        const nets::CriticParams& critic, double lambda,
                        double* grad_norm_out) {
    Tensor score = nets::critic_forward(y_tilde, speaker_code, critic, AdvMode::kWganGp);
    Tensor g = grad(score, {y_tilde}, /*create_graph=*/true)[0];
    // 1e-24 is below one ulp of any squared norm larger than ~1e-16, so live
    // gradients are unaffected bit-for-bit (and the closed-form penalty
    // values stay exact); it only desingularizes sqrt when the critic's
    // input gradient vanishes, keeping the pull back toward norm 1 defined.
    Tensor norm = op::sqrt_(op::add_scalar(op::sum_all(op::mul(g, g)), 1e-24));
    if (grad_norm_out) *grad_norm_out = norm.item();
    Tensor shifted = op::add_scalar(norm, -1.0);
    return op::mul_scalar(op::mul(shifted, shifted), lambda);
}

CriticLossParts critic_loss_wgan_gp(const Tensor& y, const Tensor& y_hat_detached,
                                    const Tensor& speaker_code, const nets::CriticParams& critic,
                                    double lambda, double epsilon) {
    Tensor d_real = nets::critic_forward(y, speaker_code, critic, AdvMode::kWganGp);
    Tensor d_fake = nets::critic_forward(y_hat_detached, speaker_code, critic, AdvMode::kWganGp);
    Tensor y_tilde = interpolate_samples(y, y_hat_detached, epsilon);
    CriticLossParts parts;
    Tensor penalty = gradient_penalty(y_tilde, speaker_code, critic, lambda, &parts.grad_norm);
    parts.penalty = penalty.item();
    parts.loss = op::add(op::sub(d_fake, d_real), penalty);
    return parts;
}

Tensor critic_loss_gan(const Tensor& y, const Tensor& y_hat_detached,
                       const Tensor& speaker_code, const nets::CriticParams& critic) {
    Tensor p_real = op::clamp(nets::critic_forward(y, speaker_code, critic, AdvMode::kGan),
                              1e-7, 1.0 - 1e-7);
    Tensor p_fake = op::clamp(
        nets::critic_forward(y_hat_detached, speaker_code, critic, AdvMode::kGan), 1e-7,
        1.0 - 1e-7);
    Tensor one_minus_fake = op::add_scalar(op::neg(p_fake), 1.0);
    return op::neg(op::add(op::log_(p_real), op::log_(one_minus_fake)));
}

Tensor adv_loss_generator(const Tensor& y_hat, const Tensor& speaker_code,
                          const nets::CriticParams& critic, AdvMode mode,
                          bool non_saturating) {
    if (mode == AdvMode::kWganGp) {
        return op::neg(nets::critic_forward(y_hat, speaker_code, critic, AdvMode::kWganGp));
    }
    Tensor p = op::clamp(nets::critic_forward(y_hat, speaker_code, critic, AdvMode::kGan),
                         1e-7, 1.0 - 1e-7);
    if (non_saturating) {
        return op::neg(op::log_(p));
    }
    return op::log_(op::add_scalar(op::neg(p), 1.0));
}

GeneratorLossParts generator_total_loss(
    const Tensor& y, const Tensor& y_hat, const Tensor& speaker_code,
    const LossWeights& weights, Stage stage, const nets::CriticParams* critic,
    const vocoder::WaveNetParams* frozen_vocoder, const std::vector<uint32_t>* wave_classes,
    const std::vector<uint8_t>* dml_positions) {
    GeneratorLossParts parts;
    Tensor total = loss_mse(y, y_hat);
    parts.mse = total.item();

    if (stage != Stage::kWarmup) {
        if (!critic) throw ConfigError("generator_total_loss: adversarial stage needs a critic");
        Tensor adv = adv_loss_generator(y_hat, speaker_code, *critic, weights.mode);
        parts.adv = adv.item();
        total = op::add(total, op::mul_scalar(adv, weights.gamma_d));
    }
    if (stage == Stage::kFinetune) {
        if (!frozen_vocoder || !wave_classes || !dml_positions) {
            throw ConfigError("generator_total_loss: fine-tune stage needs a loaded vocoder "
                              "checkpoint and waveform targets");
        }
        Tensor cond = vocoder::upsample(y_hat, *frozen_vocoder);
        Tensor head =
            vocoder::wavenet_teacher_forced(*wave_classes, cond, speaker_code, *frozen_vocoder);
        Tensor dml = vocoder::dml_nll(head, *wave_classes, *dml_positions,
                                      frozen_vocoder->cfg.zeta);
        parts.dml = dml.item();
        total = op::add(total, op::mul_scalar(dml, weights.gamma_w));
    }
    parts.total = total;
    return parts;
}

}  // namespace wavetts::train
