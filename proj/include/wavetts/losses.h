#pragma once

#include <optional>

#include "wavetts/acoustic.h"
#include "wavetts/tensor.h"
#include "wavetts/wavenet.h"

namespace wavetts::train {

// Mean squared error over all frames and channels.
Tensor loss_mse(const Tensor& y, const Tensor& y_hat);

// y~ = eps*y + (1-eps)*y_hat with one eps per batch item, drawn from the
// dedicated stream. Returned as a fresh requires-grad leaf so the gradient
// penalty can differentiate the critic w.r.t. it.
Tensor interpolate_samples(const Tensor& y, const Tensor& y_hat, double epsilon);

struct CriticLossParts {
    Tensor loss;          // D(y_hat) - D(y) + lambda*penalty
    double grad_norm;     // |grad_{y~} D(y~)|_2, recorded for diagnostics
    double penalty;       // lambda*(norm - 1)^2
};

// Minimization form of the WGAN-GP critic objective for one (y, y_hat) pair
// (standard orientation: critic minimizes E[D(fake)] - E[D(real)] + penalty).
CriticLossParts critic_loss_wgan_gp(const Tensor& y, const Tensor& y_hat_detached,
                                    const Tensor& speaker_code, const nets::CriticParams& critic,
                                    double lambda, double epsilon);

// Penalty term alone for a given interpolate; exposed for closed-form tests.
Tensor gradient_penalty(const Tensor& y_tilde, const Tensor& speaker_code,
                        const nets::CriticParams& critic, double lambda,
                        double* grad_norm_out = nullptr);

// Original-GAN critic loss: -log D(y) - log(1 - D(y_hat)), probabilities
// clamped to [1e-7, 1-1e-7] before the log.
Tensor critic_loss_gan(const Tensor& y, const Tensor& y_hat_detached,
                       const Tensor& speaker_code, const nets::CriticParams& critic);

// Generator adversarial loss. WGAN-GP: -E[D(y_hat)]. GAN: the objective's
// E[log(1 - D(y_hat))] as printed, or the non-saturating -E[log D(y_hat)]
// when non_saturating is set.
Tensor adv_loss_generator(const Tensor& y_hat, const Tensor& speaker_code,
                          const nets::CriticParams& critic, nets::AdvMode mode,
                          bool non_saturating = false);

struct LossWeights {
    double gamma_d = 0.0;
    double gamma_w = 1e-4;
    double lambda = 10.0;
    nets::AdvMode mode = nets::AdvMode::kWganGp;
};

enum class Stage { kWarmup, kAdversarial, kFinetune };

struct GeneratorLossParts {
    Tensor total;
    double mse = 0.0;
    double adv = 0.0;
    double dml = 0.0;
};

// Stage-gated combined generator objective:
//   warmup       MSE
//   adversarial  MSE + gamma_d * L_ADV
//   finetune     MSE + gamma_d * L_ADV + gamma_w * L_DML
// The vocoder is used frozen (its parameters must not require grad); the DML
// path runs the teacher-forced vocoder on the natural waveform's classes
// with the predicted mel as conditioning, at the selected positions.
GeneratorLossParts generator_total_loss(
    const Tensor& y, const Tensor& y_hat, const Tensor& speaker_code,
    const LossWeights& weights, Stage stage, const nets::CriticParams* critic,
    const vocoder::WaveNetParams* frozen_vocoder, const std::vector<uint32_t>* wave_classes,
    const std::vector<uint8_t>* dml_positions);

}  // namespace wavetts::train
