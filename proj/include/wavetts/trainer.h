#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wavetts/acoustic.h"
#include "wavetts/checkpoint.h"
#include "wavetts/config.h"
#include "wavetts/corpus.h"
#include "wavetts/losses.h"
#include "wavetts/optim.h"
#include "wavetts/wavenet.h"

namespace wavetts::train {

std::string stage_name(Stage s);
Stage stage_for_epoch(size_t epoch, const RunConfig& cfg);

// One metrics CSV row; columns are fixed:
// epoch,stage,L_MSE,L_ADV,L_DML,L_D,grad_penalty,gamma_D,lr_G,lr_D,wall_seconds
struct MetricsRow {
    size_t epoch = 0;
    std::string stage;
    double l_mse = 0.0, l_adv = 0.0, l_dml = 0.0, l_d = 0.0;
    double grad_penalty = 0.0, grad_norm = 0.0;
    double gamma_d = 0.0, lr_g = 0.0, lr_d = 0.0;
    double wall_seconds = 0.0;
};

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);

// ---- Vocoder pre-training -------------------------------------------------

struct VocoderTrainResult {
    vocoder::WaveNetParams params;
    Ema ema;
    double initial_heldout_nll = 0.0;
    double final_heldout_nll = 0.0;
};

// Teacher-forced training on natural mel + speaker codes with Adam and EMA.
// The last utterance of each speaker is held out for NLL tracking when the
// corpus has at least two utterances per speaker. NaN losses abort with the
// step index. Writes the checkpoint (including the EMA shadow) to
// `checkpoint_path` when non-empty.
VocoderTrainResult train_vocoder(const corpus::FeatureSet& features, const RunConfig& cfg,
                                 const std::string& checkpoint_path,
                                 const std::string& resume_from = "");

// Rebuilds vocoder params (and EMA shadow) from a checkpoint.
struct LoadedVocoder {
    vocoder::WaveNetParams params;      // raw trained parameters
    vocoder::WaveNetParams ema_params;  // EMA shadow applied (equal when absent)
};
LoadedVocoder load_vocoder(const Checkpoint& ck);
Checkpoint vocoder_checkpoint(vocoder::WaveNetParams& params, const Ema& ema, const Adam& adam,
                              NamedRng& rng, size_t epoch, const RunConfig& cfg);

// ---- Acoustic-model training (three-stage algorithm) -----------------------

struct AcousticModels {
    nets::GeneratorParams generator;
    nets::CriticParams critic;
};

struct AcousticTrainResult {
    AcousticModels models;
    std::vector<MetricsRow> metrics;
    // Checksums of the frozen vocoder parameters at stage-3 entry and after
    // training; equal by contract.
    uint64_t vocoder_checksum_before = 0;
    uint64_t vocoder_checksum_after = 0;
};

// gamma_D = E[L_MSE] / E[|L_ADV|] over the measuring window.
double recompute_gamma_d(double mse_mean, double adv_absmean);

// Runs the staged training loop: MSE warm-up, adversarial training, then
// fine-tuning with the frozen vocoder's DML loss. Emits one metrics row per
// epoch and a checkpoint per epoch under run_dir. `resume_from` continues a
// saved run bit-exactly.
AcousticTrainResult train_acoustic(const corpus::FeatureSet& features, const RunConfig& cfg,
                                   const std::string& run_dir,
                                   const std::string& resume_from = "");

Checkpoint acoustic_checkpoint(AcousticModels& models, NamedRng& rng, size_t epoch,
                               double gamma_d, double prev_mse_mean, double prev_adv_absmean,
                               bool have_adv_stats);
AcousticModels load_acoustic(const Checkpoint& ck, const RunConfig& cfg);

// Mean DML loss of the vocoder on generator-predicted mel over the corpus
// (all positions, teacher-forced on the natural waveforms). Post-hoc
// evaluation used to compare fine-tuned vs stage-2 models.
double eval_generator_dml(const corpus::FeatureSet& features, const RunConfig& cfg,
                          AcousticModels& models, const LoadedVocoder& voc);

// Mean teacher-forced NLL on a set of items with natural mel.
double eval_vocoder_nll(const std::vector<const corpus::FeatureItem*>& items,
                        const vocoder::WaveNetParams& params, size_t max_frames);

// ---- Synthesis -------------------------------------------------------------

// Default path: linguistic features -> generator -> mel -> vocoder -> WAV.
// With `analysis_by_synthesis`, the natural mel drives the vocoder instead.
Waveform synthesize_utterance(const corpus::FeatureItem& item, const RunConfig& cfg,
                              AcousticModels* models, const LoadedVocoder& voc,
                              bool analysis_by_synthesis, RngStream& rng);

// Truncation used consistently by training and evaluation.
corpus::FeatureItem truncate_item(const corpus::FeatureItem& item, size_t max_frames);

}  // namespace wavetts::train
