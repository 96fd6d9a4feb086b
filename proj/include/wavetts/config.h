#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wavetts/acoustic.h"
#include "wavetts/wavenet.h"

namespace wavetts::train {

enum class SystemMode { kMseBaseline, kGan, kWganGp };

std::string mode_name(SystemMode m);
SystemMode parse_mode(const std::string& s);

// Flat key=value run configuration. File values are overridden by CLI flags;
// the effective config is echoed into the run directory.
struct RunConfig {
    uint32_t version = 1;
    SystemMode mode = SystemMode::kWganGp;
    uint64_t seed = 1;

    // Acoustic model / critic sizes (desk defaults; paper scale 512/128).
    size_t hidden = 64;
    size_t sru_layers = 6;
    size_t critic_width = 32;

    // Vocoder.
    vocoder::WaveNetConfig wavenet;

    // Stage boundaries (epochs): warmup < n1, adversarial < n2, finetune < n3.
    size_t n1 = 2;
    size_t n2 = 4;
    size_t n3 = 6;

    // Loss weights.
    double gamma_w = 1e-4;
    double lambda = 10.0;
    bool gan_non_saturating = false;

    // Optimizers.
    double lr_g = 0.01;
    double lr_d = 0.001;
    double sgd_decay = 0.95;
    double adam_lr = 0.001;
    size_t adam_warmup = 100;
    double ema_decay = 0.9999;

    // Data.
    size_t batch = 4;
    size_t max_frames = 48;
    size_t vocoder_epochs = 10;
    size_t corpus_speakers = 2;
    size_t corpus_utterances = 4;
    double corpus_duration_s = 0.3;

    // Paths.
    std::string corpus_dir;
    std::string features_dir;
    std::string run_dir;
    std::string vocoder_checkpoint;

    bool effective_gan() const { return mode != SystemMode::kMseBaseline; }
    bool effective_dml() const { return mode != SystemMode::kMseBaseline && gamma_w > 0.0; }

    // Validates invariants (n1 <= n2 <= n3, stride product, speaker count)
    // and applies mode forcing (mse-baseline pins gamma_d = gamma_w = 0).
    void validate_and_normalize();
};

RunConfig load_config(const std::string& path);
void save_config(const std::string& path, const RunConfig& cfg);

// Applies one key=value assignment (used by both the file parser and the
// CLI's --set flags). Unknown keys raise ConfigError.
void apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value);

}  // namespace wavetts::train
