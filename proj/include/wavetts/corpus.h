#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wavetts/dsp.h"
#include "wavetts/tensor.h"
#include "wavetts/wav_io.h"

namespace wavetts::corpus {

constexpr size_t kLinguisticDims = 381;  // 376 binary + 5 duration
constexpr size_t kBinaryDims = 376;
constexpr size_t kDurationDims = 5;
constexpr size_t kSpeakerCodeDims = 7;  // 6 one-hot identity + 1 gender bit
constexpr size_t kMaxSpeakers = 6;

// Conditioning inputs for one utterance.
struct ConditioningBundle {
    Tensor linguistic;    // [T x 381], binary block + min-max normalized durations
    Tensor speaker_code;  // [1 x 7]
};

struct Utterance {
    std::string id;
    size_t speaker = 0;
    Waveform wave;
    ConditioningBundle cond;
};

struct SyntheticSpec {
    size_t n_speakers = 2;
    size_t n_utterances = 4;  // per speaker
    double duration_s = 0.3;
    uint64_t seed = 1;
};

// Deterministic parametric voices: per-speaker F0 range and formant scale
// over a shared phone inventory; linguistic features are phone-class
// indicators aligned to the signal.
std::vector<Utterance> make_synthetic_corpus(const SyntheticSpec& spec);

// Single-speaker corpus of one pure tone, for vocoder overfit checks.
std::vector<Utterance> make_tone_corpus(double freq_hz, size_t n_utterances, double duration_s,
                                        uint64_t seed);

// Min-max bounds for the 5 duration dims, persisted with the features.
struct LinguisticStats {
    std::vector<double> min;  // 5
    std::vector<double> max;  // 5
};

// Prepared features for one utterance.
struct FeatureItem {
    std::string id;
    size_t speaker = 0;
    Tensor mel;  // [T x 80] normalized
    ConditioningBundle cond;
    Waveform wave;
};

struct FeatureSet {
    std::vector<FeatureItem> items;
    dsp::MelStats mel_stats;
    LinguisticStats ling_stats;
    std::vector<size_t> speaker_gender;  // gender bit per speaker index
};

// Builds the full feature set in memory from raw utterances: mel extraction,
// stats over the whole prepared set, duration min-max normalization.
FeatureSet prepare_features(const std::vector<Utterance>& utts);

// Binary tensor file: u32 ndim, u32 dims[], little-endian row-major f64.
void write_tensor_file(const std::string& path, const Tensor& t);
Tensor read_tensor_file(const std::string& path);

// Directory layout: <dir>/<id>.mel, <id>.ling, <id>.wav, mel.stats,
// ling.stats, manifest.tsv.
void write_feature_set(const std::string& dir, const FeatureSet& fs, bool force);
FeatureSet read_feature_set(const std::string& dir);

// FNV-1a over a tensor's raw bytes; used for frozen-parameter checks.
uint64_t tensor_checksum(const Tensor& t);

}  // namespace wavetts::corpus
