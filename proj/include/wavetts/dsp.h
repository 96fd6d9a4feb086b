#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wavetts/tensor.h"
#include "wavetts/wav_io.h"

namespace wavetts::dsp {

// 16 kHz analysis: 15 ms frames, 5 ms hop, Hann window, 512-point FFT.
constexpr size_t kSampleRate = 16000;
constexpr size_t kFrameSize = 240;
constexpr size_t kHop = 80;
constexpr size_t kFftSize = 512;
constexpr size_t kBins = kFftSize / 2 + 1;  // 257
constexpr size_t kMelChannels = 80;
constexpr double kMelLoHz = 125.0;
constexpr double kMelHiHz = 7600.0;
constexpr double kClipFloor = 0.01;

// Number of analysis frames for a given sample count.
inline size_t frame_count(size_t samples) {
    return samples < kFrameSize ? 0 : (samples - kFrameSize) / kHop + 1;
}

// Per-channel z-normalization statistics, persisted alongside features.
struct MelStats {
    std::vector<double> mean;      // 80
    std::vector<double> variance;  // 80
};

struct MelSpectrogram {
    Tensor frames;  // [T x 80], normalized log-mel
};

// Magnitude STFT, [T x 257]. Throws on inputs shorter than one frame.
Tensor stft_magnitude(const Waveform& w);

// HTK-mel triangular filterbank matrix [80 x 257], 125 Hz .. 7.6 kHz,
// applied to magnitude (not power) spectra.
const Tensor& mel_filterbank();

// [T x 257] magnitudes -> [T x 80] mel magnitudes.
Tensor mel_project(const Tensor& spec);

// Clip at 0.01, natural log, z-normalize per channel. Stats must be provided
// at inference; computed (and returned via out_stats) when absent.
MelSpectrogram log_compress_normalize(const Tensor& mel, const std::optional<MelStats>& stats,
                                      MelStats* out_stats = nullptr);

MelStats compute_stats(const std::vector<Tensor>& log_mels);
Tensor normalize(const Tensor& log_mel, const MelStats& stats);
Tensor denormalize(const Tensor& norm_mel, const MelStats& stats);

// Full pipeline: waveform -> normalized MelSpectrogram.
MelSpectrogram waveform_to_mel(const Waveform& w, const MelStats& stats);
// Unnormalized log-mel [T x 80] (clip + log only).
Tensor waveform_to_logmel(const Waveform& w);

// In-phase real FFT helper exposed for tests: magnitudes of an arbitrary
// signal segment zero-padded to the given power-of-two size.
std::vector<double> fft_magnitude(const std::vector<double>& x, size_t fft_size);

}  // namespace wavetts::dsp
