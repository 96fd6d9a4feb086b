#include "wavetts/dsp.h"

#include <cmath>
#include <complex>

#include "wavetts/error.h"
#include "wavetts/ops.h"

namespace wavetts::dsp {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Iterative radix-2 Cooley-Tukey on complex input.
void fft_inplace(std::vector<std::complex<double>>& a) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

const std::vector<double>& hann_window() {
    static const std::vector<double> w = [] {
        std::vector<double> out(kFrameSize);
        for (size_t n = 0; n < kFrameSize; ++n) {
            out[n] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(n) /
                                          static_cast<double>(kFrameSize - 1));
        }
        return out;
    }();
    return w;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

std::vector<double> fft_magnitude(const std::vector<double>& x, size_t fft_size) {
    std::vector<std::complex<double>> buf(fft_size, {0.0, 0.0});
    const size_t n = std::min(x.size(), fft_size);
    for (size_t i = 0; i < n; ++i) buf[i] = {x[i], 0.0};
    fft_inplace(buf);
    std::vector<double> mag(fft_size / 2 + 1);
    for (size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(buf[k]);
    return mag;
}

Tensor stft_magnitude(const Waveform& w) {
    if (w.sample_rate != static_cast<int>(kSampleRate)) {
        throw DomainError("stft: sample rate " + std::to_string(w.sample_rate) +
                          " Hz, expected 16000");
    }
    const size_t t = frame_count(w.samples.size());
    if (t == 0) {
        throw DomainError("stft: input of " + std::to_string(w.samples.size()) +
                          " samples is shorter than one frame (240)");
    }
    const auto& win = hann_window();
    std::vector<double> out(t * kBins);
    std::vector<std::complex<double>> buf(kFftSize);
    for (size_t f = 0; f < t; ++f) {
        const int16_t* seg = w.samples.data() + f * kHop;
        for (size_t n = 0; n < kFrameSize; ++n) {
            buf[n] = {static_cast<double>(seg[n]) / 32768.0 * win[n], 0.0};
        }
        for (size_t n = kFrameSize; n < kFftSize; ++n) buf[n] = {0.0, 0.0};
        fft_inplace(buf);
        for (size_t k = 0; k < kBins; ++k) out[f * kBins + k] = std::abs(buf[k]);
    }
    return Tensor::from_vector({t, kBins}, std::move(out));
}

const Tensor& mel_filterbank() {
    static const Tensor bank = [] {
        std::vector<double> fb(kMelChannels * kBins, 0.0);
        const double mel_lo = hz_to_mel(kMelLoHz);
        const double mel_hi = hz_to_mel(kMelHiHz);
        std::vector<double> edges(kMelChannels + 2);
        for (size_t i = 0; i < edges.size(); ++i) {
            edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                              static_cast<double>(kMelChannels + 1));
        }
        const double bin_hz = static_cast<double>(kSampleRate) / static_cast<double>(kFftSize);
        for (size_t m = 0; m < kMelChannels; ++m) {
            const double f0 = edges[m], f1 = edges[m + 1], f2 = edges[m + 2];
            for (size_t k = 0; k < kBins; ++k) {
                const double fk = static_cast<double>(k) * bin_hz;
                double v = 0.0;
                if (fk > f0 && fk < f1) {
                    v = (fk - f0) / (f1 - f0);
                } else if (fk >= f1 && fk < f2) {
                    v = (f2 - fk) / (f2 - f1);
                }
                fb[m * kBins + k] = v;
            }
        }
        return Tensor::from_vector({kMelChannels, kBins}, std::move(fb));
    }();
    return bank;
}

Tensor mel_project(const Tensor& spec) {
    if (spec.shape().size() != 2 || spec.cols() != kBins) {
        throw DimensionError("mel_project: expected [T x 257], got " + shape_str(spec.shape()));
    }
    return wavetts::ops::matmul(spec, wavetts::ops::transpose(mel_filterbank()));
}

MelStats compute_stats(const std::vector<Tensor>& log_mels) {
    MelStats stats;
    stats.mean.assign(kMelChannels, 0.0);
    stats.variance.assign(kMelChannels, 0.0);
    size_t total = 0;
    for (const auto& m : log_mels) {
        const size_t t = m.rows();
        total += t;
        for (size_t i = 0; i < t; ++i) {
            for (size_t c = 0; c < kMelChannels; ++c) stats.mean[c] += m.at(i, c);
        }
    }
    if (total == 0) throw DomainError("compute_stats: no frames");
    for (auto& v : stats.mean) v /= static_cast<double>(total);
    for (const auto& m : log_mels) {
        const size_t t = m.rows();
        for (size_t i = 0; i < t; ++i) {
            for (size_t c = 0; c < kMelChannels; ++c) {
                const double d = m.at(i, c) - stats.mean[c];
                stats.variance[c] += d * d;
            }
        }
    }
    for (auto& v : stats.variance) {
        v /= static_cast<double>(total);
        if (v < 1e-30) v = 1e-30;  // constant channel: degenerate but invertible
    }
    return stats;
}

Tensor normalize(const Tensor& log_mel, const MelStats& stats) {
    const size_t t = log_mel.rows();
    std::vector<double> out(t * kMelChannels);
    for (size_t i = 0; i < t; ++i) {
        for (size_t c = 0; c < kMelChannels; ++c) {
            // A constant channel (everything at the clip floor) maps to 0.
            out[i * kMelChannels + c] =
                stats.variance[c] < 1e-20
                    ? 0.0
                    : (log_mel.at(i, c) - stats.mean[c]) / std::sqrt(stats.variance[c]);
        }
    }
    return Tensor::from_vector({t, kMelChannels}, std::move(out));
}

Tensor denormalize(const Tensor& norm_mel, const MelStats& stats) {
    const size_t t = norm_mel.rows();
    std::vector<double> out(t * kMelChannels);
    for (size_t i = 0; i < t; ++i) {
        for (size_t c = 0; c < kMelChannels; ++c) {
            out[i * kMelChannels + c] =
                norm_mel.at(i, c) * std::sqrt(stats.variance[c]) + stats.mean[c];
        }
    }
    return Tensor::from_vector({t, kMelChannels}, std::move(out));
}

namespace {

Tensor clip_log(const Tensor& mel) {
    std::vector<double> out(mel.numel());
    auto d = mel.data();
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] = std::log(std::max(d[i], kClipFloor));
    }
    return Tensor::from_vector(mel.shape(), std::move(out));
}

}  // namespace

MelSpectrogram log_compress_normalize(const Tensor& mel, const std::optional<MelStats>& stats,
                                      MelStats* out_stats) {
    Tensor lm = clip_log(mel);
    MelStats st;
    if (stats.has_value()) {
        st = *stats;
    } else {
        st = compute_stats({lm});
    }
    if (out_stats) *out_stats = st;
    return MelSpectrogram{normalize(lm, st)};
}

Tensor waveform_to_logmel(const Waveform& w) {
    return clip_log(mel_project(stft_magnitude(w)));
}

MelSpectrogram waveform_to_mel(const Waveform& w, const MelStats& stats) {
    return MelSpectrogram{normalize(waveform_to_logmel(w), stats)};
}

}  // namespace wavetts::dsp
