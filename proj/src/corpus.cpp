#include "wavetts/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "wavetts/error.h"
#include "wavetts/rng.h"

namespace fs = std::filesystem;

namespace wavetts::corpus {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr size_t kPhoneClasses = 10;

struct Phone {
    size_t cls;
    size_t start;  // samples
    size_t len;    // samples
};

// Shared phone inventory: per-class F0 multiplier, resonance target and
// voicing. Classes 8 and 9 are noise-excited.
struct PhoneSpec {
    double f0_mult;
    double formant_hz;
    bool voiced;
    double amp;
};

const PhoneSpec kPhones[kPhoneClasses] = {
    {1.00, 700.0, true, 0.30},  {1.08, 1100.0, true, 0.28}, {0.92, 900.0, true, 0.32},
    {1.15, 1400.0, true, 0.26}, {0.85, 600.0, true, 0.30},  {1.04, 1900.0, true, 0.22},
    {0.96, 2400.0, true, 0.20}, {1.10, 800.0, true, 0.28},  {1.00, 3000.0, false, 0.12},
    {1.00, 4200.0, false, 0.10},
};

struct SpeakerVoice {
    double f0_lo, f0_hi;
    double formant_scale;
    size_t gender;  // 1 = higher-register voice
};

// Disjoint F0 ranges so dominant-frequency estimates separate speakers.
SpeakerVoice speaker_voice(size_t idx) {
    static const SpeakerVoice voices[kMaxSpeakers] = {
        {110.0, 130.0, 1.00, 0}, {200.0, 220.0, 1.15, 1}, {140.0, 160.0, 0.95, 0},
        {240.0, 260.0, 1.20, 1}, {170.0, 185.0, 1.05, 1}, {90.0, 105.0, 0.90, 0},
    };
    return voices[idx];
}

std::vector<Phone> random_phone_seq(size_t total_samples, RngStream& rng) {
    std::vector<Phone> phones;
    size_t pos = 0;
    while (pos < total_samples) {
        Phone p;
        p.cls = static_cast<size_t>(rng.below(kPhoneClasses));
        const size_t min_len = 800, max_len = 2400;  // 50 .. 150 ms
        p.len = min_len + static_cast<size_t>(rng.below(max_len - min_len));
        p.start = pos;
        if (pos + p.len > total_samples) p.len = total_samples - pos;
        pos += p.len;
        phones.push_back(p);
    }
    return phones;
}

Waveform render_phones(const std::vector<Phone>& phones, const SpeakerVoice& voice,
                       size_t total_samples, RngStream& rng) {
    std::vector<double> x(total_samples, 0.0);
    const double f0_center = rng.uniform(voice.f0_lo, voice.f0_hi);
    double phase = 0.0;
    for (const auto& p : phones) {
        const PhoneSpec& spec = kPhones[p.cls];
        const double f0 = f0_center * spec.f0_mult;
        const double formant = spec.formant_hz * voice.formant_scale;
        // 2-pole resonator at the phone's formant target.
        const double r = 0.97;
        const double a1 = -2.0 * r * std::cos(2.0 * kPi * formant / 16000.0);
        const double a2 = r * r;
        double y1 = 0.0, y2 = 0.0;
        for (size_t n = 0; n < p.len; ++n) {
            const size_t t = p.start + n;
            double src;
            if (spec.voiced) {
                // Sawtooth-ish harmonic source with mild vibrato.
                const double vib = 1.0 + 0.01 * std::sin(2.0 * kPi * 5.0 * t / 16000.0);
                phase += f0 * vib / 16000.0;
                phase -= std::floor(phase);
                src = 2.0 * phase - 1.0;
            } else {
                src = rng.uniform(-1.0, 1.0);
            }
            const double y = src - a1 * y1 - a2 * y2;
            y2 = y1;
            y1 = y;
            // Short fade at the phone edges.
            const double edge = std::min({1.0, n / 160.0, (p.len - 1 - n) / 160.0});
            x[t] = y * spec.amp * std::max(edge, 0.0);
        }
    }
    double peak = 1e-9;
    for (double v : x) peak = std::max(peak, std::fabs(v));
    const double scale = 0.5 / peak;
    Waveform w;
    w.samples.resize(total_samples);
    for (size_t i = 0; i < total_samples; ++i) {
        w.samples[i] = static_cast<int16_t>(std::lrint(x[i] * scale * 32767.0));
    }
    return w;
}

Tensor linguistic_features(const std::vector<Phone>& phones, size_t total_samples) {
    const size_t t_frames = dsp::frame_count(total_samples);
    std::vector<double> feat(t_frames * kLinguisticDims, 0.0);
    const size_t n_phones = phones.size();
    for (size_t f = 0; f < t_frames; ++f) {
        const size_t center = f * dsp::kHop + dsp::kFrameSize / 2;
        size_t pi = 0;
        while (pi + 1 < n_phones && phones[pi].start + phones[pi].len <= center) ++pi;
        const Phone& cur = phones[pi];
        double* row = feat.data() + f * kLinguisticDims;
        // Binary block: current / previous / next phone one-hots, then a
        // quantized position-in-phone indicator. Slots beyond that stay 0,
        // matching the sparsity of real binary linguistic vectors.
        row[cur.cls] = 1.0;
        if (pi > 0) row[kPhoneClasses + phones[pi - 1].cls] = 1.0;
        if (pi + 1 < n_phones) row[2 * kPhoneClasses + phones[pi + 1].cls] = 1.0;
        const double pos = cur.len > 1
                               ? static_cast<double>(center - cur.start) /
                                     static_cast<double>(cur.len)
                               : 0.0;
        const size_t bin = std::min<size_t>(7, static_cast<size_t>(pos * 8.0));
        row[3 * kPhoneClasses + bin] = 1.0;
        // Duration block (raw; min-max normalized during preparation).
        double* dur = row + kBinaryDims;
        dur[0] = static_cast<double>(cur.len) / 16000.0;
        dur[1] = pos;
        dur[2] = static_cast<double>(f);
        dur[3] = static_cast<double>(t_frames - 1 - f);
        dur[4] = static_cast<double>(t_frames);
    }
    return Tensor::from_vector({t_frames, kLinguisticDims}, std::move(feat));
}

Tensor speaker_code(size_t idx, size_t gender) {
    std::vector<double> code(kSpeakerCodeDims, 0.0);
    code[idx] = 1.0;
    code[kMaxSpeakers] = static_cast<double>(gender);
    return Tensor::from_vector({1, kSpeakerCodeDims}, std::move(code));
}

void write_u32le(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<char*>(b), 4);
}

uint32_t read_u32le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

std::vector<Utterance> make_synthetic_corpus(const SyntheticSpec& spec) {
    if (spec.n_speakers > kMaxSpeakers) {
        throw ConfigError("make_synthetic_corpus: " + std::to_string(spec.n_speakers) +
                          " speakers exceeds the speaker-code capacity of 6");
    }
    if (spec.n_speakers == 0 || spec.n_utterances == 0) {
        throw ConfigError("make_synthetic_corpus: empty corpus requested");
    }
    const size_t total_samples =
        std::max<size_t>(dsp::kFrameSize, static_cast<size_t>(spec.duration_s * 16000.0));
    std::vector<Utterance> utts;
    for (size_t s = 0; s < spec.n_speakers; ++s) {
        const SpeakerVoice voice = speaker_voice(s);
        for (size_t u = 0; u < spec.n_utterances; ++u) {
            RngStream rng(spec.seed ^ fnv1a64("utt/" + std::to_string(s) + "/" +
                                              std::to_string(u)));
            Utterance utt;
            std::ostringstream id;
            id << "spk" << s << "_utt" << std::setw(3) << std::setfill('0') << u;
            utt.id = id.str();
            utt.speaker = s;
            auto phones = random_phone_seq(total_samples, rng);
            utt.wave = render_phones(phones, voice, total_samples, rng);
            utt.cond.linguistic = linguistic_features(phones, total_samples);
            utt.cond.speaker_code = speaker_code(s, voice.gender);
            utts.push_back(std::move(utt));
        }
    }
    return utts;
}

std::vector<Utterance> make_tone_corpus(double freq_hz, size_t n_utterances, double duration_s,
                                        uint64_t seed) {
    const size_t total_samples =
        std::max<size_t>(dsp::kFrameSize, static_cast<size_t>(duration_s * 16000.0));
    std::vector<Utterance> utts;
    for (size_t u = 0; u < n_utterances; ++u) {
        RngStream rng(seed ^ fnv1a64("tone/" + std::to_string(u)));
        const double phase0 = rng.uniform(0.0, 2.0 * kPi);
        Utterance utt;
        utt.id = "tone_utt" + std::to_string(u);
        utt.speaker = 0;
        utt.wave.samples.resize(total_samples);
        for (size_t t = 0; t < total_samples; ++t) {
            const double v = 0.4 * std::sin(2.0 * kPi * freq_hz * t / 16000.0 + phase0);
            utt.wave.samples[t] = static_cast<int16_t>(std::lrint(v * 32767.0));
        }
        // One long "phone" covering the tone.
        std::vector<Phone> phones{{0, 0, total_samples}};
        utt.cond.linguistic = linguistic_features(phones, total_samples);
        utt.cond.speaker_code = speaker_code(0, 0);
        utts.push_back(std::move(utt));
    }
    return utts;
}

FeatureSet prepare_features(const std::vector<Utterance>& utts) {
    if (utts.empty()) throw ConfigError("prepare_features: empty corpus");
    FeatureSet fs;

    std::vector<Tensor> logmels;
    logmels.reserve(utts.size());
    for (const auto& u : utts) logmels.push_back(dsp::waveform_to_logmel(u.wave));
    fs.mel_stats = dsp::compute_stats(logmels);

    fs.ling_stats.min.assign(kDurationDims, 1e300);
    fs.ling_stats.max.assign(kDurationDims, -1e300);
    for (const auto& u : utts) {
        const Tensor& ling = u.cond.linguistic;
        for (size_t i = 0; i < ling.rows(); ++i) {
            for (size_t d = 0; d < kDurationDims; ++d) {
                const double v = ling.at(i, kBinaryDims + d);
                fs.ling_stats.min[d] = std::min(fs.ling_stats.min[d], v);
                fs.ling_stats.max[d] = std::max(fs.ling_stats.max[d], v);
            }
        }
    }

    size_t max_speaker = 0;
    for (const auto& u : utts) max_speaker = std::max(max_speaker, u.speaker);
    fs.speaker_gender.assign(max_speaker + 1, 0);

    for (size_t k = 0; k < utts.size(); ++k) {
        const auto& u = utts[k];
        FeatureItem item;
        item.id = u.id;
        item.speaker = u.speaker;
        item.wave = u.wave;
        item.mel = dsp::normalize(logmels[k], fs.mel_stats);

        Tensor ling = u.cond.linguistic.detach();
        auto data = ling.mutable_data();
        const size_t t = ling.rows();
        for (size_t i = 0; i < t; ++i) {
            for (size_t d = 0; d < kDurationDims; ++d) {
                const double lo = fs.ling_stats.min[d];
                const double hi = fs.ling_stats.max[d];
                double& v = data[i * kLinguisticDims + kBinaryDims + d];
                v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
            }
        }
        item.cond.linguistic = ling;
        item.cond.speaker_code = u.cond.speaker_code;
        fs.speaker_gender[u.speaker] =
            static_cast<size_t>(u.cond.speaker_code.data()[kMaxSpeakers]);
        fs.items.push_back(std::move(item));
    }
    return fs;
}

void write_tensor_file(const std::string& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write tensor file: " + path);
    write_u32le(out, static_cast<uint32_t>(t.shape().size()));
    for (size_t d : t.shape()) write_u32le(out, static_cast<uint32_t>(d));
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.numel() * 8));
    if (!out) throw IoError("short write on tensor file: " + path);
}

Tensor read_tensor_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open tensor file: " + path);
    const uint32_t ndim = read_u32le(in);
    if (!in || ndim > 8) throw IoError(path + ": bad tensor header");
    Shape shape(ndim);
    for (auto& d : shape) d = read_u32le(in);
    std::vector<double> data(shape_numel(shape));
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * 8));
    if (!in) throw IoError(path + ": truncated tensor data");
    return Tensor::from_vector(shape, std::move(data));
}

void write_feature_set(const std::string& dir, const FeatureSet& fs, bool force) {
    fs::create_directories(dir);
    const std::string manifest_path = dir + "/manifest.tsv";
    if (!force && fs::exists(manifest_path)) {
        return;  // cache hit; prepare is idempotent without --force
    }
    for (const auto& item : fs.items) {
        write_tensor_file(dir + "/" + item.id + ".mel", item.mel);
        write_tensor_file(dir + "/" + item.id + ".ling", item.cond.linguistic);
        write_wav(dir + "/" + item.id + ".wav", item.wave);
    }
    Tensor mel_stats = Tensor::zeros({2, dsp::kMelChannels});
    {
        auto d = mel_stats.mutable_data();
        for (size_t c = 0; c < dsp::kMelChannels; ++c) {
            d[c] = fs.mel_stats.mean[c];
            d[dsp::kMelChannels + c] = fs.mel_stats.variance[c];
        }
    }
    write_tensor_file(dir + "/mel.stats", mel_stats);
    Tensor ling_stats = Tensor::zeros({2, kDurationDims});
    {
        auto d = ling_stats.mutable_data();
        for (size_t c = 0; c < kDurationDims; ++c) {
            d[c] = fs.ling_stats.min[c];
            d[kDurationDims + c] = fs.ling_stats.max[c];
        }
    }
    write_tensor_file(dir + "/ling.stats", ling_stats);

    std::ofstream mf(manifest_path);
    if (!mf) throw IoError("cannot write manifest: " + manifest_path);
    mf << "version\t1\n";
    for (size_t s = 0; s < fs.speaker_gender.size(); ++s) {
        mf << "speaker\t" << s << "\t" << fs.speaker_gender[s] << "\n";
    }
    for (const auto& item : fs.items) {
        mf << "utt\t" << item.id << "\t" << item.speaker << "\t" << item.mel.rows() << "\t"
           << item.wave.samples.size() << "\n";
    }
}

FeatureSet read_feature_set(const std::string& dir) {
    const std::string manifest_path = dir + "/manifest.tsv";
    std::ifstream mf(manifest_path);
    if (!mf) throw ConfigError("feature cache not found (missing " + manifest_path + ")");
    FeatureSet fs;

    Tensor mel_stats = read_tensor_file(dir + "/mel.stats");
    fs.mel_stats.mean.assign(mel_stats.data().begin(),
                             mel_stats.data().begin() + dsp::kMelChannels);
    fs.mel_stats.variance.assign(mel_stats.data().begin() + dsp::kMelChannels,
                                 mel_stats.data().end());
    Tensor ling_stats = read_tensor_file(dir + "/ling.stats");
    fs.ling_stats.min.assign(ling_stats.data().begin(),
                             ling_stats.data().begin() + kDurationDims);
    fs.ling_stats.max.assign(ling_stats.data().begin() + kDurationDims,
                             ling_stats.data().end());

    std::string line;
    while (std::getline(mf, line)) {
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        if (kind == "speaker") {
            size_t idx, gender;
            ls >> idx >> gender;
            if (fs.speaker_gender.size() <= idx) fs.speaker_gender.resize(idx + 1, 0);
            fs.speaker_gender[idx] = gender;
        } else if (kind == "utt") {
            FeatureItem item;
            size_t frames, samples;
            ls >> item.id >> item.speaker >> frames >> samples;
            item.mel = read_tensor_file(dir + "/" + item.id + ".mel");
            item.cond.linguistic = read_tensor_file(dir + "/" + item.id + ".ling");
            item.wave = read_wav(dir + "/" + item.id + ".wav");
            std::vector<double> code(kSpeakerCodeDims, 0.0);
            code[item.speaker] = 1.0;
            code[kMaxSpeakers] = static_cast<double>(fs.speaker_gender[item.speaker]);
            item.cond.speaker_code = Tensor::from_vector({1, kSpeakerCodeDims}, code);
            fs.items.push_back(std::move(item));
        }
    }
    if (fs.items.empty()) throw ConfigError("feature cache at " + dir + " lists no utterances");
    return fs;
}

uint64_t tensor_checksum(const Tensor& t) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : t.data()) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

}  // namespace wavetts::corpus
