#include "wavetts/config.h"

#include <fstream>
#include <sstream>

#include "wavetts/error.h"

namespace wavetts::train {

std::string mode_name(SystemMode m) {
    switch (m) {
        case SystemMode::kMseBaseline: return "mse-baseline";
        case SystemMode::kGan: return "gan";
        case SystemMode::kWganGp: return "wgan-gp";
    }
    return "?";
}

SystemMode parse_mode(const std::string& s) {
    if (s == "mse-baseline") return SystemMode::kMseBaseline;
    if (s == "gan") return SystemMode::kGan;
    if (s == "wgan-gp") return SystemMode::kWganGp;
    throw ConfigError("unknown mode '" + s + "' (expected mse-baseline | gan | wgan-gp)");
}

namespace {

size_t to_size(const std::string& key, const std::string& v) {
    try {
        return static_cast<size_t>(std::stoull(v));
    } catch (...) {
        throw ConfigError("config key '" + key + "': bad integer '" + v + "'");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        return std::stod(v);
    } catch (...) {
        throw ConfigError("config key '" + key + "': bad number '" + v + "'");
    }
}

std::vector<size_t> to_size_list(const std::string& key, const std::string& v) {
    std::vector<size_t> out;
    std::istringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(to_size(key, item));
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

}  // namespace

void apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "version") {
        cfg.version = static_cast<uint32_t>(to_size(key, value));
    } else if (key == "mode") {
        cfg.mode = parse_mode(value);
    } else if (key == "seed") {
        cfg.seed = to_size(key, value);
    } else if (key == "hidden") {
        cfg.hidden = to_size(key, value);
    } else if (key == "sru_layers") {
        cfg.sru_layers = to_size(key, value);
    } else if (key == "critic_width") {
        cfg.critic_width = to_size(key, value);
    } else if (key == "vocoder.blocks") {
        cfg.wavenet.blocks = to_size(key, value);
    } else if (key == "vocoder.residual_channels") {
        cfg.wavenet.residual_channels = to_size(key, value);
    } else if (key == "vocoder.skip_channels") {
        cfg.wavenet.skip_channels = to_size(key, value);
    } else if (key == "vocoder.kernel_width") {
        cfg.wavenet.kernel_width = to_size(key, value);
    } else if (key == "vocoder.dilation_cycle") {
        cfg.wavenet.dilation_cycle = to_size(key, value);
    } else if (key == "vocoder.mixtures") {
        cfg.wavenet.mixtures = to_size(key, value);
    } else if (key == "vocoder.zeta") {
        cfg.wavenet.zeta = to_size(key, value);
    } else if (key == "vocoder.embed_dim") {
        cfg.wavenet.embed_dim = to_size(key, value);
    } else if (key == "vocoder.upsample_strides") {
        cfg.wavenet.upsample_strides = to_size_list(key, value);
    } else if (key == "n1") {
        cfg.n1 = to_size(key, value);
    } else if (key == "n2") {
        cfg.n2 = to_size(key, value);
    } else if (key == "n3") {
        cfg.n3 = to_size(key, value);
    } else if (key == "gamma_w") {
        cfg.gamma_w = to_double(key, value);
    } else if (key == "lambda") {
        cfg.lambda = to_double(key, value);
    } else if (key == "gan_non_saturating") {
        cfg.gan_non_saturating = value == "1" || value == "true";
    } else if (key == "lr_g") {
        cfg.lr_g = to_double(key, value);
    } else if (key == "lr_d") {
        cfg.lr_d = to_double(key, value);
    } else if (key == "sgd_decay") {
        cfg.sgd_decay = to_double(key, value);
    } else if (key == "adam_lr") {
        cfg.adam_lr = to_double(key, value);
    } else if (key == "adam_warmup") {
        cfg.adam_warmup = to_size(key, value);
    } else if (key == "ema_decay") {
        cfg.ema_decay = to_double(key, value);
    } else if (key == "batch") {
        cfg.batch = to_size(key, value);
    } else if (key == "max_frames") {
        cfg.max_frames = to_size(key, value);
    } else if (key == "vocoder_epochs") {
        cfg.vocoder_epochs = to_size(key, value);
    } else if (key == "corpus.speakers") {
        cfg.corpus_speakers = to_size(key, value);
    } else if (key == "corpus.utterances") {
        cfg.corpus_utterances = to_size(key, value);
    } else if (key == "corpus.duration_s") {
        cfg.corpus_duration_s = to_double(key, value);
    } else if (key == "paths.corpus") {
        cfg.corpus_dir = value;
    } else if (key == "paths.features") {
        cfg.features_dir = value;
    } else if (key == "paths.run") {
        cfg.run_dir = value;
    } else if (key == "paths.vocoder_checkpoint") {
        cfg.vocoder_checkpoint = value;
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

void RunConfig::validate_and_normalize() {
    if (version != 1) {
        throw ConfigError("unsupported config version " + std::to_string(version));
    }
    if (!(n1 <= n2 && n2 <= n3)) {
        throw ConfigError("stage epochs must satisfy n1 <= n2 <= n3, got " +
                          std::to_string(n1) + ", " + std::to_string(n2) + ", " +
                          std::to_string(n3));
    }
    if (corpus_speakers > corpus::kMaxSpeakers) {
        throw ConfigError("corpus.speakers " + std::to_string(corpus_speakers) +
                          " exceeds the speaker-code capacity of 6");
    }
    if (mode == SystemMode::kMseBaseline) {
        gamma_w = 0.0;  // the MSE baseline trains with gamma_d = gamma_w = 0
    }
    if (gamma_w < 0.0 || lambda < 0.0) {
        throw ConfigError("loss weights must be nonnegative");
    }
    wavenet.validate();
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    RunConfig cfg;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos) continue;
        size_t end = line.find_last_not_of(" \t\r");
        line = line.substr(start, end - start + 1);
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        }
        apply_key_value(cfg, line.substr(0, eq), line.substr(eq + 1));
    }
    return cfg;
}

void save_config(const std::string& path, const RunConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config: " + path);
    out << "version=" << cfg.version << "\n";
    out << "mode=" << mode_name(cfg.mode) << "\n";
    out << "seed=" << cfg.seed << "\n";
    out << "hidden=" << cfg.hidden << "\n";
    out << "sru_layers=" << cfg.sru_layers << "\n";
    out << "critic_width=" << cfg.critic_width << "\n";
    out << "vocoder.blocks=" << cfg.wavenet.blocks << "\n";
    out << "vocoder.residual_channels=" << cfg.wavenet.residual_channels << "\n";
    out << "vocoder.skip_channels=" << cfg.wavenet.skip_channels << "\n";
    out << "vocoder.kernel_width=" << cfg.wavenet.kernel_width << "\n";
    out << "vocoder.dilation_cycle=" << cfg.wavenet.dilation_cycle << "\n";
    out << "vocoder.mixtures=" << cfg.wavenet.mixtures << "\n";
    out << "vocoder.zeta=" << cfg.wavenet.zeta << "\n";
    out << "vocoder.embed_dim=" << cfg.wavenet.embed_dim << "\n";
    out << "vocoder.upsample_strides=";
    for (size_t i = 0; i < cfg.wavenet.upsample_strides.size(); ++i) {
        out << (i ? "," : "") << cfg.wavenet.upsample_strides[i];
    }
    out << "\n";
    out << "n1=" << cfg.n1 << "\nn2=" << cfg.n2 << "\nn3=" << cfg.n3 << "\n";
    out << "gamma_w=" << cfg.gamma_w << "\n";
    out << "lambda=" << cfg.lambda << "\n";
    out << "gan_non_saturating=" << (cfg.gan_non_saturating ? 1 : 0) << "\n";
    out << "lr_g=" << cfg.lr_g << "\nlr_d=" << cfg.lr_d << "\n";
    out << "sgd_decay=" << cfg.sgd_decay << "\n";
    out << "adam_lr=" << cfg.adam_lr << "\nadam_warmup=" << cfg.adam_warmup << "\n";
    out << "ema_decay=" << cfg.ema_decay << "\n";
    out << "batch=" << cfg.batch << "\nmax_frames=" << cfg.max_frames << "\n";
    out << "vocoder_epochs=" << cfg.vocoder_epochs << "\n";
    out << "corpus.speakers=" << cfg.corpus_speakers << "\n";
    out << "corpus.utterances=" << cfg.corpus_utterances << "\n";
    out << "corpus.duration_s=" << cfg.corpus_duration_s << "\n";
    if (!cfg.corpus_dir.empty()) out << "paths.corpus=" << cfg.corpus_dir << "\n";
    if (!cfg.features_dir.empty()) out << "paths.features=" << cfg.features_dir << "\n";
    if (!cfg.run_dir.empty()) out << "paths.run=" << cfg.run_dir << "\n";
    if (!cfg.vocoder_checkpoint.empty()) {
        out << "paths.vocoder_checkpoint=" << cfg.vocoder_checkpoint << "\n";
    }
}

}  // namespace wavetts::train
