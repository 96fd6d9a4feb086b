#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wavetts/checkpoint.h"
#include "wavetts/config.h"
#include "wavetts/corpus.h"
#include "wavetts/error.h"
#include "wavetts/trainer.h"
#include "wavetts/verify.h"
#include "wavetts/wav_io.h"

namespace fs = std::filesystem;
using namespace wavetts;

namespace {

// Exit codes: 0 success, 2 configuration/usage, 3 numeric failure, 4 io.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets;
};

train::RunConfig build_config(const CommonArgs& args) {
    train::RunConfig cfg;
    if (!args.config_path.empty()) cfg = train::load_config(args.config_path);
    for (const auto& kv : args.sets) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        }
        train::apply_key_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate_and_normalize();
    return cfg;
}

// Run directory: explicit paths.run, else $WAVETTS_RUN_ROOT/<timestamp>-seed<seed>.
std::string resolve_run_dir(train::RunConfig& cfg) {
    if (!cfg.run_dir.empty()) return cfg.run_dir;
    const char* root = std::getenv("WAVETTS_RUN_ROOT");
    const std::string base = root && *root ? root : "runs";
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    const auto stamp = std::chrono::duration_cast<std::chrono::seconds>(now).count();
    cfg.run_dir = base + "/" + std::to_string(stamp) + "-seed" + std::to_string(cfg.seed);
    return cfg.run_dir;
}

void echo_config(const train::RunConfig& cfg, const std::string& run_dir) {
    fs::create_directories(run_dir);
    train::save_config(run_dir + "/config.effective", cfg);
}

int cmd_prepare(train::RunConfig cfg, bool force) {
    if (cfg.features_dir.empty()) throw ConfigError("prepare: paths.features is required");
    if (!force && fs::exists(cfg.features_dir + "/manifest.tsv")) {
        std::cout << "feature cache at " << cfg.features_dir << " is up to date\n";
        return kExitOk;
    }
    std::vector<corpus::Utterance> utts;
    if (!cfg.corpus_dir.empty() && fs::exists(cfg.corpus_dir)) {
        // Ingest WAV directory: <id>.wav plus <id>.ling sidecar in the cache
        // tensor format; speaker index parsed from the leading "spkN" token.
        size_t failures = 0;
        std::vector<fs::path> wavs;
        for (const auto& entry : fs::directory_iterator(cfg.corpus_dir)) {
            if (entry.path().extension() == ".wav") wavs.push_back(entry.path());
        }
        std::sort(wavs.begin(), wavs.end());
        for (const auto& path : wavs) {
            try {
                corpus::Utterance utt;
                utt.id = path.stem().string();
                utt.wave = read_wav(path.string());
                const std::string ling_path =
                    (path.parent_path() / (path.stem().string() + ".ling")).string();
                utt.cond.linguistic = corpus::read_tensor_file(ling_path);
                size_t speaker = 0;
                if (utt.id.rfind("spk", 0) == 0) speaker = std::stoul(utt.id.substr(3));
                if (speaker >= corpus::kMaxSpeakers) {
                    throw ConfigError(utt.id + ": speaker index out of range");
                }
                utt.speaker = speaker;
                std::vector<double> code(corpus::kSpeakerCodeDims, 0.0);
                code[speaker] = 1.0;
                utt.cond.speaker_code =
                    Tensor::from_vector({1, corpus::kSpeakerCodeDims}, code);
                utts.push_back(std::move(utt));
            } catch (const Error& e) {
                ++failures;
                std::cerr << "prepare: skipping " << path << ": " << e.what() << "\n";
            }
        }
        if (utts.empty()) {
            throw IoError("prepare: no readable utterances in " + cfg.corpus_dir + " (" +
                          std::to_string(failures) + " failed)");
        }
    } else {
        corpus::SyntheticSpec spec{cfg.corpus_speakers, cfg.corpus_utterances,
                                   cfg.corpus_duration_s, cfg.seed};
        utts = corpus::make_synthetic_corpus(spec);
    }
    corpus::FeatureSet features = corpus::prepare_features(utts);
    corpus::write_feature_set(cfg.features_dir, features, true);
    std::cout << "prepared " << features.items.size() << " utterances into "
              << cfg.features_dir << "\n";
    return kExitOk;
}

int cmd_train_vocoder(train::RunConfig cfg, const std::string& resume) {
    corpus::FeatureSet features = corpus::read_feature_set(cfg.features_dir);
    const std::string run_dir = resolve_run_dir(cfg);
    echo_config(cfg, run_dir);
    const std::string out = cfg.vocoder_checkpoint.empty() ? run_dir + "/vocoder.ckpt"
                                                           : cfg.vocoder_checkpoint;
    auto result = train::train_vocoder(features, cfg, out, resume);
    std::cout << "vocoder checkpoint: " << out << "\n"
              << "held-out NLL: initial " << result.initial_heldout_nll << ", final "
              << result.final_heldout_nll << "\n";
    return kExitOk;
}

int cmd_train_acoustic(train::RunConfig cfg, const std::string& resume) {
    corpus::FeatureSet features = corpus::read_feature_set(cfg.features_dir);
    const std::string run_dir = resolve_run_dir(cfg);
    echo_config(cfg, run_dir);
    auto result = train::train_acoustic(features, cfg, run_dir, resume);
    std::cout << "metrics: " << run_dir << "/metrics.csv\n";
    if (!result.metrics.empty()) {
        const auto& last = result.metrics.back();
        std::cout << "final epoch " << last.epoch << " (" << last.stage
                  << "): L_MSE=" << last.l_mse << " L_ADV=" << last.l_adv
                  << " L_DML=" << last.l_dml << "\n";
    }
    return kExitOk;
}

int cmd_synthesize(train::RunConfig cfg, const std::vector<std::string>& utt_ids, bool all,
                   bool abs_mode, const std::string& acoustic_ckpt) {
    corpus::FeatureSet features = corpus::read_feature_set(cfg.features_dir);
    if (cfg.vocoder_checkpoint.empty()) {
        throw ConfigError("synthesize: paths.vocoder_checkpoint is required");
    }
    train::LoadedVocoder voc =
        train::load_vocoder(train::Checkpoint::load(cfg.vocoder_checkpoint));

    std::optional<train::AcousticModels> models;
    if (!abs_mode) {
        if (acoustic_ckpt.empty()) {
            throw ConfigError("synthesize: --acoustic checkpoint required (or use --abs)");
        }
        models = train::load_acoustic(train::Checkpoint::load(acoustic_ckpt), cfg);
    }

    std::vector<const corpus::FeatureItem*> targets;
    if (all) {
        for (const auto& item : features.items) targets.push_back(&item);
    } else {
        for (const auto& id : utt_ids) {
            const corpus::FeatureItem* found = nullptr;
            for (const auto& item : features.items) {
                if (item.id == id) found = &item;
            }
            if (!found) {
                std::string known;
                for (const auto& item : features.items) known += " " + item.id;
                throw ConfigError("unknown utterance id '" + id + "'; available:" + known);
            }
            targets.push_back(found);
        }
    }
    if (targets.empty()) throw ConfigError("synthesize: no utterances selected");

    const std::string run_dir = resolve_run_dir(cfg);
    echo_config(cfg, run_dir);
    NamedRng rng(cfg.seed);
    for (const auto* item : targets) {
        RngStream& stream = rng.stream("synth/" + item->id);
        Waveform w = train::synthesize_utterance(
            *item, cfg, models ? &*models : nullptr, voc, abs_mode, stream);
        const std::string path =
            run_dir + "/" + item->id + (abs_mode ? "_abs" : "") + ".wav";
        write_wav(path, w);
        std::cout << path << " (" << w.samples.size() << " samples)\n";
    }
    return kExitOk;
}

int cmd_verify(const std::string& suite, uint64_t seed, const std::string& corrupt_op) {
    verify::VerifyOptions opts;
    opts.seed = seed;
    opts.corrupt_backward_op = corrupt_op;
    auto results = verify::run_suite(suite, opts);
    std::cout << verify::format_report(results);
    return verify::all_passed(results) ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-speaker TTS trainer: adversarial acoustic model with a "
                 "neural vocoder"};
    app.require_subcommand(1);

    CommonArgs common;
    bool force = false;
    bool abs_mode = false;
    bool all_utts = false;
    std::string resume, suite = "all", corrupt_op, acoustic_ckpt;
    uint64_t verify_seed = 1;
    std::vector<std::string> utt_ids;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "flat key=value config file");
        sub->add_option("--set", common.sets, "override: key=value (repeatable)");
    };

    auto* prepare = app.add_subcommand("prepare", "build the feature cache");
    add_common(prepare);
    prepare->add_flag("--force", force, "rebuild even if the cache exists");

    auto* train_voc = app.add_subcommand("train-vocoder", "pre-train the neural vocoder");
    add_common(train_voc);
    train_voc->add_option("--resume", resume, "resume from a vocoder checkpoint");

    auto* train_ac = app.add_subcommand("train-acoustic", "run staged acoustic training");
    add_common(train_ac);
    train_ac->add_option("--resume", resume, "resume from an acoustic checkpoint");

    auto* synth = app.add_subcommand("synthesize", "generate waveforms");
    add_common(synth);
    synth->add_option("--utt", utt_ids, "utterance id (repeatable)");
    synth->add_flag("--all", all_utts, "synthesize every utterance");
    synth->add_flag("--abs", abs_mode, "analysis by synthesis: vocode natural mel");
    synth->add_option("--acoustic", acoustic_ckpt, "acoustic-model checkpoint");

    auto* verify_cmd = app.add_subcommand("verify", "run property suites");
    verify_cmd->add_option("--suite", suite, "gradcheck | normalization | causality | all");
    verify_cmd->add_option("--seed", verify_seed, "suite seed");
    verify_cmd
        ->add_option("--corrupt-backward", corrupt_op,
                     "test fixture: corrupt the named op's gradient")
        ->group("");  // hidden

    CLI11_PARSE(app, argc, argv);

    try {
        if (prepare->parsed()) return cmd_prepare(build_config(common), force);
        if (train_voc->parsed()) return cmd_train_vocoder(build_config(common), resume);
        if (train_ac->parsed()) return cmd_train_acoustic(build_config(common), resume);
        if (synth->parsed()) {
            return cmd_synthesize(build_config(common), utt_ids, all_utts, abs_mode,
                                  acoustic_ckpt);
        }
        if (verify_cmd->parsed()) return cmd_verify(suite, verify_seed, corrupt_op);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitConfig;
}
