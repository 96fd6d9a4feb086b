#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "wavetts/trainer.h"

using namespace wavetts;
using namespace wavetts::train;
namespace fs = std::filesystem;

namespace {

RunConfig micro_config() {
    RunConfig cfg;
    cfg.seed = 4242;
    cfg.hidden = 8;
    cfg.sru_layers = 2;
    cfg.critic_width = 8;
    cfg.wavenet.blocks = 3;
    cfg.wavenet.residual_channels = 8;
    cfg.wavenet.skip_channels = 8;
    cfg.wavenet.mixtures = 2;
    cfg.wavenet.embed_dim = 4;
    cfg.wavenet.dilation_cycle = 3;
    cfg.n1 = 2;
    cfg.n2 = 4;
    cfg.n3 = 6;
    cfg.batch = 2;
    cfg.max_frames = 6;
    cfg.vocoder_epochs = 2;
    cfg.corpus_speakers = 1;
    cfg.corpus_utterances = 3;
    cfg.corpus_duration_s = 0.1;
    cfg.validate_and_normalize();
    return cfg;
}

corpus::FeatureSet micro_features(const RunConfig& cfg) {
    corpus::SyntheticSpec spec{cfg.corpus_speakers, cfg.corpus_utterances,
                               cfg.corpus_duration_s, cfg.seed};
    return corpus::prepare_features(corpus::make_synthetic_corpus(spec));
}

std::vector<MetricsRow> strip_wall(std::vector<MetricsRow> rows) {
    for (auto& r : rows) r.wall_seconds = 0.0;
    return rows;
}

bool rows_equal(const std::vector<MetricsRow>& a, const std::vector<MetricsRow>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].epoch != b[i].epoch || a[i].stage != b[i].stage) return false;
        for (double d : {a[i].l_mse - b[i].l_mse, a[i].l_adv - b[i].l_adv,
                         a[i].l_dml - b[i].l_dml, a[i].l_d - b[i].l_d,
                         a[i].gamma_d - b[i].gamma_d}) {
            if (d != 0.0) return false;
        }
    }
    return true;
}

uint64_t generator_checksum(nets::GeneratorParams& g) {
    uint64_t h = 0;
    nets::generator_visit(g, [&](const std::string&, Tensor& t) {
        h ^= corpus::tensor_checksum(t);
    });
    return h;
}

}  // namespace

TEST_CASE("gamma_d recomputation satisfies the ratio rule") {
    const double gamma = recompute_gamma_d(0.7311, 2.44);
    CHECK(std::fabs(gamma * 2.44 - 0.7311) < 1e-9);
    CHECK(recompute_gamma_d(1.0, 0.0) == 0.0);
}

TEST_CASE("stage machine: term activation follows n1/n2/n3 and vocoder stays frozen") {
    RunConfig cfg = micro_config();
    auto features = micro_features(cfg);

    const std::string dir = "/tmp/wavetts_trainer_stage";
    fs::remove_all(dir);
    fs::create_directories(dir);
    cfg.vocoder_checkpoint = dir + "/vocoder.ckpt";
    train_vocoder(features, cfg, cfg.vocoder_checkpoint);

    auto result = train_acoustic(features, cfg, dir + "/run");
    REQUIRE(result.metrics.size() == 6);
    for (const auto& row : result.metrics) {
        if (row.epoch <= 2) {
            CHECK(row.stage == "warmup");
            CHECK(row.l_adv == 0.0);
            CHECK(row.l_d == 0.0);
            CHECK(row.l_dml == 0.0);
        } else if (row.epoch <= 4) {
            CHECK(row.stage == "adversarial");
            CHECK(row.l_adv != 0.0);
            CHECK(row.l_dml == 0.0);
        } else {
            CHECK(row.stage == "finetune");
            CHECK(row.l_adv != 0.0);
            CHECK(row.l_dml != 0.0);
        }
    }
    CHECK(result.vocoder_checksum_before != 0);
    CHECK(result.vocoder_checksum_before == result.vocoder_checksum_after);
    fs::remove_all(dir);
}

TEST_CASE("training is deterministic under a fixed seed") {
    RunConfig cfg = micro_config();
    cfg.n3 = 4;  // no vocoder needed
    cfg.gamma_w = 0.0;
    auto features = micro_features(cfg);
    auto r1 = train_acoustic(features, cfg, "");
    auto r2 = train_acoustic(features, cfg, "");
    CHECK(rows_equal(strip_wall(r1.metrics), strip_wall(r2.metrics)));
    CHECK(generator_checksum(r1.models.generator) == generator_checksum(r2.models.generator));
}

TEST_CASE("checkpoint resume reproduces the uninterrupted run bit-exactly") {
    RunConfig cfg = micro_config();
    cfg.n3 = 5;
    cfg.gamma_w = 0.0;  // stages 1-2 only; vocoder not needed
    cfg.n2 = 5;
    auto features = micro_features(cfg);

    const std::string dir = "/tmp/wavetts_trainer_resume";
    fs::remove_all(dir);
    auto full = train_acoustic(features, cfg, dir + "/full");

    RunConfig cfg_half = cfg;
    cfg_half.n3 = 3;
    cfg_half.n2 = 3;
    train_acoustic(features, cfg_half, dir + "/half");
    auto resumed = train_acoustic(features, cfg, dir + "/resumed",
                                  dir + "/half/acoustic_epoch3.ckpt");

    CHECK(generator_checksum(full.models.generator) ==
          generator_checksum(resumed.models.generator));
    REQUIRE(resumed.metrics.size() == 2);  // epochs 4, 5
    CHECK(full.metrics[3].l_mse == resumed.metrics[0].l_mse);
    CHECK(full.metrics[4].l_mse == resumed.metrics[1].l_mse);
    CHECK(full.metrics[4].l_d == resumed.metrics[1].l_d);
    fs::remove_all(dir);
}

TEST_CASE("vocoder training: NLL decreases, resume and determinism hold") {
    RunConfig cfg = micro_config();
    cfg.corpus_utterances = 4;
    cfg.vocoder_epochs = 6;
    cfg.adam_lr = 0.005;
    cfg.adam_warmup = 3;
    auto features = micro_features(cfg);
    const std::string dir = "/tmp/wavetts_trainer_voc";
    fs::remove_all(dir);
    fs::create_directories(dir);

    auto r1 = train_vocoder(features, cfg, dir + "/a.ckpt");
    CHECK(r1.final_heldout_nll < r1.initial_heldout_nll);

    auto r2 = train_vocoder(features, cfg, dir + "/b.ckpt");
    NamedParams p1, p2;
    vocoder::wavenet_visit(r1.params, [&](const std::string& n, Tensor& t) { p1.add(n, t); });
    vocoder::wavenet_visit(r2.params, [&](const std::string& n, Tensor& t) { p2.add(n, t); });
    for (size_t i = 0; i < p1.size(); ++i) {
        CHECK(corpus::tensor_checksum(p1.tensors[i]) == corpus::tensor_checksum(p2.tensors[i]));
    }

    // Resume: 1 epoch + 1 more equals 2 straight epochs.
    RunConfig cfg1 = cfg;
    cfg1.vocoder_epochs = 1;
    train_vocoder(features, cfg1, dir + "/half.ckpt");
    auto resumed = train_vocoder(features, cfg, dir + "/resumed.ckpt", dir + "/half.ckpt");
    NamedParams pr;
    vocoder::wavenet_visit(resumed.params, [&](const std::string& n, Tensor& t) { pr.add(n, t); });
    for (size_t i = 0; i < p1.size(); ++i) {
        CHECK(corpus::tensor_checksum(p1.tensors[i]) == corpus::tensor_checksum(pr.tensors[i]));
    }
    fs::remove_all(dir);
}

TEST_CASE("all five system configurations run to completion") {
    RunConfig base = micro_config();
    base.n1 = 1;
    base.n2 = 2;
    base.n3 = 3;
    auto features = micro_features(base);
    const std::string dir = "/tmp/wavetts_trainer_matrix";
    fs::remove_all(dir);
    fs::create_directories(dir);
    base.vocoder_checkpoint = dir + "/voc.ckpt";
    {
        RunConfig voc_cfg = base;
        voc_cfg.vocoder_epochs = 1;
        train_vocoder(features, voc_cfg, base.vocoder_checkpoint);
    }

    struct System {
        const char* name;
        SystemMode mode;
        double gamma_w;
    };
    const System systems[] = {
        {"baseline", SystemMode::kMseBaseline, 0.0},
        {"gan", SystemMode::kGan, 0.0},
        {"gan_w", SystemMode::kGan, 1e-4},
        {"wgan_gp", SystemMode::kWganGp, 0.0},
        {"wgan_gp_w", SystemMode::kWganGp, 1e-4},
    };
    for (const auto& sys : systems) {
        RunConfig cfg = base;
        cfg.mode = sys.mode;
        cfg.gamma_w = sys.gamma_w;
        cfg.validate_and_normalize();
        auto result = train_acoustic(features, cfg, "");
        REQUIRE(result.metrics.size() == 3);
        const auto& last = result.metrics.back();
        if (sys.mode == SystemMode::kMseBaseline) {
            CHECK(last.l_adv == 0.0);
            CHECK(last.l_dml == 0.0);
            CHECK(last.stage == "warmup");
        } else if (sys.gamma_w > 0.0) {
            CHECK(last.l_dml != 0.0);
        } else {
            CHECK(last.l_dml == 0.0);
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("synthesis produces frames*hop samples deterministically") {
    RunConfig cfg = micro_config();
    auto features = micro_features(cfg);
    const std::string dir = "/tmp/wavetts_trainer_synth";
    fs::remove_all(dir);
    fs::create_directories(dir);
    cfg.vocoder_checkpoint = dir + "/voc.ckpt";
    RunConfig voc_cfg = cfg;
    voc_cfg.vocoder_epochs = 1;
    train_vocoder(features, voc_cfg, cfg.vocoder_checkpoint);
    LoadedVocoder voc = load_vocoder(Checkpoint::load(cfg.vocoder_checkpoint));

    cfg.gamma_w = 0.0;
    cfg.n2 = 2;
    cfg.n3 = 2;
    auto trained = train_acoustic(features, cfg, "");

    const auto& item = features.items[0];
    RngStream s1(9), s2(9);
    Waveform a = synthesize_utterance(item, cfg, &trained.models, voc, false, s1);
    Waveform b = synthesize_utterance(item, cfg, &trained.models, voc, false, s2);
    CHECK(a.samples.size() == item.mel.rows() * dsp::kHop);
    CHECK(a.samples == b.samples);

    RngStream s3(9);
    Waveform abs = synthesize_utterance(item, cfg, nullptr, voc, true, s3);
    CHECK(abs.samples.size() == item.mel.rows() * dsp::kHop);
    fs::remove_all(dir);
}
