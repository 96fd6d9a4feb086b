#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "wavetts/config.h"
#include "wavetts/corpus.h"

using namespace wavetts;
using namespace wavetts::train;
namespace fs = std::filesystem;

TEST_CASE("config round trip preserves every field") {
    RunConfig cfg;
    cfg.mode = SystemMode::kGan;
    cfg.seed = 991;
    cfg.hidden = 24;
    cfg.wavenet.blocks = 7;
    cfg.wavenet.upsample_strides = {8, 10};  // product 80
    cfg.n1 = 1;
    cfg.n2 = 3;
    cfg.n3 = 9;
    cfg.gamma_w = 0.25;
    cfg.corpus_duration_s = 0.5;
    cfg.features_dir = "/tmp/somewhere";
    const std::string path = "/tmp/wavetts_cfg_rt.cfg";
    save_config(path, cfg);
    RunConfig rt = load_config(path);
    CHECK(rt.mode == SystemMode::kGan);
    CHECK(rt.seed == 991);
    CHECK(rt.hidden == 24);
    CHECK(rt.wavenet.blocks == 7);
    CHECK(rt.wavenet.upsample_strides == std::vector<size_t>{8, 10});
    CHECK(rt.n1 == 1);
    CHECK(rt.n2 == 3);
    CHECK(rt.n3 == 9);
    CHECK(rt.gamma_w == 0.25);
    CHECK(rt.corpus_duration_s == 0.5);
    CHECK(rt.features_dir == "/tmp/somewhere");
    fs::remove(path);
}

TEST_CASE("config validation errors") {
    RunConfig cfg;
    cfg.n1 = 5;
    cfg.n2 = 3;
    CHECK_THROWS_AS(cfg.validate_and_normalize(), ConfigError);

    RunConfig strides;
    strides.wavenet.upsample_strides = {4, 4, 4};
    CHECK_THROWS_AS(strides.validate_and_normalize(), ConfigError);

    RunConfig speakers;
    speakers.corpus_speakers = 9;
    CHECK_THROWS_AS(speakers.validate_and_normalize(), ConfigError);

    RunConfig cfg2;
    CHECK_THROWS_AS(apply_key_value(cfg2, "no_such_key", "1"), ConfigError);
    CHECK_THROWS_AS(apply_key_value(cfg2, "mode", "bogus"), ConfigError);
}

TEST_CASE("mse-baseline forces the waveform-loss weight to zero") {
    RunConfig cfg;
    cfg.mode = SystemMode::kMseBaseline;
    cfg.gamma_w = 0.5;
    cfg.validate_and_normalize();
    CHECK(cfg.gamma_w == 0.0);
}

TEST_CASE("config file parsing: comments, whitespace, bad lines") {
    const std::string path = "/tmp/wavetts_cfg_parse.cfg";
    {
        std::ofstream out(path);
        out << "# comment line\n"
            << "  seed=42  \n"
            << "\n"
            << "mode=wgan-gp # trailing comment\n";
    }
    RunConfig cfg = load_config(path);
    CHECK(cfg.seed == 42);
    CHECK(cfg.mode == SystemMode::kWganGp);
    {
        std::ofstream out(path);
        out << "not a key value line\n";
    }
    CHECK_THROWS_AS(load_config(path), ConfigError);
    fs::remove(path);
}

#ifndef WAVETTS_CLI_PATH
#define WAVETTS_CLI_PATH "wavetts"
#endif

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(WAVETTS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli: prepare is idempotent and exit codes are classed") {
    const std::string dir = "/tmp/wavetts_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string common = "--set paths.features=" + dir +
                               "/feat --set corpus.speakers=1 --set corpus.utterances=2 "
                               "--set corpus.duration_s=0.2 --set seed=3";
    REQUIRE(run_cli("prepare " + common) == 0);
    const auto mtime = fs::last_write_time(dir + "/feat/manifest.tsv");
    REQUIRE(run_cli("prepare " + common) == 0);  // cache hit
    CHECK(fs::last_write_time(dir + "/feat/manifest.tsv") == mtime);

    // Missing feature cache is a config error (exit 2).
    CHECK(run_cli("train-acoustic --set paths.features=" + dir + "/nope") == 2);
    // Unknown config key is a config error.
    CHECK(run_cli("prepare --set bogus_key=1") == 2);
    // Corrupted gradcheck is a numeric failure (exit 3).
    CHECK(run_cli("verify --suite gradcheck --corrupt-backward sigmoid") == 3);
    // Unknown utterance id names the error class.
    CHECK(run_cli("synthesize --abs --utt nope --set paths.features=" + dir +
                  "/feat --set paths.vocoder_checkpoint=" + dir + "/missing.ckpt") != 0);
    fs::remove_all(dir);
}

TEST_CASE("cli: verify report is machine readable") {
    const std::string out_path = "/tmp/wavetts_verify_report.txt";
    const std::string cmd = std::string(WAVETTS_CLI_PATH) +
                            " verify --suite normalization > " + out_path + " 2>&1";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    std::ifstream in(out_path);
    std::string line;
    size_t lines = 0;
    while (std::getline(in, line)) {
        ++lines;
        CHECK(line.find('\t') != std::string::npos);
        CHECK((line.find("PASS") != std::string::npos ||
               line.find("FAIL") != std::string::npos));
        CHECK(line.find("tol=") != std::string::npos);
        CHECK(line.find("measured=") != std::string::npos);
    }
    CHECK(lines >= 4);
    fs::remove(out_path);
}

TEST_CASE("defaults follow the stated optimizer and loss constants") {
    RunConfig cfg;
    CHECK(cfg.lr_g == 0.01);
    CHECK(cfg.lr_d == 0.001);
    CHECK(cfg.gamma_w == 1e-4);
    CHECK(cfg.lambda == 10.0);
    CHECK(cfg.ema_decay == 0.9999);
    CHECK(cfg.wavenet.mixtures == 10);
    CHECK(cfg.wavenet.upsample_strides == std::vector<size_t>{4, 4, 5});
}
