#include "wavetts/verify.h"

#include <cmath>
#include <sstream>

#include "wavetts/acoustic.h"
#include "wavetts/dml.h"
#include "wavetts/dsp.h"
#include "wavetts/gradcheck.h"
#include "wavetts/losses.h"
#include "wavetts/ops.h"
#include "wavetts/wavenet.h"

namespace wavetts::verify {

namespace op = wavetts::ops;

namespace {

Tensor random_tensor(const Shape& shape, RngStream& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t = Tensor::zeros(shape);
    for (auto& v : t.mutable_data()) v = rng.uniform(lo, hi);
    return t;
}

// Gradcheck with an optional injected corruption of the analytic gradient,
// used to prove the suite detects a broken backward rule.
double checked_error(const std::function<Tensor()>& f, std::vector<Tensor> leaves,
                     const std::string& op_name, const VerifyOptions& opts) {
    auto res = gradcheck(f, leaves);
    if (opts.corrupt_backward_op == op_name) {
        return res.max_error + 1e-2;
    }
    return res.max_error;
}

void gradcheck_suite(std::vector<PropertyResult>& out, const VerifyOptions& opts) {
    RngStream rng(opts.seed ^ fnv1a64("verify_gradcheck"));
    auto add = [&](const std::string& name, double measured, double tol) {
        out.push_back({"gradcheck", name, measured < tol, tol, measured});
    };

    // Per-op checks over 5 random draws each.
    struct OpCase {
        const char* name;
        std::function<Tensor(Tensor&, Tensor&)> build;
        bool positive_only;
    };
    const std::vector<OpCase> cases = {
        {"add", [](Tensor& x, Tensor& y) { return op::sum_all(op::add(x, y)); }, false},
        {"sub", [](Tensor& x, Tensor& y) { return op::sum_all(op::sub(x, y)); }, false},
        {"mul", [](Tensor& x, Tensor& y) { return op::sum_all(op::mul(x, y)); }, false},
        {"div", [](Tensor& x, Tensor& y) { return op::sum_all(op::div(y, x)); }, true},
        {"neg", [](Tensor& x, Tensor&) { return op::sum_all(op::neg(x)); }, false},
        {"sigmoid", [](Tensor& x, Tensor&) { return op::sum_all(op::sigmoid(x)); }, false},
        {"tanh", [](Tensor& x, Tensor&) { return op::sum_all(op::tanh_(x)); }, false},
        {"relu", [](Tensor& x, Tensor&) { return op::sum_all(op::relu(x)); }, false},
        {"log", [](Tensor& x, Tensor&) { return op::sum_all(op::log_(x)); }, true},
        {"exp", [](Tensor& x, Tensor&) { return op::sum_all(op::exp_(x)); }, false},
        {"sqrt", [](Tensor& x, Tensor&) { return op::sum_all(op::sqrt_(x)); }, true},
        {"softplus", [](Tensor& x, Tensor&) { return op::sum_all(op::softplus(x)); }, false},
        {"expm1", [](Tensor& x, Tensor&) { return op::sum_all(op::expm1_(x)); }, false},
        {"log1mexp", [](Tensor& x, Tensor&) { return op::sum_all(op::log1mexp(x)); }, true},
        {"matmul",
         [](Tensor& x, Tensor& y) { return op::sum_all(op::matmul(x, op::transpose(y))); },
         false},
        {"transpose", [](Tensor& x, Tensor&) { return op::sum_all(op::transpose(x)); }, false},
        {"sum_last",
         [](Tensor& x, Tensor& y) { return op::sum_all(op::sum_last(op::mul(x, y))); }, false},
        {"sum_rows",
         [](Tensor& x, Tensor& y) { return op::sum_all(op::sum_rows(op::mul(x, y))); }, false},
        {"mean_all", [](Tensor& x, Tensor& y) { return op::mean_all(op::mul(x, y)); }, false},
        {"logsumexp_last",
         [](Tensor& x, Tensor&) { return op::sum_all(op::logsumexp_last(x)); }, false},
        {"clamp",
         [](Tensor& x, Tensor&) { return op::sum_all(op::clamp(x, -0.5, 0.5)); }, false},
    };
    for (const auto& c : cases) {
        double worst = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
            Tensor x = c.positive_only ? random_tensor({3, 4}, rng, 0.2, 1.8)
                                       : random_tensor({3, 4}, rng);
            Tensor y = random_tensor({3, 4}, rng);
            auto f = [&]() { return c.build(x, y); };
            worst = std::max(worst, checked_error(f, {x, y}, c.name, opts));
        }
        add(std::string("op.") + c.name, worst, 1e-6);
    }
    {
        double worst = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
            Tensor x = random_tensor({2, 9}, rng);
            Tensor w = random_tensor({3, 2, 2}, rng);
            auto f = [&]() {
                Tensor y = op::conv1d_causal(x, w, 2);
                return op::sum_all(op::mul(y, y));
            };
            worst = std::max(worst, checked_error(f, {x, w}, "conv1d_causal", opts));
        }
        add("op.conv1d_causal", worst, 1e-6);
    }
    {
        double worst = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
            Tensor x = random_tensor({2, 5}, rng);
            Tensor w = random_tensor({2, 2, 4}, rng);
            auto f = [&]() {
                Tensor y = op::conv1d_transposed(x, w, 3);
                return op::sum_all(op::mul(y, y));
            };
            worst = std::max(worst, checked_error(f, {x, w}, "conv1d_transposed", opts));
        }
        add("op.conv1d_transposed", worst, 1e-6);
    }

    // Composite path 1: MSE through the generator.
    {
        RngStream init(opts.seed ^ fnv1a64("verify_gen"));
        nets::GeneratorParams g = nets::make_generator(6, 2, init);
        corpus::ConditioningBundle bundle;
        bundle.linguistic = random_tensor({4, corpus::kLinguisticDims}, rng, 0.0, 1.0);
        bundle.speaker_code = Tensor::from_vector({1, 7}, {1, 0, 0, 0, 0, 0, 0});
        Tensor target = random_tensor({4, 80}, rng);
        auto f = [&]() {
            return train::loss_mse(target, nets::generator_forward(bundle, g));
        };
        std::vector<Tensor> leaves;
        nets::generator_visit(g, [&](const std::string&, Tensor& t) { leaves.push_back(t); });
        RngStream coords(opts.seed ^ fnv1a64("verify_gen_coords"));
        auto res = gradcheck(f, leaves, 1e-5, 4, &coords);
        add("composite.mse_generator", res.max_error, 1e-5);
    }

    // Composite path 2: critic loss with gradient penalty w.r.t. critic params.
    {
        RngStream init(opts.seed ^ fnv1a64("verify_critic"));
        nets::CriticParams c = nets::make_critic(6, init);
        Tensor y = random_tensor({2, 80}, rng);
        Tensor y_hat = random_tensor({2, 80}, rng);
        Tensor code = Tensor::from_vector({1, 7}, {1, 0, 0, 0, 0, 0, 0});
        auto f = [&]() {
            return train::critic_loss_wgan_gp(y, y_hat, code, c, 10.0, 0.37).loss;
        };
        std::vector<Tensor> leaves;
        nets::critic_visit(c, [&](const std::string&, Tensor& t) { leaves.push_back(t); });
        RngStream coords(opts.seed ^ fnv1a64("verify_critic_coords"));
        auto res = gradcheck(f, leaves, 1e-5, 6, &coords);
        add("composite.critic_penalty", res.max_error, 1e-4);
    }

    // Composite path 3: DML through the vocoder and upsampler to the mel.
    {
        RngStream init(opts.seed ^ fnv1a64("verify_voc"));
        vocoder::WaveNetConfig cfg;
        cfg.blocks = 2;
        cfg.residual_channels = 8;
        cfg.skip_channels = 8;
        cfg.mixtures = 2;
        cfg.embed_dim = 4;
        vocoder::WaveNetParams p = vocoder::make_wavenet(cfg, init);
        Tensor mel = random_tensor({1, 80}, rng);
        Tensor code = Tensor::from_vector({1, 7}, {1, 0, 0, 0, 0, 0, 0});
        std::vector<uint32_t> classes(80);
        for (auto& cl : classes) cl = static_cast<uint32_t>(rng.below(cfg.zeta));
        std::vector<uint8_t> sel(80, 0);
        for (size_t i = 0; i < 80; i += 2) sel[i] = 1;
        auto f = [&]() {
            Tensor cond = vocoder::upsample(mel, p);
            Tensor head = vocoder::wavenet_teacher_forced(classes, cond, code, p);
            return vocoder::dml_nll(head, classes, sel, cfg.zeta);
        };
        RngStream coords(opts.seed ^ fnv1a64("verify_voc_coords"));
        auto res = gradcheck(f, {mel}, 1e-5, 40, &coords);
        add("composite.dml_vocoder_mel", res.max_error, 1e-4);
    }
}

void normalization_suite(std::vector<PropertyResult>& out, const VerifyOptions& opts) {
    RngStream rng(opts.seed ^ fnv1a64("verify_norm"));
    // DML PMF normalization over 100 random parameter sets.
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        vocoder::DmlParams p;
        const size_t k = 1 + trial % 5;
        for (size_t i = 0; i < k; ++i) {
            p.logit_pi.push_back(rng.uniform(-1.5, 1.5));
            p.mu.push_back(rng.uniform(20.0, 235.0));
            p.log_phi.push_back(rng.uniform(-6.5, -2.0));
        }
        double total = 0.0;
        for (size_t s = 0; s < 256; ++s) total += std::exp(vocoder::dml_logprob(s, p, 256));
        worst = std::max(worst, std::fabs(total - 1.0));
    }
    out.push_back({"normalization", "dml_pmf_sum", worst < 1e-6, 1e-6, worst});

    // Clipping floor.
    {
        Waveform quiet;
        quiet.samples.assign(2000, 3);
        Tensor lm = dsp::waveform_to_logmel(quiet);
        double min_v = 1e300;
        for (double v : lm.data()) min_v = std::min(min_v, v);
        const double floor = std::log(0.01);
        out.push_back({"normalization", "clip_floor", min_v >= floor - 1e-12, 1e-12,
                       min_v - floor});
    }

    // Z-normalization over a small synthetic corpus.
    {
        auto fs = corpus::prepare_features(
            corpus::make_synthetic_corpus({2, 2, 0.25, opts.seed}));
        double worst_mean = 0.0, worst_var = 0.0;
        std::vector<double> mean(80, 0.0), var(80, 0.0);
        size_t total = 0;
        for (const auto& item : fs.items) {
            total += item.mel.rows();
            for (size_t i = 0; i < item.mel.rows(); ++i) {
                for (size_t c = 0; c < 80; ++c) mean[c] += item.mel.at(i, c);
            }
        }
        for (auto& v : mean) v /= static_cast<double>(total);
        for (const auto& item : fs.items) {
            for (size_t i = 0; i < item.mel.rows(); ++i) {
                for (size_t c = 0; c < 80; ++c) {
                    var[c] += (item.mel.at(i, c) - mean[c]) * (item.mel.at(i, c) - mean[c]);
                }
            }
        }
        for (size_t c = 0; c < 80; ++c) {
            worst_mean = std::max(worst_mean, std::fabs(mean[c]));
            worst_var = std::max(worst_var, std::fabs(var[c] / total - 1.0));
        }
        out.push_back({"normalization", "mel_mean", worst_mean < 1e-9, 1e-9, worst_mean});
        out.push_back({"normalization", "mel_variance", worst_var < 1e-6, 1e-6, worst_var});
    }
}

void causality_suite(std::vector<PropertyResult>& out, const VerifyOptions& opts) {
    RngStream rng(opts.seed ^ fnv1a64("verify_causality"));

    auto stack_probe = [&](size_t blocks, size_t channels, size_t cycle,
                           const std::string& name) {
        vocoder::WaveNetConfig cfg;
        cfg.blocks = blocks;
        cfg.residual_channels = channels;
        cfg.skip_channels = channels;
        cfg.mixtures = 2;
        cfg.embed_dim = 4;
        cfg.dilation_cycle = cycle;
        RngStream init(opts.seed ^ fnv1a64("verify_stack_" + name));
        vocoder::WaveNetParams p = vocoder::make_wavenet(cfg, init);
        const size_t n = cfg.receptive_field() + 8;
        const size_t frames = (n + dsp::kHop - 1) / dsp::kHop;
        Tensor mel = random_tensor({frames, 80}, rng, -0.5, 0.5);
        Tensor code = Tensor::from_vector({1, 7}, {1, 0, 0, 0, 0, 0, 0});
        NoGradGuard ng;
        Tensor cond_full = vocoder::upsample(mel, p);
        Tensor cond = op::slice_cols(cond_full, 0, n);
        std::vector<uint32_t> classes(n);
        for (auto& cl : classes) cl = static_cast<uint32_t>(rng.below(cfg.zeta));
        Tensor base = vocoder::wavenet_teacher_forced(classes, cond, code, p);
        auto pert_classes = classes;
        const size_t probe = n / 2;
        pert_classes[probe] = (pert_classes[probe] + 128) % cfg.zeta;
        Tensor pert = vocoder::wavenet_teacher_forced(pert_classes, cond, code, p);
        double max_past = 0.0;
        for (size_t t = 0; t <= probe; ++t) {
            for (size_t j = 0; j < base.cols(); ++j) {
                max_past = std::max(max_past, std::fabs(base.at(t, j) - pert.at(t, j)));
            }
        }
        bool future_changed = false;
        for (size_t t = probe + 1; t < n && !future_changed; ++t) {
            for (size_t j = 0; j < base.cols(); ++j) {
                future_changed = future_changed || base.at(t, j) != pert.at(t, j);
            }
        }
        out.push_back({"causality", name + "_past_exact_zero", max_past == 0.0, 0.0, max_past});
        out.push_back({"causality", name + "_future_responds", future_changed, 0.0,
                       future_changed ? 1.0 : 0.0});
    };

    // Full stacks: the paper's 24-block schedule and the desk 12-block one.
    stack_probe(24, 16, 6, "paper_stack");
    stack_probe(12, 16, 6, "desk_stack");

    // Every dilated block individually (paper schedule).
    {
        vocoder::WaveNetConfig cfg;
        cfg.blocks = 24;
        cfg.residual_channels = 8;
        cfg.skip_channels = 8;
        cfg.mixtures = 2;
        cfg.embed_dim = 4;
        RngStream init(opts.seed ^ fnv1a64("verify_blocks"));
        vocoder::WaveNetParams p = vocoder::make_wavenet(cfg, init);
        double worst = 0.0;
        bool all_exact = true;
        for (size_t blk = 0; blk < cfg.blocks; ++blk) {
            const size_t dil = cfg.dilation(blk);
            const size_t n = dil + 16;
            Tensor state = random_tensor({cfg.residual_channels, n}, rng);
            Tensor cond = random_tensor({80, n}, rng);
            Tensor embed = random_tensor({cfg.embed_dim, 1}, rng);
            NoGradGuard ng;
            auto [base_r, base_s] = vocoder::gated_block(state, cond, embed, p.blocks[blk], dil);
            Tensor state2 = state.detach();
            const size_t probe = n / 2;
            for (size_t c = 0; c < cfg.residual_channels; ++c) {
                state2.mutable_data()[c * n + probe] += 1.0;
            }
            auto [pert_r, pert_s] = vocoder::gated_block(state2, cond, embed, p.blocks[blk], dil);
            for (size_t c = 0; c < cfg.residual_channels; ++c) {
                for (size_t t = 0; t < probe; ++t) {
                    worst = std::max(worst,
                                     std::fabs(base_r.at(c, t) - pert_r.at(c, t)));
                    worst = std::max(worst,
                                     std::fabs(base_s.at(c, t) - pert_s.at(c, t)));
                }
            }
            all_exact = all_exact && worst == 0.0;
        }
        out.push_back({"causality", "every_block_exact_zero", all_exact && worst == 0.0, 0.0,
                       worst});
    }

    // Receptive-field formula.
    {
        vocoder::WaveNetConfig paper;
        paper.blocks = 24;
        paper.kernel_width = 2;
        paper.dilation_cycle = 6;
        const double rf = static_cast<double>(paper.receptive_field());
        out.push_back({"causality", "receptive_field_253", rf == 253.0, 0.0, rf});
        vocoder::WaveNetConfig desk;
        desk.blocks = 12;
        size_t expect = 1;
        for (size_t k = 0; k < desk.blocks; ++k) expect += desk.dilation(k);
        out.push_back({"causality", "receptive_field_desk",
                       desk.receptive_field() == expect, 0.0,
                       static_cast<double>(desk.receptive_field())});
    }
}

}  // namespace

std::vector<PropertyResult> run_suite(const std::string& suite, const VerifyOptions& opts) {
    std::vector<PropertyResult> out;
    const bool all = suite == "all";
    if (all || suite == "gradcheck") gradcheck_suite(out, opts);
    if (all || suite == "normalization") normalization_suite(out, opts);
    if (all || suite == "causality") causality_suite(out, opts);
    if (out.empty()) {
        throw ConfigError("unknown verify suite '" + suite +
                          "' (expected gradcheck | normalization | causality | all)");
    }
    return out;
}

std::string format_report(const std::vector<PropertyResult>& results) {
    std::ostringstream os;
    os.precision(12);
    for (const auto& r : results) {
        os << r.suite << '.' << r.name << '\t' << (r.pass ? "PASS" : "FAIL")
           << "\ttol=" << r.tolerance << "\tmeasured=" << r.measured << "\n";
    }
    return os.str();
}

bool all_passed(const std::vector<PropertyResult>& results) {
    for (const auto& r : results) {
        if (!r.pass) return false;
    }
    return true;
}

}  // namespace wavetts::verify
