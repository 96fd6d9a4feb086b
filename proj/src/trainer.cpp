#include "wavetts/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "wavetts/dml.h"
#include "wavetts/ops.h"

namespace fs = std::filesystem;

namespace wavetts::train {

namespace op = wavetts::ops;

std::string stage_name(Stage s) {
    switch (s) {
        case Stage::kWarmup: return "warmup";
        case Stage::kAdversarial: return "adversarial";
        case Stage::kFinetune: return "finetune";
    }
    return "?";
}

Stage stage_for_epoch(size_t epoch, const RunConfig& cfg) {
    if (cfg.mode == SystemMode::kMseBaseline) return Stage::kWarmup;
    if (epoch <= cfg.n1) return Stage::kWarmup;
    if (epoch <= cfg.n2) return Stage::kAdversarial;
    // Systems without a waveform-loss weight never enter the fine-tune
    // stage; epochs past n2 continue adversarial training.
    return cfg.gamma_w > 0.0 ? Stage::kFinetune : Stage::kAdversarial;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write metrics: " + path);
    out << "epoch,stage,L_MSE,L_ADV,L_DML,L_D,grad_penalty,gamma_D,lr_G,lr_D,wall_seconds\n";
    out.setf(std::ios::fmtflags(0), std::ios::floatfield);
    out.precision(17);
    for (const auto& r : rows) {
        out << r.epoch << ',' << r.stage << ',' << r.l_mse << ',' << r.l_adv << ',' << r.l_dml
            << ',' << r.l_d << ',' << r.grad_penalty << ',' << r.gamma_d << ',' << r.lr_g << ','
            << r.lr_d << ',' << r.wall_seconds << "\n";
    }
}

namespace {

void check_finite(double v, const std::string& term, const std::string& where) {
    if (!std::isfinite(v)) {
        throw NumericError("NaN/Inf in " + term + " at " + where);
    }
}

NamedParams collect_generator(nets::GeneratorParams& g) {
    NamedParams np;
    nets::generator_visit(g, [&](const std::string& n, Tensor& t) { np.add(n, t); });
    return np;
}

NamedParams collect_critic(nets::CriticParams& c) {
    NamedParams np;
    nets::critic_visit(c, [&](const std::string& n, Tensor& t) { np.add(n, t); });
    return np;
}

NamedParams collect_vocoder(vocoder::WaveNetParams& w) {
    NamedParams np;
    vocoder::wavenet_visit(w, [&](const std::string& n, Tensor& t) { np.add(n, t); });
    return np;
}

void require_grads(NamedParams& np) {
    for (auto& t : np.tensors) t.set_requires_grad(true);
}

void load_into(NamedParams& np, const Checkpoint& ck) {
    for (size_t i = 0; i < np.size(); ++i) {
        const Tensor& src = ck.get(np.names[i]);
        if (src.shape() != np.tensors[i].shape()) {
            throw IoError("checkpoint blob '" + np.names[i] + "' has shape " +
                          shape_str(src.shape()) + ", expected " +
                          shape_str(np.tensors[i].shape()));
        }
        auto dst = np.tensors[i].mutable_data();
        std::copy(src.data().begin(), src.data().end(), dst.begin());
    }
}

void store_params(Checkpoint& ck, const NamedParams& np) {
    for (size_t i = 0; i < np.size(); ++i) ck.put(np.names[i], np.tensors[i]);
}

void store_rng(Checkpoint& ck, NamedRng& rng) {
    ck.put_words("rng.master", {rng.master_seed()});
    for (const auto& [name, state] : rng.states()) {
        ck.put_words("rng.stream." + name, {state[0], state[1], state[2], state[3]});
    }
}

void restore_rng(NamedRng& rng, const Checkpoint& ck) {
    for (const auto& [name, w] : ck.words) {
        constexpr const char* prefix = "rng.stream.";
        if (name.rfind(prefix, 0) == 0 && w.size() == 4) {
            rng.stream(name.substr(std::string(prefix).size()))
                .set_state({w[0], w[1], w[2], w[3]});
        }
    }
}

// Epoch data order from the dedicated stream.
std::vector<size_t> shuffled_indices(size_t n, RngStream& rng) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    for (size_t i = n; i > 1; --i) {
        const size_t j = static_cast<size_t>(rng.below(i));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

struct SplitItems {
    std::vector<const corpus::FeatureItem*> train;
    std::vector<const corpus::FeatureItem*> heldout;
};

// Last utterance of each speaker is held out when a speaker has >= 2.
SplitItems split_heldout(const corpus::FeatureSet& features) {
    SplitItems split;
    std::map<size_t, std::vector<const corpus::FeatureItem*>> by_speaker;
    for (const auto& item : features.items) by_speaker[item.speaker].push_back(&item);
    for (auto& [spk, items] : by_speaker) {
        for (size_t i = 0; i + 1 < items.size(); ++i) split.train.push_back(items[i]);
        if (items.size() >= 2) {
            split.heldout.push_back(items.back());
        } else {
            split.train.push_back(items.back());
        }
    }
    return split;
}

}  // namespace

corpus::FeatureItem truncate_item(const corpus::FeatureItem& item, size_t max_frames) {
    const size_t t = item.mel.rows();
    if (max_frames == 0 || t <= max_frames) {
        corpus::FeatureItem out = item;
        // Waveform trimmed/padded to frames*hop per the vocoder length contract.
        out.wave.samples.resize(t * dsp::kHop, 0);
        return out;
    }
    corpus::FeatureItem out;
    out.id = item.id;
    out.speaker = item.speaker;
    out.mel = op::slice_rows(item.mel, 0, max_frames).detach();
    out.cond.linguistic = op::slice_rows(item.cond.linguistic, 0, max_frames).detach();
    out.cond.speaker_code = item.cond.speaker_code;
    out.wave.samples.assign(item.wave.samples.begin(),
                            item.wave.samples.begin() +
                                static_cast<long>(max_frames * dsp::kHop));
    return out;
}

// ---- Vocoder ----------------------------------------------------------------

double eval_vocoder_nll(const std::vector<const corpus::FeatureItem*>& items,
                        const vocoder::WaveNetParams& params, size_t max_frames) {
    NoGradGuard ng;
    double total = 0.0;
    size_t count = 0;
    for (const auto* item : items) {
        corpus::FeatureItem it = truncate_item(*item, max_frames);
        auto classes = vocoder::waveform_to_classes(it.wave, params.cfg.zeta);
        Tensor cond = vocoder::upsample(it.mel, params);
        Tensor head = vocoder::wavenet_teacher_forced(classes, cond, it.cond.speaker_code,
                                                      params);
        std::vector<uint8_t> all(classes.size(), 1);
        total += vocoder::dml_nll(head, classes, all, params.cfg.zeta).item();
        ++count;
    }
    return count ? total / static_cast<double>(count) : 0.0;
}

Checkpoint vocoder_checkpoint(vocoder::WaveNetParams& params, const Ema& ema, const Adam& adam,
                              NamedRng& rng, size_t epoch, const RunConfig& cfg) {
    Checkpoint ck;
    NamedParams np = collect_vocoder(params);
    store_params(ck, np);
    ck.put_scalar("state.epoch", static_cast<double>(epoch));
    ck.put_words("state.adam_steps", {adam.steps()});
    // Architecture scalars so loading needs no external config.
    ck.put_scalar("cfg.blocks", static_cast<double>(cfg.wavenet.blocks));
    ck.put_scalar("cfg.residual_channels", static_cast<double>(cfg.wavenet.residual_channels));
    ck.put_scalar("cfg.skip_channels", static_cast<double>(cfg.wavenet.skip_channels));
    ck.put_scalar("cfg.kernel_width", static_cast<double>(cfg.wavenet.kernel_width));
    ck.put_scalar("cfg.dilation_cycle", static_cast<double>(cfg.wavenet.dilation_cycle));
    ck.put_scalar("cfg.mixtures", static_cast<double>(cfg.wavenet.mixtures));
    ck.put_scalar("cfg.zeta", static_cast<double>(cfg.wavenet.zeta));
    ck.put_scalar("cfg.embed_dim", static_cast<double>(cfg.wavenet.embed_dim));
    {
        std::vector<double> strides;
        for (size_t s : cfg.wavenet.upsample_strides) strides.push_back(static_cast<double>(s));
        ck.put("cfg.upsample_strides", Tensor::from_vector({strides.size()}, strides));
    }
    if (ema.initialized()) {
        const auto& sh = ema.shadow();
        for (size_t i = 0; i < np.size(); ++i) {
            ck.put("ema." + np.names[i],
                   Tensor::from_vector(np.tensors[i].shape(),
                                       std::vector<double>(sh[i].begin(), sh[i].end())));
        }
    }
    Adam& mutable_adam = const_cast<Adam&>(adam);
    if (!mutable_adam.first_moments().empty()) {
        for (size_t i = 0; i < np.size(); ++i) {
            ck.put("adam.m." + np.names[i],
                   Tensor::from_vector(np.tensors[i].shape(), mutable_adam.first_moments()[i]));
            ck.put("adam.v." + np.names[i],
                   Tensor::from_vector(np.tensors[i].shape(), mutable_adam.second_moments()[i]));
        }
    }
    store_rng(ck, rng);
    return ck;
}

LoadedVocoder load_vocoder(const Checkpoint& ck) {
    vocoder::WaveNetConfig cfg;
    cfg.blocks = static_cast<size_t>(ck.get_scalar("cfg.blocks"));
    cfg.residual_channels = static_cast<size_t>(ck.get_scalar("cfg.residual_channels"));
    cfg.skip_channels = static_cast<size_t>(ck.get_scalar("cfg.skip_channels"));
    cfg.kernel_width = static_cast<size_t>(ck.get_scalar("cfg.kernel_width"));
    cfg.dilation_cycle = static_cast<size_t>(ck.get_scalar("cfg.dilation_cycle"));
    cfg.mixtures = static_cast<size_t>(ck.get_scalar("cfg.mixtures"));
    cfg.zeta = static_cast<size_t>(ck.get_scalar("cfg.zeta"));
    cfg.embed_dim = static_cast<size_t>(ck.get_scalar("cfg.embed_dim"));
    cfg.upsample_strides.clear();
    for (double s : ck.get("cfg.upsample_strides").data()) {
        cfg.upsample_strides.push_back(static_cast<size_t>(s));
    }
    RngStream dummy(0);
    LoadedVocoder lv{vocoder::make_wavenet(cfg, dummy), vocoder::make_wavenet(cfg, dummy)};
    NamedParams np = collect_vocoder(lv.params);
    load_into(np, ck);
    NamedParams np_ema = collect_vocoder(lv.ema_params);
    bool any_ema = false;
    for (const auto& name : np.names) any_ema = any_ema || ck.has("ema." + name);
    for (size_t i = 0; i < np_ema.size(); ++i) {
        const std::string src = any_ema ? "ema." + np.names[i] : np.names[i];
        const Tensor& t = ck.get(src);
        auto dst = np_ema.tensors[i].mutable_data();
        std::copy(t.data().begin(), t.data().end(), dst.begin());
    }
    return lv;
}

VocoderTrainResult train_vocoder(const corpus::FeatureSet& features, const RunConfig& cfg,
                                 const std::string& checkpoint_path,
                                 const std::string& resume_from) {
    RngStream init_rng(cfg.seed ^ fnv1a64("vocoder_init"));
    VocoderTrainResult result{vocoder::make_wavenet(cfg.wavenet, init_rng), Ema(cfg.ema_decay)};
    NamedParams np = collect_vocoder(result.params);
    require_grads(np);

    NamedRng rng(cfg.seed);
    Adam adam;
    size_t start_epoch = 0;

    if (!resume_from.empty()) {
        Checkpoint ck = Checkpoint::load(resume_from);
        load_into(np, ck);
        start_epoch = static_cast<size_t>(ck.get_scalar("state.epoch"));
        adam.set_steps(ck.get_words("state.adam_steps")[0]);
        adam.first_moments().resize(np.size());
        adam.second_moments().resize(np.size());
        for (size_t i = 0; i < np.size(); ++i) {
            const Tensor& m = ck.get("adam.m." + np.names[i]);
            const Tensor& v = ck.get("adam.v." + np.names[i]);
            adam.first_moments()[i].assign(m.data().begin(), m.data().end());
            adam.second_moments()[i].assign(v.data().begin(), v.data().end());
        }
        auto& shadow = result.ema.shadow();
        shadow.resize(np.size());
        for (size_t i = 0; i < np.size(); ++i) {
            const Tensor& s = ck.get("ema." + np.names[i]);
            shadow[i].assign(s.data().begin(), s.data().end());
        }
        restore_rng(rng, ck);
    }

    SplitItems split = split_heldout(features);
    const auto& eval_items = split.heldout.empty() ? split.train : split.heldout;
    result.initial_heldout_nll = eval_vocoder_nll(eval_items, result.params, cfg.max_frames);

    for (size_t epoch = start_epoch + 1; epoch <= cfg.vocoder_epochs; ++epoch) {
        auto order = shuffled_indices(split.train.size(), rng.stream("voc_data_order"));
        for (size_t k = 0; k < order.size(); ++k) {
            const corpus::FeatureItem it = truncate_item(*split.train[order[k]],
                                                         cfg.max_frames);
            auto classes = vocoder::waveform_to_classes(it.wave, cfg.wavenet.zeta);
            Tensor cond = vocoder::upsample(it.mel, result.params);
            Tensor head = vocoder::wavenet_teacher_forced(classes, cond, it.cond.speaker_code,
                                                          result.params);
            std::vector<uint8_t> all(classes.size(), 1);
            Tensor loss = vocoder::dml_nll(head, classes, all, cfg.wavenet.zeta);
            check_finite(loss.item(), "vocoder L_DML",
                         "epoch " + std::to_string(epoch) + " step " + std::to_string(k));
            zero_grads(np);
            backward(loss);
            adam.step(np, adam.scheduled_lr(cfg.adam_lr, cfg.adam_warmup));
            result.ema.update(np);
        }
        if (!checkpoint_path.empty()) {
            vocoder_checkpoint(result.params, result.ema, adam, rng, epoch, cfg)
                .save(checkpoint_path);
        }
    }
    result.final_heldout_nll = eval_vocoder_nll(eval_items, result.params, cfg.max_frames);
    return result;
}

// ---- Acoustic model ----------------------------------------------------------

Checkpoint acoustic_checkpoint(AcousticModels& models, NamedRng& rng, size_t epoch,
                               double gamma_d, double prev_mse_mean, double prev_adv_absmean,
                               bool have_adv_stats) {
    Checkpoint ck;
    NamedParams g = collect_generator(models.generator);
    NamedParams d = collect_critic(models.critic);
    store_params(ck, g);
    store_params(ck, d);
    ck.put_scalar("state.epoch", static_cast<double>(epoch));
    ck.put_scalar("state.gamma_d", gamma_d);
    ck.put_scalar("state.prev_mse_mean", prev_mse_mean);
    ck.put_scalar("state.prev_adv_absmean", prev_adv_absmean);
    ck.put_scalar("state.have_adv_stats", have_adv_stats ? 1.0 : 0.0);
    store_rng(ck, rng);
    return ck;
}

AcousticModels load_acoustic(const Checkpoint& ck, const RunConfig& cfg) {
    RngStream dummy(0);
    AcousticModels models{nets::make_generator(cfg.hidden, cfg.sru_layers, dummy),
                          nets::make_critic(cfg.critic_width, dummy)};
    NamedParams g = collect_generator(models.generator);
    NamedParams d = collect_critic(models.critic);
    load_into(g, ck);
    load_into(d, ck);
    return models;
}

namespace {

struct EpochStats {
    double mse = 0.0, adv = 0.0, dml = 0.0, d_loss = 0.0, penalty = 0.0, grad_norm = 0.0;
    double adv_abs = 0.0;
    size_t items = 0;
    size_t critic_items = 0;

    void finish() {
        const double n = std::max<size_t>(items, 1);
        const double nc = std::max<size_t>(critic_items, 1);
        mse /= n;
        adv /= n;
        dml /= n;
        adv_abs /= n;
        d_loss /= nc;
        penalty /= nc;
        grad_norm /= nc;
    }
};

}  // namespace

double recompute_gamma_d(double mse_mean, double adv_absmean) {
    return adv_absmean > 1e-300 ? mse_mean / adv_absmean : 0.0;
}

namespace {

uint64_t params_checksum(NamedParams& np) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : np.tensors) h ^= corpus::tensor_checksum(t);
    return h;
}

}  // namespace

AcousticTrainResult train_acoustic(const corpus::FeatureSet& features, const RunConfig& cfg,
                                   const std::string& run_dir,
                                   const std::string& resume_from) {
    RngStream ginit(cfg.seed ^ fnv1a64("generator_init"));
    RngStream dinit(cfg.seed ^ fnv1a64("critic_init"));
    AcousticTrainResult result{{nets::make_generator(cfg.hidden, cfg.sru_layers, ginit),
                                nets::make_critic(cfg.critic_width, dinit)},
                               {}};
    NamedParams gp = collect_generator(result.models.generator);
    NamedParams dp = collect_critic(result.models.critic);
    require_grads(gp);
    require_grads(dp);

    NamedRng rng(cfg.seed);
    Sgd sgd_g, sgd_d;
    size_t start_epoch = 0;
    double gamma_d = 0.0;
    double prev_mse_mean = 0.0, prev_adv_absmean = 0.0;
    bool have_adv_stats = false;
    bool have_mse_stats = false;

    if (!resume_from.empty()) {
        Checkpoint ck = Checkpoint::load(resume_from);
        load_into(gp, ck);
        load_into(dp, ck);
        start_epoch = static_cast<size_t>(ck.get_scalar("state.epoch"));
        gamma_d = ck.get_scalar("state.gamma_d");
        prev_mse_mean = ck.get_scalar("state.prev_mse_mean");
        prev_adv_absmean = ck.get_scalar("state.prev_adv_absmean");
        have_adv_stats = ck.get_scalar("state.have_adv_stats") != 0.0;
        have_mse_stats = start_epoch > 0;
        restore_rng(rng, ck);
    }

    // Stage 3 needs the frozen vocoder (EMA weights).
    std::optional<LoadedVocoder> voc;
    const bool needs_vocoder =
        cfg.mode != SystemMode::kMseBaseline && cfg.gamma_w > 0.0 && cfg.n3 > cfg.n2;
    if (needs_vocoder) {
        if (cfg.vocoder_checkpoint.empty()) {
            throw ConfigError("fine-tune stage configured (n3 > n2, gamma_w > 0) but no "
                              "vocoder checkpoint is set");
        }
        voc = load_vocoder(Checkpoint::load(cfg.vocoder_checkpoint));
        NamedParams vp = collect_vocoder(voc->ema_params);
        result.vocoder_checksum_before = params_checksum(vp);
    }

    if (!run_dir.empty()) fs::create_directories(run_dir);

    LossWeights weights;
    weights.gamma_w = cfg.gamma_w;
    weights.lambda = cfg.lambda;
    weights.mode = cfg.mode == SystemMode::kGan ? nets::AdvMode::kGan : nets::AdvMode::kWganGp;

    const auto t_start = std::chrono::steady_clock::now();

    for (size_t epoch = start_epoch + 1; epoch <= cfg.n3; ++epoch) {
        const Stage stage = stage_for_epoch(epoch, cfg);
        const bool adversarial = stage != Stage::kWarmup;
        const double lr_g = cfg.lr_g * std::pow(cfg.sgd_decay, static_cast<double>(epoch - 1));
        const double lr_d = cfg.lr_d * std::pow(cfg.sgd_decay, static_cast<double>(epoch - 1));

        auto order = shuffled_indices(features.items.size(), rng.stream("data_order"));

        // gamma_D = E[L_MSE]/E[|L_ADV|] over the previous epoch, recomputed
        // once per epoch. The first adversarial epoch has no |L_ADV| window
        // yet: the critic trains for one epoch before steering the
        // generator (gamma_D = 0), and the ratio rule applies from the
        // second adversarial epoch on.
        if (adversarial && have_adv_stats && have_mse_stats) {
            gamma_d = recompute_gamma_d(prev_mse_mean, prev_adv_absmean);
        } else {
            gamma_d = 0.0;
        }
        weights.gamma_d = gamma_d;

        EpochStats stats;
        for (size_t base = 0; base < order.size(); base += cfg.batch) {
            const size_t m = std::min(cfg.batch, order.size() - base);
            std::vector<corpus::FeatureItem> batch;
            for (size_t k = 0; k < m; ++k) {
                batch.push_back(truncate_item(features.items[order[base + k]],
                                              cfg.max_frames));
            }

            // Critic update first (theta_G fixed).
            if (adversarial) {
                zero_grads(dp);
                for (const auto& it : batch) {
                    Tensor y_hat;
                    {
                        NoGradGuard ng;
                        y_hat = nets::generator_forward(it.cond, result.models.generator);
                    }
                    Tensor d_loss;
                    if (weights.mode == nets::AdvMode::kWganGp) {
                        const double eps = rng.stream("epsilon").uniform();
                        CriticLossParts parts = critic_loss_wgan_gp(
                            it.mel, y_hat, it.cond.speaker_code, result.models.critic,
                            weights.lambda, eps);
                        stats.penalty += parts.penalty;
                        stats.grad_norm += parts.grad_norm;
                        d_loss = parts.loss;
                    } else {
                        d_loss = critic_loss_gan(it.mel, y_hat, it.cond.speaker_code,
                                                 result.models.critic);
                    }
                    check_finite(d_loss.item(), "L_D", "epoch " + std::to_string(epoch));
                    stats.d_loss += d_loss.item();
                    ++stats.critic_items;
                    backward(op::mul_scalar(d_loss, 1.0 / static_cast<double>(m)));
                }
                sgd_d.step(dp, lr_d);
            }

            // Generator update with the (possibly just-updated) critic.
            zero_grads(gp);
            for (const auto& it : batch) {
                Tensor y_hat = nets::generator_forward(it.cond, result.models.generator);
                std::vector<uint32_t> classes;
                std::vector<uint8_t> positions;
                const std::vector<uint32_t>* classes_ptr = nullptr;
                const std::vector<uint8_t>* positions_ptr = nullptr;
                const vocoder::WaveNetParams* voc_ptr = nullptr;
                if (stage == Stage::kFinetune && voc) {
                    classes = vocoder::waveform_to_classes(it.wave, cfg.wavenet.zeta);
                    positions = vocoder::select_half_per_frame(classes.size(), dsp::kHop,
                                                               rng.stream("dml_select"));
                    classes_ptr = &classes;
                    positions_ptr = &positions;
                    voc_ptr = &voc->ema_params;
                }
                GeneratorLossParts parts = generator_total_loss(
                    it.mel, y_hat, it.cond.speaker_code, weights, stage,
                    adversarial ? &result.models.critic : nullptr, voc_ptr, classes_ptr,
                    positions_ptr);
                check_finite(parts.mse, "L_MSE", "epoch " + std::to_string(epoch));
                if (adversarial) check_finite(parts.adv, "L_ADV", "epoch " + std::to_string(epoch));
                if (stage == Stage::kFinetune) {
                    check_finite(parts.dml, "L_DML", "epoch " + std::to_string(epoch));
                }
                stats.mse += parts.mse;
                stats.adv += parts.adv;
                stats.adv_abs += std::fabs(parts.adv);
                stats.dml += parts.dml;
                ++stats.items;
                backward(op::mul_scalar(parts.total, 1.0 / static_cast<double>(m)));
            }
            sgd_g.step(gp, lr_g);
        }

        stats.finish();
        prev_mse_mean = stats.mse;
        have_mse_stats = true;
        if (adversarial) {
            prev_adv_absmean = stats.adv_abs;
            have_adv_stats = true;
        }

        MetricsRow row;
        row.epoch = epoch;
        row.stage = stage_name(stage);
        row.l_mse = stats.mse;
        row.l_adv = adversarial ? stats.adv : 0.0;
        row.l_dml = stage == Stage::kFinetune ? stats.dml : 0.0;
        row.l_d = adversarial ? stats.d_loss : 0.0;
        row.grad_penalty = stats.penalty;
        row.grad_norm = stats.grad_norm;
        row.gamma_d = gamma_d;
        row.lr_g = lr_g;
        row.lr_d = lr_d;
        row.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        result.metrics.push_back(row);

        if (!run_dir.empty()) {
            acoustic_checkpoint(result.models, rng, epoch, gamma_d, prev_mse_mean,
                                prev_adv_absmean, have_adv_stats)
                .save(run_dir + "/acoustic_epoch" + std::to_string(epoch) + ".ckpt");
            write_metrics_csv(run_dir + "/metrics.csv", result.metrics);
        }
    }
    if (voc) {
        NamedParams vp = collect_vocoder(voc->ema_params);
        result.vocoder_checksum_after = params_checksum(vp);
    }
    return result;
}

double eval_generator_dml(const corpus::FeatureSet& features, const RunConfig& cfg,
                          AcousticModels& models, const LoadedVocoder& voc) {
    NoGradGuard ng;
    double total = 0.0;
    size_t count = 0;
    for (const auto& item : features.items) {
        const corpus::FeatureItem it = truncate_item(item, cfg.max_frames);
        Tensor y_hat = nets::generator_forward(it.cond, models.generator);
        auto classes = vocoder::waveform_to_classes(it.wave, voc.ema_params.cfg.zeta);
        Tensor cond = vocoder::upsample(y_hat, voc.ema_params);
        Tensor head = vocoder::wavenet_teacher_forced(classes, cond, it.cond.speaker_code,
                                                      voc.ema_params);
        std::vector<uint8_t> all(classes.size(), 1);
        total += vocoder::dml_nll(head, classes, all, voc.ema_params.cfg.zeta).item();
        ++count;
    }
    return count ? total / static_cast<double>(count) : 0.0;
}

Waveform synthesize_utterance(const corpus::FeatureItem& item, const RunConfig& cfg,
                              AcousticModels* models, const LoadedVocoder& voc,
                              bool analysis_by_synthesis, RngStream& rng) {
    NoGradGuard ng;
    Tensor mel;
    if (analysis_by_synthesis) {
        mel = item.mel;
    } else {
        if (!models) throw ConfigError("synthesize: generator checkpoint required");
        mel = nets::generator_forward(item.cond, models->generator);
    }
    (void)cfg;
    return vocoder::wavenet_generate(mel, item.cond.speaker_code, voc.ema_params, rng);
}

}  // namespace wavetts::train
