#include "wavetts/optim.h"

#include <cmath>

#include "wavetts/error.h"

namespace wavetts::train {

void zero_grads(NamedParams& params) {
    for (auto& t : params.tensors) t.zero_grad();
}

void Sgd::step(NamedParams& params, double lr) {
    for (auto& t : params.tensors) {
        Tensor g = t.grad();
        if (!g.defined()) continue;
        auto vals = t.mutable_data();
        auto gv = g.data();
        for (size_t i = 0; i < vals.size(); ++i) vals[i] -= lr * gv[i];
    }
}

double Adam::scheduled_lr(double lr0, size_t warmup_steps) const {
    const double step = static_cast<double>(t_ + 1);
    const double w = static_cast<double>(warmup_steps);
    return lr0 * std::min(step / w, std::sqrt(w / step));
}

void Adam::step(NamedParams& params, double lr) {
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params.tensors[i].numel(), 0.0);
            v_[i].assign(params.tensors[i].numel(), 0.0);
        }
    }
    if (m_.size() != params.size()) {
        throw Error("Adam: parameter set size changed under the optimizer");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor g = params.tensors[i].grad();
        if (!g.defined()) continue;
        auto vals = params.tensors[i].mutable_data();
        auto gv = g.data();
        auto& m = m_[i];
        auto& v = v_[i];
        for (size_t j = 0; j < vals.size(); ++j) {
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * gv[j];
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * gv[j] * gv[j];
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            vals[j] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
        }
    }
}

void Ema::update(const NamedParams& params) {
    if (shadow_.empty()) {
        shadow_.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            shadow_[i].assign(params.tensors[i].data().begin(), params.tensors[i].data().end());
        }
        return;
    }
    for (size_t i = 0; i < params.size(); ++i) {
        auto src = params.tensors[i].data();
        auto& sh = shadow_[i];
        for (size_t j = 0; j < sh.size(); ++j) {
            sh[j] = decay_ * sh[j] + (1.0 - decay_) * src[j];
        }
    }
}

void Ema::apply_to(NamedParams& params) const {
    if (shadow_.size() != params.size()) {
        throw Error("Ema: shadow/parameter size mismatch");
    }
    for (size_t i = 0; i < params.size(); ++i) {
        auto dst = params.tensors[i].mutable_data();
        for (size_t j = 0; j < dst.size(); ++j) dst[j] = shadow_[i][j];
    }
}

}  // namespace wavetts::train
