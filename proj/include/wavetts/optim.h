#pragma once

#include <string>
#include <vector>

#include "wavetts/tensor.h"

namespace wavetts::train {

// Named view of a parameter set; order is the visit order and is stable, so
// optimizer state and checkpoints key off it.
struct NamedParams {
    std::vector<std::string> names;
    std::vector<Tensor> tensors;

    void add(const std::string& name, Tensor& t) {
        names.push_back(name);
        tensors.push_back(t);
    }
    size_t size() const { return tensors.size(); }
};

// Plain SGD with per-epoch exponential learning-rate decay applied by the
// caller: lr(epoch) = lr0 * decay^(epoch-1).
class Sgd {
  public:
    void step(NamedParams& params, double lr);
};

// Adam with bias correction; beta1=0.9, beta2=0.999, eps=1e-8 defaults.
// The warm-up-then-decay schedule is lr(step) = lr0 * min(step/w, sqrt(w/step)).
class Adam {
  public:
    Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(NamedParams& params, double lr);
    double scheduled_lr(double lr0, size_t warmup_steps) const;

    uint64_t steps() const { return t_; }
    void set_steps(uint64_t t) { t_ = t; }
    std::vector<std::vector<double>>& first_moments() { return m_; }
    std::vector<std::vector<double>>& second_moments() { return v_; }

  private:
    double beta1_, beta2_, eps_;
    uint64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

// Exponentially weighted moving average of parameters:
// shadow <- decay*shadow + (1-decay)*params.
class Ema {
  public:
    explicit Ema(double decay = 0.9999) : decay_(decay) {}

    void update(const NamedParams& params);
    const std::vector<std::vector<double>>& shadow() const { return shadow_; }
    std::vector<std::vector<double>>& shadow() { return shadow_; }
    double decay() const { return decay_; }
    bool initialized() const { return !shadow_.empty(); }

    // Copies the shadow values into the given parameter set.
    void apply_to(NamedParams& params) const;

  private:
    double decay_;
    std::vector<std::vector<double>> shadow_;
};

void zero_grads(NamedParams& params);

}  // namespace wavetts::train
