#include "doctest.h"

#include <cmath>

#include "wavetts/optim.h"

using namespace wavetts;
using namespace wavetts::train;

namespace {

NamedParams one_param(Tensor& t) {
    NamedParams np;
    np.add("p", t);
    return np;
}

}  // namespace

TEST_CASE("sgd one-step arithmetic") {
    Tensor theta = Tensor::scalar(1.0);
    theta.set_requires_grad(true);
    theta.accumulate_grad(Tensor::scalar(2.0));
    NamedParams np = one_param(theta);
    Sgd sgd;
    sgd.step(np, 0.1);
    CHECK(theta.item() == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("adam first step matches the hand-computed bias-corrected formula") {
    const double g = 0.37, lr = 0.01, eps = 1e-8;
    Tensor theta = Tensor::scalar(5.0);
    theta.set_requires_grad(true);
    theta.accumulate_grad(Tensor::scalar(g));
    NamedParams np = one_param(theta);
    Adam adam;  // paper constants: beta1 0.9, beta2 0.999, eps 1e-8
    adam.step(np, lr);
    // m_hat = g, v_hat = g^2 -> update = lr * g / (|g| + eps)
    const double expect = 5.0 - lr * g / (std::fabs(g) + eps);
    CHECK(theta.item() == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("adam warm-up-then-decay schedule") {
    Adam adam;
    const double lr0 = 0.002;
    const size_t w = 100;
    CHECK(adam.scheduled_lr(lr0, w) == doctest::Approx(lr0 / 100.0));
    adam.set_steps(99);  // next step is 100
    CHECK(adam.scheduled_lr(lr0, w) == doctest::Approx(lr0));
    adam.set_steps(399);  // next step is 400
    CHECK(adam.scheduled_lr(lr0, w) == doctest::Approx(lr0 * 0.5));
}

TEST_CASE("ema degenerate decay copies parameters after one step") {
    Tensor p = Tensor::scalar(3.0);
    NamedParams np = one_param(p);
    Ema ema(0.0);
    ema.update(np);
    p.mutable_data()[0] = 7.0;
    ema.update(np);
    CHECK(ema.shadow()[0][0] == 7.0);
}

TEST_CASE("ema converges geometrically to constant parameters") {
    Tensor p = Tensor::scalar(0.0);
    NamedParams np = one_param(p);
    Ema ema(0.9);
    ema.update(np);            // shadow = 0
    p.mutable_data()[0] = 1.0;  // params jump, then stay constant
    double prev_diff = 1.0;
    for (int i = 0; i < 20; ++i) {
        ema.update(np);
        const double diff = std::fabs(ema.shadow()[0][0] - 1.0);
        CHECK(diff == doctest::Approx(prev_diff * 0.9).epsilon(1e-12));
        prev_diff = diff;
    }
}

TEST_CASE("default ema decay is 0.9999") {
    Ema ema;
    CHECK(ema.decay() == 0.9999);
}

TEST_CASE("ema apply_to copies the shadow into parameters") {
    Tensor p = Tensor::scalar(2.0);
    NamedParams np = one_param(p);
    Ema ema(0.5);
    ema.update(np);
    p.mutable_data()[0] = 4.0;
    ema.update(np);  // shadow = 3.0
    ema.apply_to(np);
    CHECK(p.item() == 3.0);
}
