#include "doctest.h"

#include <cmath>

#include "wavetts/gradcheck.h"
#include "wavetts/ops.h"
#include "wavetts/tensor.h"

using namespace wavetts;
namespace op = wavetts::ops;

namespace {

Tensor random_tensor(const Shape& shape, RngStream& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t = Tensor::zeros(shape);
    for (auto& v : t.mutable_data()) v = rng.uniform(lo, hi);
    return t;
}

}  // namespace

TEST_CASE("grad of linear map is the weight, independent of the input") {
    Tensor w = Tensor::from_vector({1, 3}, {2.0, -1.0, 0.5});
    for (double shift : {0.0, 1.0, -4.0}) {
        Tensor y = Tensor::from_vector({3, 1}, {0.1 + shift, 0.2 + shift, 0.3 + shift});
        y.set_requires_grad(true);
        Tensor f = op::matmul(w, y);
        Tensor g = grad(f, {y})[0];
        CHECK(g.data()[0] == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(g.data()[1] == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(g.data()[2] == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("grad-of-grad of the half squared norm is 2y") {
    Tensor y = Tensor::from_vector({2, 2}, {1.0, -2.0, 3.0, 0.5});
    y.set_requires_grad(true);
    // f = 0.5 * |y|^2, so grad_y f = y and |grad f|^2 has gradient 2y.
    Tensor f = op::mul_scalar(op::sum_all(op::mul(y, y)), 0.5);
    Tensor g = grad(f, {y}, /*create_graph=*/true)[0];
    Tensor norm_sq = op::sum_all(op::mul(g, g));
    Tensor gg = grad(norm_sq, {y})[0];
    for (size_t i = 0; i < y.numel(); ++i) {
        CHECK(gg.data()[i] == doctest::Approx(2.0 * y.data()[i]).epsilon(1e-12));
    }
}

TEST_CASE("penalty gradient through a 2-layer critic matches finite differences") {
    RngStream rng(13);
    const size_t d = 6, h = 4;
    Tensor w1 = random_tensor({h, d}, rng);
    Tensor b1 = random_tensor({1, h}, rng);
    Tensor w2 = random_tensor({1, h}, rng);
    Tensor y = random_tensor({1, d}, rng);

    const double lambda = 10.0;
    auto penalty = [&]() {
        Tensor yl = y.detach();
        yl.set_requires_grad(true);
        Tensor hidden = op::relu(op::add(op::matmul(yl, op::transpose(w1)), b1));
        Tensor score = op::sum_all(op::mul(hidden, op::broadcast_rows(w2, 1)));
        Tensor g = grad(score, {yl}, /*create_graph=*/true)[0];
        Tensor norm = op::sqrt_(op::sum_all(op::mul(g, g)));
        Tensor shifted = op::add_scalar(norm, -1.0);
        return op::mul_scalar(op::mul(shifted, shifted), lambda);
    };
    auto res = gradcheck(penalty, {w1, b1, w2}, 1e-5);
    CHECK(res.max_error < 1e-4);
}

TEST_CASE("double backward through sigmoid and tanh matches finite differences") {
    RngStream rng(19);
    Tensor w = random_tensor({3, 3}, rng);
    Tensor x = random_tensor({1, 3}, rng);

    auto f = [&]() {
        Tensor xl = x.detach();
        xl.set_requires_grad(true);
        Tensor out = op::sum_all(op::sigmoid(op::matmul(xl, w)));
        Tensor g = grad(out, {xl}, /*create_graph=*/true)[0];
        return op::sum_all(op::mul(g, g));
    };
    auto res = gradcheck(f, {w}, 1e-5);
    CHECK(res.max_error < 1e-4);

    auto ft = [&]() {
        Tensor xl = x.detach();
        xl.set_requires_grad(true);
        Tensor out = op::mean_all(op::tanh_(op::matmul(xl, w)));
        Tensor g = grad(out, {xl}, /*create_graph=*/true)[0];
        return op::sum_all(op::mul(g, g));
    };
    auto rest = gradcheck(ft, {w}, 1e-5);
    CHECK(rest.max_error < 1e-4);
}

TEST_CASE("double backward through an op without a second-order rule names the op") {
    RngStream rng(3);
    Tensor x = random_tensor({1, 6}, rng);
    x.set_requires_grad(true);
    Tensor w = random_tensor({1, 1, 2}, rng);
    w.set_requires_grad(true);
    Tensor out = op::sum_all(op::conv1d_causal(x, w, 1));
    CHECK_THROWS_WITH_AS(grad(out, {x}, /*create_graph=*/true),
                         doctest::Contains("conv1d_causal"), UnsupportedOpError);
}

TEST_CASE("grad returns zeros for unused inputs") {
    Tensor x = Tensor::scalar(2.0);
    Tensor unused = Tensor::zeros({2, 2});
    x.set_requires_grad(true);
    unused.set_requires_grad(true);
    Tensor f = op::mul(x, x);
    auto gs = grad(f, {x, unused});
    CHECK(gs[0].item() == doctest::Approx(4.0));
    for (double v : gs[1].data()) CHECK(v == 0.0);
}

TEST_CASE("repeated backward accumulates into leaves") {
    Tensor x = Tensor::scalar(3.0);
    x.set_requires_grad(true);
    Tensor f = op::mul(x, x);
    backward(f);
    backward(f);
    CHECK(x.grad().item() == doctest::Approx(12.0));
    x.zero_grad();
    backward(f);
    CHECK(x.grad().item() == doctest::Approx(6.0));
}
