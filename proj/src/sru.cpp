#include "wavetts/sru.h"

namespace wavetts::nets {

namespace op = wavetts::ops;

SruDirParams make_sru_dir_params(size_t input, size_t hidden, RngStream& rng) {
    SruDirParams p;
    p.w = Tensor::glorot({hidden, input}, input, hidden, rng);
    p.w_f = Tensor::glorot({hidden, input}, input, hidden, rng);
    p.w_r = Tensor::glorot({hidden, input}, input, hidden, rng);
    p.b_f = Tensor::zeros({1, hidden});
    p.b_r = Tensor::zeros({1, hidden});
    if (input != hidden) {
        p.w_h = Tensor::glorot({hidden, input}, input, hidden, rng);
    }
    return p;
}

SruGates sru_gates(const Tensor& seq, const SruDirParams& p) {
    if (seq.shape().size() != 2 || seq.cols() != p.input()) {
        throw DimensionError("sru_gates: sequence " + shape_str(seq.shape()) +
                             " vs input width " + std::to_string(p.input()));
    }
    const size_t t = seq.rows();
    SruGates g;
    g.x_tilde = op::matmul(seq, op::transpose(p.w));
    g.f = op::sigmoid(op::add(op::matmul(seq, op::transpose(p.w_f)),
                              op::broadcast_rows(p.b_f, t)));
    g.r = op::sigmoid(op::add(op::matmul(seq, op::transpose(p.w_r)),
                              op::broadcast_rows(p.b_r, t)));
    g.highway = p.w_h.defined() ? op::matmul(seq, op::transpose(p.w_h)) : seq;
    return g;
}

std::pair<Tensor, Tensor> sru_cell_step(const Tensor& x_t, const Tensor& c_prev,
                                        const SruDirParams& p) {
    if (c_prev.shape().size() != 2 || c_prev.cols() != p.hidden()) {
        throw DimensionError("sru_cell_step: state " + shape_str(c_prev.shape()) +
                             " vs hidden width " + std::to_string(p.hidden()));
    }
    SruGates g = sru_gates(x_t, p);
    Tensor one_minus_f = op::add_scalar(op::neg(g.f), 1.0);
    Tensor c_t = op::add(op::mul(g.f, c_prev), op::mul(one_minus_f, g.x_tilde));
    Tensor one_minus_r = op::add_scalar(op::neg(g.r), 1.0);
    Tensor h_t = op::add(op::mul(g.r, op::relu(c_t)), op::mul(one_minus_r, g.highway));
    return {h_t, c_t};
}

namespace {

Tensor scan_and_combine(const SruGates& g, size_t t, size_t hidden) {
    // Recurrence over precomputed gates; only the c scan is sequential.
    std::vector<Tensor> c_rows;
    c_rows.reserve(t);
    Tensor c_prev = Tensor::zeros({1, hidden});
    for (size_t i = 0; i < t; ++i) {
        Tensor f_t = op::slice_rows(g.f, i, i + 1);
        Tensor xt_t = op::slice_rows(g.x_tilde, i, i + 1);
        Tensor one_minus_f = op::add_scalar(op::neg(f_t), 1.0);
        c_prev = op::add(op::mul(f_t, c_prev), op::mul(one_minus_f, xt_t));
        c_rows.push_back(c_prev);
    }
    Tensor c = op::concat_rows(c_rows);
    Tensor one_minus_r = op::add_scalar(op::neg(g.r), 1.0);
    return op::add(op::mul(g.r, op::relu(c)), op::mul(one_minus_r, g.highway));
}

}  // namespace

Tensor sru_layer(const Tensor& seq, const SruDirParams& p, Direction dir) {
    const Tensor input = dir == Direction::kBackward ? op::flip_rows(seq) : seq;
    SruGates g = sru_gates(input, p);
    Tensor h = scan_and_combine(g, input.rows(), p.hidden());
    return dir == Direction::kBackward ? op::flip_rows(h) : h;
}

void sru_dir_visit(SruDirParams& p, const std::string& prefix,
                   const std::function<void(const std::string&, Tensor&)>& fn) {
    fn(prefix + ".w", p.w);
    fn(prefix + ".w_f", p.w_f);
    fn(prefix + ".w_r", p.w_r);
    fn(prefix + ".b_f", p.b_f);
    fn(prefix + ".b_r", p.b_r);
    if (p.w_h.defined()) fn(prefix + ".w_h", p.w_h);
}

}  // namespace wavetts::nets
