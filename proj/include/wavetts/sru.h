#pragma once

#include <vector>

#include "wavetts/ops.h"
#include "wavetts/tensor.h"

namespace wavetts::nets {

// One direction of a simple-recurrent-unit layer. Gates depend on the
// current input only, so they are computed for the whole sequence before
// the recurrence scan. g(.) is ReLU, sigma(.) the logistic sigmoid:
//
//   x~_t = W x_t
//   f_t  = sigma(W_f x_t + b_f)
//   r_t  = sigma(W_r x_t + b_r)
//   c_t  = f_t . c_{t-1} + (1 - f_t) . x~_t
//   h_t  = r_t . g(c_t) + (1 - r_t) . x'_t
//
// where x'_t is x_t itself when input and hidden widths match, else a
// learned projection W_h x_t.
struct SruDirParams {
    Tensor w;    // [hidden x input]
    Tensor w_f;  // [hidden x input]
    Tensor w_r;  // [hidden x input]
    Tensor b_f;  // [1 x hidden]
    Tensor b_r;  // [1 x hidden]
    Tensor w_h;  // [hidden x input]; undefined handle when input == hidden

    size_t hidden() const { return w.shape()[0]; }
    size_t input() const { return w.shape()[1]; }
};

SruDirParams make_sru_dir_params(size_t input, size_t hidden, RngStream& rng);

struct SruGates {
    Tensor x_tilde;  // [T x hidden]
    Tensor f;        // [T x hidden]
    Tensor r;        // [T x hidden]
    Tensor highway;  // [T x hidden]
};

// Gate precomputation: a function of the input sequence alone.
SruGates sru_gates(const Tensor& seq, const SruDirParams& p);

// Single step, used directly and as the stepwise oracle for the layer.
// x_t: [1 x input], c_prev: [1 x hidden] -> (h_t, c_t).
std::pair<Tensor, Tensor> sru_cell_step(const Tensor& x_t, const Tensor& c_prev,
                                        const SruDirParams& p);

enum class Direction { kForward, kBackward };

// Full layer over [T x input] -> [T x hidden]. The backward direction
// processes the reversed sequence and reverses its output.
Tensor sru_layer(const Tensor& seq, const SruDirParams& p, Direction dir);

void sru_dir_visit(SruDirParams& p, const std::string& prefix,
                   const std::function<void(const std::string&, Tensor&)>& fn);

}  // namespace wavetts::nets
