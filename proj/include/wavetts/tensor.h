#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wavetts/error.h"
#include "wavetts/rng.h"

namespace wavetts {

using Shape = std::vector<size_t>;

std::string shape_str(const Shape& s);
size_t shape_numel(const Shape& s);

class Tensor;
struct TensorImpl;

// One recorded forward op. `backward` maps the output gradient to one
// gradient per input; rules for the second-order op subset are written in
// terms of taped tensor ops, so differentiating the backward pass works by
// construction. Rules that drop to raw numeric kernels set
// `second_order = false` and are rejected when a graph-building backward
// pass reaches them.
struct Node {
    std::string name;
    bool second_order = false;
    std::vector<Tensor> inputs;
    std::function<std::vector<Tensor>(const Tensor& grad_out)> backward;
    TensorImpl* output = nullptr;  // backref, non-owning
};

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::shared_ptr<Node> grad_fn;
    std::shared_ptr<TensorImpl> grad;  // leaf accumulator, never taped
};

// Dense 64-bit tensor handle with value semantics (copies share storage).
// Values are immutable once created by an op; mutation is reserved for
// leaves (parameter updates, finite-difference probes).
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(const Shape& shape);
    static Tensor full(const Shape& shape, double value);
    static Tensor from_vector(const Shape& shape, std::vector<double> values);
    static Tensor scalar(double value);  // shape {1}
    // Glorot-style uniform in +-sqrt(6/(fan_in+fan_out)).
    static Tensor glorot(const Shape& shape, size_t fan_in, size_t fan_out, RngStream& rng);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const;
    size_t numel() const;
    size_t rows() const;  // shape[0] for rank >= 1
    size_t cols() const;  // shape[1] for rank 2
    double item() const;  // requires numel() == 1

    std::span<const double> data() const;
    // Leaf mutation only; throws on tensors produced by an op.
    std::span<double> mutable_data();

    double at(size_t i, size_t j) const;  // rank-2 convenience

    bool requires_grad() const;
    Tensor& set_requires_grad(bool v);

    Tensor grad() const;  // undefined handle when no gradient accumulated
    void zero_grad();
    void accumulate_grad(const Tensor& g);  // numeric add into leaf buffer

    Tensor detach() const;  // shares storage, drops tape

    const std::shared_ptr<TensorImpl>& impl() const { return impl_; }
    static Tensor wrap(std::shared_ptr<TensorImpl> impl);

  private:
    std::shared_ptr<TensorImpl> impl_;
};

// Thread-local tape switch. Ops record nodes only while enabled.
bool grad_enabled();

class NoGradGuard {
  public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    bool prev_;
};

// Reverse-mode sweep from a scalar loss; accumulates into every
// requires_grad leaf reachable from it. The graph is retained (nodes hang
// off tensors), so repeated backward calls are permitted and accumulate.
// With create_graph=true the sweep itself is taped, enabling
// gradient-of-gradient; reaching an op without a second-order rule throws
// UnsupportedOpError naming the op.
void backward(const Tensor& loss, bool create_graph = false);

// Gradients of a scalar w.r.t. selected tensors, without touching leaf
// accumulators. Returns zeros for tensors the output does not depend on.
std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& wrt,
                         bool create_graph = false);

// Op construction helper shared by ops.cpp; checks outputs for NaN/Inf so a
// non-finite forward value is a detected error, never silent state.
Tensor make_op(const std::string& name, bool second_order, std::vector<Tensor> inputs,
               Shape out_shape, std::vector<double> out_data,
               std::function<std::vector<Tensor>(const Tensor&)> backward_fn);

}  // namespace wavetts
