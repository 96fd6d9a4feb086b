#include "wavetts/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "wavetts/ops.h"

namespace wavetts {

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << ", ";
        os << s[i];
    }
    os << "]";
    return os.str();
}

size_t shape_numel(const Shape& s) {
    size_t n = 1;
    for (size_t d : s) n *= d;
    return n;
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Tensor Tensor::wrap(std::shared_ptr<TensorImpl> impl) {
    Tensor t;
    t.impl_ = std::move(impl);
    return t;
}

Tensor Tensor::zeros(const Shape& shape) { return full(shape, 0.0); }

Tensor Tensor::full(const Shape& shape, double value) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = shape;
    impl->data.assign(shape_numel(shape), value);
    return wrap(std::move(impl));
}

Tensor Tensor::from_vector(const Shape& shape, std::vector<double> values) {
    if (shape_numel(shape) != values.size()) {
        throw DimensionError("from_vector: shape " + shape_str(shape) + " needs " +
                             std::to_string(shape_numel(shape)) + " values, got " +
                             std::to_string(values.size()));
    }
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = shape;
    impl->data = std::move(values);
    return wrap(std::move(impl));
}

Tensor Tensor::scalar(double value) { return full({1}, value); }

Tensor Tensor::glorot(const Shape& shape, size_t fan_in, size_t fan_out, RngStream& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t = zeros(shape);
    for (double& v : t.impl_->data) v = rng.uniform(-bound, bound);
    return t;
}

const Shape& Tensor::shape() const { return impl_->shape; }
size_t Tensor::numel() const { return impl_->data.size(); }

size_t Tensor::rows() const {
    if (impl_->shape.empty()) throw DimensionError("rows(): rank-0 tensor");
    return impl_->shape[0];
}

size_t Tensor::cols() const {
    if (impl_->shape.size() != 2) {
        throw DimensionError("cols(): expected rank-2 tensor, got " + shape_str(impl_->shape));
    }
    return impl_->shape[1];
}

double Tensor::item() const {
    if (numel() != 1) {
        throw DimensionError("item(): tensor has " + std::to_string(numel()) + " elements");
    }
    return impl_->data[0];
}

std::span<const double> Tensor::data() const { return impl_->data; }

std::span<double> Tensor::mutable_data() {
    if (impl_->grad_fn) {
        throw Error("mutable_data(): tensor produced by op '" + impl_->grad_fn->name +
                    "' is immutable");
    }
    return impl_->data;
}

double Tensor::at(size_t i, size_t j) const {
    return impl_->data[i * cols() + j];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool v) {
    impl_->requires_grad = v;
    return *this;
}

Tensor Tensor::grad() const {
    return impl_->grad ? wrap(impl_->grad) : Tensor();
}

void Tensor::zero_grad() { impl_->grad.reset(); }

void Tensor::accumulate_grad(const Tensor& g) {
    if (g.shape() != shape()) {
        throw DimensionError("accumulate_grad: gradient shape " + shape_str(g.shape()) +
                             " vs tensor shape " + shape_str(shape()));
    }
    if (!impl_->grad) {
        auto acc = std::make_shared<TensorImpl>();
        acc->shape = shape();
        acc->data = std::vector<double>(g.data().begin(), g.data().end());
        impl_->grad = std::move(acc);
    } else {
        auto& dst = impl_->grad->data;
        auto src = g.data();
        for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
}

Tensor Tensor::detach() const {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = impl_->shape;
    impl->data = impl_->data;
    return wrap(std::move(impl));
}

Tensor make_op(const std::string& name, bool second_order, std::vector<Tensor> inputs,
               Shape out_shape, std::vector<double> out_data,
               std::function<std::vector<Tensor>(const Tensor&)> backward_fn) {
    for (double v : out_data) {
        if (!std::isfinite(v)) {
            throw NumericError("non-finite value produced by op '" + name + "'");
        }
    }
    Tensor out = Tensor::from_vector(std::move(out_shape), std::move(out_data));
    bool needs = false;
    for (const auto& in : inputs) needs = needs || in.requires_grad();
    if (needs && grad_enabled()) {
        auto node = std::make_shared<Node>();
        node->name = name;
        node->second_order = second_order;
        node->inputs = std::move(inputs);
        node->backward = std::move(backward_fn);
        node->output = out.impl().get();
        out.impl()->grad_fn = std::move(node);
        out.impl()->requires_grad = true;
    }
    return out;
}

namespace {

// Post-order over the recorded graph, reversed by the caller. Iterative so
// deep scans (per-timestep recurrences) cannot overflow the stack.
std::vector<TensorImpl*> topo_order(TensorImpl* root) {
    std::vector<TensorImpl*> order;
    std::unordered_set<TensorImpl*> visited;
    std::vector<std::pair<TensorImpl*, size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [impl, next_child] = stack.back();
        if (!impl->grad_fn || next_child >= impl->grad_fn->inputs.size()) {
            order.push_back(impl);
            stack.pop_back();
            continue;
        }
        TensorImpl* child = impl->grad_fn->inputs[next_child].impl().get();
        ++next_child;
        if (child->requires_grad && !visited.count(child)) {
            visited.insert(child);
            stack.emplace_back(child, 0);
        }
    }
    return order;
}

std::unordered_map<TensorImpl*, Tensor> sweep(const Tensor& output, bool create_graph) {
    if (output.numel() != 1) {
        throw Error("backward: expected scalar output, got shape " + shape_str(output.shape()));
    }
    std::unordered_map<TensorImpl*, Tensor> grads;
    if (!output.requires_grad()) return grads;

    grads[output.impl().get()] = Tensor::full(output.shape(), 1.0);
    auto order = topo_order(output.impl().get());

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorImpl* impl = *it;
        if (!impl->grad_fn) continue;
        auto found = grads.find(impl);
        if (found == grads.end()) continue;
        Tensor g = found->second;
        const Node& node = *impl->grad_fn;
        std::vector<Tensor> input_grads;
        if (create_graph) {
            if (!node.second_order) {
                throw UnsupportedOpError("double-backward through op '" + node.name +
                                         "' has no second-order rule");
            }
            input_grads = node.backward(g);
        } else {
            NoGradGuard ng;
            input_grads = node.backward(g);
        }
        if (input_grads.size() != node.inputs.size()) {
            throw Error("op '" + node.name + "' backward returned wrong arity");
        }
        for (size_t k = 0; k < node.inputs.size(); ++k) {
            const Tensor& in = node.inputs[k];
            if (!in.requires_grad()) continue;
            if (!input_grads[k].defined()) continue;
            auto slot = grads.find(in.impl().get());
            if (slot == grads.end()) {
                grads.emplace(in.impl().get(), input_grads[k]);
            } else if (create_graph) {
                slot->second = ops::add(slot->second, input_grads[k]);
            } else {
                NoGradGuard ng;
                slot->second = ops::add(slot->second, input_grads[k]);
            }
        }
    }
    return grads;
}

}  // namespace

void backward(const Tensor& loss, bool create_graph) {
    auto grads = sweep(loss, create_graph);
    // Deterministic accumulation order: revisit topo order, not map order.
    if (!loss.requires_grad()) return;
    auto order = topo_order(loss.impl().get());
    for (TensorImpl* impl : order) {
        if (impl->grad_fn || !impl->requires_grad) continue;
        auto found = grads.find(impl);
        if (found == grads.end()) continue;
        // Accumulate numerically into the leaf buffer.
        const Tensor& g = found->second;
        if (!impl->grad) {
            auto acc = std::make_shared<TensorImpl>();
            acc->shape = impl->shape;
            acc->data = std::vector<double>(g.data().begin(), g.data().end());
            impl->grad = std::move(acc);
        } else {
            auto& dst = impl->grad->data;
            auto src = g.data();
            for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        }
    }
}

std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& wrt,
                         bool create_graph) {
    auto grads = sweep(output, create_graph);
    std::vector<Tensor> out;
    out.reserve(wrt.size());
    for (const auto& w : wrt) {
        auto found = grads.find(w.impl().get());
        if (found != grads.end()) {
            out.push_back(found->second);
        } else {
            out.push_back(Tensor::zeros(w.shape()));
        }
    }
    return out;
}

}  // namespace wavetts
