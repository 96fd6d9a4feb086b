#include "wavetts/ops.h"

#include <algorithm>
#include <cmath>

namespace wavetts::ops {

namespace {

// Broadcast layout for elementwise binaries: identical shapes, or equal rank
// with every axis matching except the last, where exactly one side has
// extent 1.
struct BinLayout {
    Shape out_shape;
    size_t rows = 1;       // product of the leading axes
    size_t out_last = 1;   // extent of the last axis
    size_t a_last = 1;
    size_t b_last = 1;
};

BinLayout bin_layout(const char* op, const Tensor& a, const Tensor& b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa.size() != sb.size() || sa.empty()) {
        throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(sa) +
                             " vs " + shape_str(sb));
    }
    for (size_t i = 0; i + 1 < sa.size(); ++i) {
        if (sa[i] != sb[i]) {
            throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(sa) +
                                 " vs " + shape_str(sb));
        }
    }
    const size_t la = sa.back();
    const size_t lb = sb.back();
    if (la != lb && la != 1 && lb != 1) {
        throw DimensionError(std::string(op) + ": incompatible broadcast " + shape_str(sa) +
                             " vs " + shape_str(sb));
    }
    BinLayout lay;
    lay.out_shape = sa;
    lay.out_shape.back() = std::max(la, lb);
    lay.out_last = lay.out_shape.back();
    lay.a_last = la;
    lay.b_last = lb;
    lay.rows = shape_numel(lay.out_shape) / lay.out_last;
    return lay;
}

// If the op broadcast `t`'s size-1 last axis, collapse the gradient back.
Tensor reduce_to(const Tensor& g, const Shape& target) {
    if (g.shape() == target) return g;
    return sum_last(g);
}

template <typename F>
std::vector<double> bin_eval(const BinLayout& lay, const Tensor& a, const Tensor& b, F f) {
    std::vector<double> out(lay.rows * lay.out_last);
    auto da = a.data();
    auto db = b.data();
    for (size_t r = 0; r < lay.rows; ++r) {
        const double* pa = da.data() + r * lay.a_last;
        const double* pb = db.data() + r * lay.b_last;
        double* po = out.data() + r * lay.out_last;
        for (size_t j = 0; j < lay.out_last; ++j) {
            po[j] = f(pa[lay.a_last == 1 ? 0 : j], pb[lay.b_last == 1 ? 0 : j]);
        }
    }
    return out;
}

template <typename F>
Tensor unary_op(const std::string& name, const Tensor& x, F f,
                std::function<std::vector<Tensor>(const Tensor&)> bw) {
    std::vector<double> out(x.numel());
    auto dx = x.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] = f(dx[i]);
    return make_op(name, true, {x}, x.shape(), std::move(out), std::move(bw));
}

double stable_sigmoid(double v) {
    if (v >= 0.0) {
        const double e = std::exp(-v);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(v);
    return e / (1.0 + e);
}

double stable_softplus(double v) {
    // log(1 + e^v) without overflow.
    if (v > 36.0) return v;
    if (v < -36.0) return std::exp(v);
    return std::log1p(std::exp(v));
}

Tensor const_like_mask(const Tensor& x, const std::vector<double>& mask) {
    return Tensor::from_vector(x.shape(), mask);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    auto lay = bin_layout("add", a, b);
    auto out = bin_eval(lay, a, b, [](double x, double y) { return x + y; });
    Shape as = a.shape(), bs = b.shape();
    return make_op("add", true, {a, b}, lay.out_shape, std::move(out),
                   [as, bs](const Tensor& g) -> std::vector<Tensor> {
                       return {reduce_to(g, as), reduce_to(g, bs)};
                   });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    auto lay = bin_layout("sub", a, b);
    auto out = bin_eval(lay, a, b, [](double x, double y) { return x - y; });
    Shape as = a.shape(), bs = b.shape();
    return make_op("sub", true, {a, b}, lay.out_shape, std::move(out),
                   [as, bs](const Tensor& g) -> std::vector<Tensor> {
                       return {reduce_to(g, as), reduce_to(neg(g), bs)};
                   });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    auto lay = bin_layout("mul", a, b);
    auto out = bin_eval(lay, a, b, [](double x, double y) { return x * y; });
    Shape as = a.shape(), bs = b.shape();
    return make_op("mul", true, {a, b}, lay.out_shape, std::move(out),
                   [a, b, as, bs](const Tensor& g) -> std::vector<Tensor> {
                       return {reduce_to(mul(g, b), as), reduce_to(mul(g, a), bs)};
                   });
}

Tensor div(const Tensor& a, const Tensor& b) {
    for (double v : b.data()) {
        if (v == 0.0) throw DomainError("div: division by zero");
    }
    auto lay = bin_layout("div", a, b);
    auto out = bin_eval(lay, a, b, [](double x, double y) { return x / y; });
    Shape as = a.shape(), bs = b.shape();
    return make_op("div", true, {a, b}, lay.out_shape, std::move(out),
                   [a, b, as, bs](const Tensor& g) -> std::vector<Tensor> {
                       Tensor ga = reduce_to(div(g, b), as);
                       Tensor gb = reduce_to(neg(div(mul(g, a), mul(b, b))), bs);
                       return {ga, gb};
                   });
}

Tensor neg(const Tensor& x) {
    return unary_op("neg", x, [](double v) { return -v; },
                    [](const Tensor& g) -> std::vector<Tensor> { return {neg(g)}; });
}

Tensor sigmoid(const Tensor& x) {
    return unary_op("sigmoid", x, stable_sigmoid,
                    [x](const Tensor& g) -> std::vector<Tensor> {
                        Tensor s = sigmoid(x);
                        Tensor ds = mul(s, add_scalar(neg(s), 1.0));
                        return {mul(g, ds)};
                    });
}

Tensor tanh_(const Tensor& x) {
    return unary_op("tanh", x, [](double v) { return std::tanh(v); },
                    [x](const Tensor& g) -> std::vector<Tensor> {
                        Tensor t = tanh_(x);
                        return {mul(g, add_scalar(neg(mul(t, t)), 1.0))};
                    });
}

Tensor relu(const Tensor& x) {
    std::vector<double> mask(x.numel());
    auto dx = x.data();
    for (size_t i = 0; i < mask.size(); ++i) mask[i] = dx[i] > 0.0 ? 1.0 : 0.0;
    return unary_op("relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
                    [x, mask](const Tensor& g) -> std::vector<Tensor> {
                        return {mul(g, const_like_mask(x, mask))};
                    });
}

Tensor log_(const Tensor& x) {
    for (double v : x.data()) {
        if (v <= 0.0) throw DomainError("log: nonpositive input " + std::to_string(v));
    }
    return unary_op("log", x, [](double v) { return std::log(v); },
                    [x](const Tensor& g) -> std::vector<Tensor> { return {div(g, x)}; });
}

Tensor exp_(const Tensor& x) {
    return unary_op("exp", x, [](double v) { return std::exp(v); },
                    [x](const Tensor& g) -> std::vector<Tensor> {
                        return {mul(g, exp_(x))};
                    });
}

Tensor sqrt_(const Tensor& x) {
    for (double v : x.data()) {
        if (v < 0.0) throw DomainError("sqrt: negative input " + std::to_string(v));
    }
    return unary_op("sqrt", x, [](double v) { return std::sqrt(v); },
                    [x](const Tensor& g) -> std::vector<Tensor> {
                        return {mul_scalar(div(g, sqrt_(x)), 0.5)};
                    });
}

Tensor softplus(const Tensor& x) {
    return unary_op("softplus", x, stable_softplus,
                    [x](const Tensor& g) -> std::vector<Tensor> {
                        return {mul(g, sigmoid(x))};
                    });
}

Tensor expm1_(const Tensor& x) {
    return unary_op("expm1", x, [](double v) { return std::expm1(v); },
                    [x](const Tensor& g) -> std::vector<Tensor> {
                        return {mul(g, exp_(x))};
                    });
}

Tensor log1mexp(const Tensor& x) {
    for (double v : x.data()) {
        if (v <= 0.0) throw DomainError("log1mexp: requires positive input, got " +
                                        std::to_string(v));
    }
    constexpr double kLn2 = 0.6931471805599453;
    return unary_op(
        "log1mexp", x,
        [](double v) {
            return v <= kLn2 ? std::log(-std::expm1(-v)) : std::log1p(-std::exp(-v));
        },
        [x](const Tensor& g) -> std::vector<Tensor> {
            // d/dx log(1-e^{-x}) = 1/(e^x - 1)
            return {div(g, expm1_(x))};
        });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
    std::vector<double> mask(x.numel());
    auto dx = x.data();
    for (size_t i = 0; i < mask.size(); ++i) {
        mask[i] = (dx[i] > lo && dx[i] < hi) ? 1.0 : 0.0;
    }
    return unary_op("clamp", x,
                    [lo, hi](double v) { return std::min(hi, std::max(lo, v)); },
                    [x, mask](const Tensor& g) -> std::vector<Tensor> {
                        return {mul(g, const_like_mask(x, mask))};
                    });
}

Tensor add_scalar(const Tensor& x, double c) {
    return unary_op("add_scalar", x, [c](double v) { return v + c; },
                    [](const Tensor& g) -> std::vector<Tensor> { return {g}; });
}

Tensor mul_scalar(const Tensor& x, double c) {
    return unary_op("mul_scalar", x, [c](double v) { return v * c; },
                    [c](const Tensor& g) -> std::vector<Tensor> {
                        return {mul_scalar(g, c)};
                    });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0]) {
        throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    }
    const size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    std::vector<double> out(m * n, 0.0);
    auto da = a.data();
    auto db = b.data();
    // i-k-j order: streams b rows, accumulates into the output row.
    for (size_t i = 0; i < m; ++i) {
        double* po = out.data() + i * n;
        for (size_t kk = 0; kk < k; ++kk) {
            const double av = da[i * k + kk];
            if (av == 0.0) continue;
            const double* pb = db.data() + kk * n;
            for (size_t j = 0; j < n; ++j) po[j] += av * pb[j];
        }
    }
    return make_op("matmul", true, {a, b}, {m, n}, std::move(out),
                   [a, b](const Tensor& g) -> std::vector<Tensor> {
                       return {matmul(g, transpose(b)), matmul(transpose(a), g)};
                   });
}

Tensor transpose(const Tensor& x) {
    if (x.shape().size() != 2) {
        throw DimensionError("transpose: expected rank 2, got " + shape_str(x.shape()));
    }
    const size_t r = x.shape()[0], c = x.shape()[1];
    std::vector<double> out(r * c);
    auto dx = x.data();
    for (size_t i = 0; i < r; ++i) {
        for (size_t j = 0; j < c; ++j) out[j * r + i] = dx[i * c + j];
    }
    return make_op("transpose", true, {x}, {c, r}, std::move(out),
                   [](const Tensor& g) -> std::vector<Tensor> { return {transpose(g)}; });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows: empty input");
    const size_t c = parts[0].cols();
    size_t total = 0;
    for (const auto& p : parts) {
        if (p.shape().size() != 2 || p.cols() != c) {
            throw DimensionError("concat_rows: column mismatch " + shape_str(p.shape()));
        }
        total += p.rows();
    }
    std::vector<double> out;
    out.reserve(total * c);
    for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
    std::vector<size_t> row_counts;
    for (const auto& p : parts) row_counts.push_back(p.rows());
    return make_op("concat_rows", true, parts, {total, c}, std::move(out),
                   [row_counts](const Tensor& g) -> std::vector<Tensor> {
                       std::vector<Tensor> gs;
                       size_t r = 0;
                       for (size_t n : row_counts) {
                           gs.push_back(slice_rows(g, r, r + n));
                           r += n;
                       }
                       return gs;
                   });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: empty input");
    const size_t r = parts[0].rows();
    size_t total = 0;
    for (const auto& p : parts) {
        if (p.shape().size() != 2 || p.rows() != r) {
            throw DimensionError("concat_cols: row mismatch " + shape_str(p.shape()));
        }
        total += p.cols();
    }
    std::vector<double> out(r * total);
    size_t off = 0;
    for (const auto& p : parts) {
        const size_t pc = p.cols();
        auto dp = p.data();
        for (size_t i = 0; i < r; ++i) {
            std::copy(dp.begin() + i * pc, dp.begin() + (i + 1) * pc,
                      out.begin() + i * total + off);
        }
        off += pc;
    }
    std::vector<size_t> col_counts;
    for (const auto& p : parts) col_counts.push_back(p.cols());
    return make_op("concat_cols", true, parts, {r, total}, std::move(out),
                   [col_counts](const Tensor& g) -> std::vector<Tensor> {
                       std::vector<Tensor> gs;
                       size_t c = 0;
                       for (size_t n : col_counts) {
                           gs.push_back(slice_cols(g, c, c + n));
                           c += n;
                       }
                       return gs;
                   });
}

namespace {

// Zero tensor with `g` placed at a row/col offset; backward of slicing.
Tensor pad_rows(const Tensor& g, size_t total_rows, size_t r0) {
    const size_t c = g.cols();
    std::vector<double> out(total_rows * c, 0.0);
    std::copy(g.data().begin(), g.data().end(), out.begin() + r0 * c);
    const size_t gr = g.rows();
    return make_op("pad_rows", true, {g}, {total_rows, c}, std::move(out),
                   [r0, gr](const Tensor& gg) -> std::vector<Tensor> {
                       return {slice_rows(gg, r0, r0 + gr)};
                   });
}

Tensor pad_cols(const Tensor& g, size_t total_cols, size_t c0) {
    const size_t r = g.rows(), gc = g.cols();
    std::vector<double> out(r * total_cols, 0.0);
    auto dg = g.data();
    for (size_t i = 0; i < r; ++i) {
        std::copy(dg.begin() + i * gc, dg.begin() + (i + 1) * gc,
                  out.begin() + i * total_cols + c0);
    }
    return make_op("pad_cols", true, {g}, {r, total_cols}, std::move(out),
                   [c0, gc](const Tensor& gg) -> std::vector<Tensor> {
                       return {slice_cols(gg, c0, c0 + gc)};
                   });
}

}  // namespace

Tensor slice_rows(const Tensor& x, size_t r0, size_t r1) {
    if (x.shape().size() != 2 || r0 >= r1 || r1 > x.rows()) {
        throw DimensionError("slice_rows: range [" + std::to_string(r0) + ", " +
                             std::to_string(r1) + ") on " + shape_str(x.shape()));
    }
    const size_t c = x.cols();
    std::vector<double> out(x.data().begin() + r0 * c, x.data().begin() + r1 * c);
    const size_t total = x.rows();
    return make_op("slice_rows", true, {x}, {r1 - r0, c}, std::move(out),
                   [total, r0](const Tensor& g) -> std::vector<Tensor> {
                       return {pad_rows(g, total, r0)};
                   });
}

Tensor slice_cols(const Tensor& x, size_t c0, size_t c1) {
    if (x.shape().size() != 2 || c0 >= c1 || c1 > x.cols()) {
        throw DimensionError("slice_cols: range [" + std::to_string(c0) + ", " +
                             std::to_string(c1) + ") on " + shape_str(x.shape()));
    }
    const size_t r = x.rows(), c = x.cols(), w = c1 - c0;
    std::vector<double> out(r * w);
    auto dx = x.data();
    for (size_t i = 0; i < r; ++i) {
        std::copy(dx.begin() + i * c + c0, dx.begin() + i * c + c1, out.begin() + i * w);
    }
    const size_t total = c;
    return make_op("slice_cols", true, {x}, {r, w}, std::move(out),
                   [total, c0](const Tensor& g) -> std::vector<Tensor> {
                       return {pad_cols(g, total, c0)};
                   });
}

Tensor flip_rows(const Tensor& x) {
    const size_t r = x.rows(), c = x.cols();
    std::vector<double> out(r * c);
    auto dx = x.data();
    for (size_t i = 0; i < r; ++i) {
        std::copy(dx.begin() + i * c, dx.begin() + (i + 1) * c,
                  out.begin() + (r - 1 - i) * c);
    }
    return make_op("flip_rows", true, {x}, {r, c}, std::move(out),
                   [](const Tensor& g) -> std::vector<Tensor> { return {flip_rows(g)}; });
}

Tensor broadcast_rows(const Tensor& row, size_t t) {
    if (row.shape().size() != 2 || row.rows() != 1) {
        throw DimensionError("broadcast_rows: expected [1 x C], got " + shape_str(row.shape()));
    }
    const size_t c = row.cols();
    std::vector<double> out(t * c);
    for (size_t i = 0; i < t; ++i) {
        std::copy(row.data().begin(), row.data().end(), out.begin() + i * c);
    }
    return make_op("broadcast_rows", true, {row}, {t, c}, std::move(out),
                   [](const Tensor& g) -> std::vector<Tensor> { return {sum_rows(g)}; });
}

Tensor sum_rows(const Tensor& x) {
    const size_t r = x.rows(), c = x.cols();
    std::vector<double> out(c, 0.0);
    auto dx = x.data();
    for (size_t i = 0; i < r; ++i) {
        for (size_t j = 0; j < c; ++j) out[j] += dx[i * c + j];
    }
    return make_op("sum_rows", true, {x}, {1, c}, std::move(out),
                   [r](const Tensor& g) -> std::vector<Tensor> {
                       return {broadcast_rows(g, r)};
                   });
}

Tensor sum_last(const Tensor& x) {
    const Shape& s = x.shape();
    if (s.empty()) throw DimensionError("sum_last: rank-0 tensor");
    const size_t last = s.back();
    const size_t rows = x.numel() / last;
    std::vector<double> out(rows, 0.0);
    auto dx = x.data();
    for (size_t r = 0; r < rows; ++r) {
        for (size_t j = 0; j < last; ++j) out[r] += dx[r * last + j];
    }
    Shape os = s;
    os.back() = 1;
    Shape xs = s;
    return make_op("sum_last", true, {x}, os, std::move(out),
                   [xs](const Tensor& g) -> std::vector<Tensor> {
                       // Spread across the last axis via broadcast multiply.
                       return {mul(g, Tensor::full(xs, 1.0))};
                   });
}

namespace {

// Spread a shape-{1} tensor across a full shape; backward of a reduction.
Tensor spread_scalar(const Tensor& s, const Shape& shape) {
    std::vector<double> out(shape_numel(shape), s.item());
    return make_op("spread_scalar", true, {s}, shape, std::move(out),
                   [](const Tensor& g) -> std::vector<Tensor> { return {sum_all(g)}; });
}

}  // namespace

Tensor sum_all(const Tensor& x) {
    double total = 0.0;
    for (double v : x.data()) total += v;
    Shape xs = x.shape();
    return make_op("sum_all", true, {x}, {1}, {total},
                   [xs](const Tensor& g) -> std::vector<Tensor> {
                       return {spread_scalar(g, xs)};
                   });
}

Tensor mean_all(const Tensor& x) {
    double total = 0.0;
    for (double v : x.data()) total += v;
    const double n = static_cast<double>(x.numel());
    Shape xs = x.shape();
    return make_op("mean_all", true, {x}, {1}, {total / n},
                   [xs, n](const Tensor& g) -> std::vector<Tensor> {
                       return {mul_scalar(spread_scalar(g, xs), 1.0 / n)};
                   });
}

Tensor max_last_const(const Tensor& x) {
    const Shape& s = x.shape();
    const size_t last = s.back();
    const size_t rows = x.numel() / last;
    std::vector<double> out(rows);
    auto dx = x.data();
    for (size_t r = 0; r < rows; ++r) {
        double m = dx[r * last];
        for (size_t j = 1; j < last; ++j) m = std::max(m, dx[r * last + j]);
        out[r] = m;
    }
    Shape os = s;
    os.back() = 1;
    return Tensor::from_vector(os, std::move(out));
}

Tensor logsumexp_last(const Tensor& x) {
    // The subtracted max is a constant; its contribution to the gradient
    // cancels analytically, so detaching it keeps gradients exact.
    Tensor m = max_last_const(x);
    Tensor shifted = sub(x, m);
    Tensor lse = log_(sum_last(exp_(shifted)));
    return add(lse, m);
}

Tensor conv1d_causal(const Tensor& input, const Tensor& weights, size_t dilation) {
    if (input.shape().size() != 2 || weights.shape().size() != 3) {
        throw DimensionError("conv1d_causal: expected input [Cin x T], weights "
                             "[Cout x Cin x KW], got " + shape_str(input.shape()) + " and " +
                             shape_str(weights.shape()));
    }
    const size_t cin = input.shape()[0], t = input.shape()[1];
    const size_t cout = weights.shape()[0], wcin = weights.shape()[1], kw = weights.shape()[2];
    if (wcin != cin) {
        throw DimensionError("conv1d_causal: channel mismatch " + shape_str(input.shape()) +
                             " vs " + shape_str(weights.shape()));
    }
    if (kw < 1 || dilation < 1) throw DomainError("conv1d_causal: kw and dilation must be >= 1");

    std::vector<double> out(cout * t, 0.0);
    auto dx = input.data();
    auto dw = weights.data();
    for (size_t o = 0; o < cout; ++o) {
        for (size_t ci = 0; ci < cin; ++ci) {
            const double* wrow = dw.data() + (o * cin + ci) * kw;
            const double* xrow = dx.data() + ci * t;
            double* orow = out.data() + o * t;
            for (size_t k = 0; k < kw; ++k) {
                const double wv = wrow[k];
                if (wv == 0.0) continue;
                const size_t back = (kw - 1 - k) * dilation;
                for (size_t tt = back; tt < t; ++tt) orow[tt] += wv * xrow[tt - back];
            }
        }
    }
    return make_op(
        "conv1d_causal", false, {input, weights}, {cout, t}, std::move(out),
        [input, weights, dilation, cin, cout, t, kw](const Tensor& g) -> std::vector<Tensor> {
            auto dg = g.data();
            auto dx = input.data();
            auto dw = weights.data();
            std::vector<double> gx(cin * t, 0.0);
            std::vector<double> gw(cout * cin * kw, 0.0);
            for (size_t o = 0; o < cout; ++o) {
                for (size_t ci = 0; ci < cin; ++ci) {
                    const double* wrow = dw.data() + (o * cin + ci) * kw;
                    const double* xrow = dx.data() + ci * t;
                    const double* grow = dg.data() + o * t;
                    double* gxrow = gx.data() + ci * t;
                    double* gwrow = gw.data() + (o * cin + ci) * kw;
                    for (size_t k = 0; k < kw; ++k) {
                        const size_t back = (kw - 1 - k) * dilation;
                        const double wv = wrow[k];
                        double acc = 0.0;
                        for (size_t tt = back; tt < t; ++tt) {
                            acc += grow[tt] * xrow[tt - back];
                            gxrow[tt - back] += grow[tt] * wv;
                        }
                        gwrow[k] = acc;
                    }
                }
            }
            return {Tensor::from_vector({cin, t}, std::move(gx)),
                    Tensor::from_vector({cout, cin, kw}, std::move(gw))};
        });
}

Tensor conv1d_transposed(const Tensor& input, const Tensor& weights, size_t stride) {
    if (input.shape().size() != 2 || weights.shape().size() != 3) {
        throw DimensionError("conv1d_transposed: expected input [Cin x T], weights "
                             "[Cin x Cout x KW], got " + shape_str(input.shape()) + " and " +
                             shape_str(weights.shape()));
    }
    const size_t cin = input.shape()[0], t = input.shape()[1];
    const size_t wcin = weights.shape()[0], cout = weights.shape()[1], kw = weights.shape()[2];
    if (wcin != cin) {
        throw DimensionError("conv1d_transposed: channel mismatch " + shape_str(input.shape()) +
                             " vs " + shape_str(weights.shape()));
    }
    if (stride < 1) throw DomainError("conv1d_transposed: stride must be >= 1");

    const size_t out_t = t * stride;
    std::vector<double> out(cout * out_t, 0.0);
    auto dx = input.data();
    auto dw = weights.data();
    for (size_t ci = 0; ci < cin; ++ci) {
        const double* xrow = dx.data() + ci * t;
        for (size_t o = 0; o < cout; ++o) {
            const double* wrow = dw.data() + (ci * cout + o) * kw;
            double* orow = out.data() + o * out_t;
            for (size_t tt = 0; tt < t; ++tt) {
                const double xv = xrow[tt];
                if (xv == 0.0) continue;
                const size_t base = tt * stride;
                const size_t kmax = std::min(kw, out_t - base);
                for (size_t k = 0; k < kmax; ++k) orow[base + k] += xv * wrow[k];
            }
        }
    }
    return make_op(
        "conv1d_transposed", false, {input, weights}, {cout, out_t}, std::move(out),
        [input, weights, stride, cin, cout, t, kw, out_t](const Tensor& g)
            -> std::vector<Tensor> {
            auto dg = g.data();
            auto dx = input.data();
            auto dw = weights.data();
            std::vector<double> gx(cin * t, 0.0);
            std::vector<double> gw(cin * cout * kw, 0.0);
            for (size_t ci = 0; ci < cin; ++ci) {
                const double* xrow = dx.data() + ci * t;
                double* gxrow = gx.data() + ci * t;
                for (size_t o = 0; o < cout; ++o) {
                    const double* wrow = dw.data() + (ci * cout + o) * kw;
                    const double* grow = dg.data() + o * out_t;
                    double* gwrow = gw.data() + (ci * cout + o) * kw;
                    for (size_t tt = 0; tt < t; ++tt) {
                        const size_t base = tt * stride;
                        const size_t kmax = std::min(kw, out_t - base);
                        double acc = 0.0;
                        for (size_t k = 0; k < kmax; ++k) {
                            acc += grow[base + k] * wrow[k];
                            gwrow[k] += grow[base + k] * xrow[tt];
                        }
                        gxrow[tt] += acc;
                    }
                }
            }
            return {Tensor::from_vector({cin, t}, std::move(gx)),
                    Tensor::from_vector({cin, cout, kw}, std::move(gw))};
        });
}

}  // namespace wavetts::ops
