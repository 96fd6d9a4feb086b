#include "wavetts/dml.h"

#include <algorithm>
#include <cmath>

#include "wavetts/error.h"
#include "wavetts/ops.h"

namespace wavetts::vocoder {

namespace op = wavetts::ops;

namespace {

double log_sigmoid(double x) {
    // -softplus(-x)
    if (x < -36.0) return x;
    if (x > 36.0) return -std::exp(-x);
    return -std::log1p(std::exp(-x));
}

double log1mexp_scalar(double x) {
    constexpr double kLn2 = 0.6931471805599453;
    return x <= kLn2 ? std::log(-std::expm1(-x)) : std::log1p(-std::exp(-x));
}

double logsumexp(const std::vector<double>& v) {
    double m = v[0];
    for (double x : v) m = std::max(m, x);
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

void validate(const DmlParams& p, size_t zeta) {
    const size_t k = p.components();
    if (k == 0 || p.mu.size() != k || p.log_phi.size() != k) {
        throw DomainError("DmlParams: inconsistent component counts");
    }
    if (zeta < 2) throw DomainError("DmlParams: zeta must be at least 2");
    for (double lp : p.log_phi) {
        if (!std::isfinite(lp)) throw DomainError("DmlParams: non-finite log-scale");
    }
}

}  // namespace

std::vector<double> DmlParams::weights() const {
    const double lse = logsumexp(logit_pi);
    std::vector<double> w(logit_pi.size());
    for (size_t i = 0; i < w.size(); ++i) w[i] = std::exp(logit_pi[i] - lse);
    return w;
}

DmlParams DmlParams::from_scales(std::vector<double> logit_pi, std::vector<double> mu,
                                 std::vector<double> phi) {
    DmlParams p;
    p.logit_pi = std::move(logit_pi);
    p.mu = std::move(mu);
    p.log_phi.reserve(phi.size());
    for (double s : phi) {
        if (s <= 0.0) {
            throw DomainError("DmlParams: scale must be positive, got " + std::to_string(s));
        }
        p.log_phi.push_back(std::log(s));
    }
    return p;
}

double dml_logprob(size_t s, const DmlParams& p, size_t zeta) {
    validate(p, zeta);
    if (s >= zeta) {
        throw DomainError("dml_logprob: class " + std::to_string(s) + " out of range [0, " +
                          std::to_string(zeta - 1) + "]");
    }
    const size_t k = p.components();
    const double pi_lse = logsumexp(p.logit_pi);
    std::vector<double> terms(k);
    for (size_t i = 0; i < k; ++i) {
        const double inv = std::exp(-p.log_phi[i]) * 2.0 / static_cast<double>(zeta);
        const double center = static_cast<double>(s) - p.mu[i];
        const double a = (center + 0.5) * inv;  // upper bin edge
        const double b = (center - 0.5) * inv;  // lower bin edge
        double log_bin;
        if (s == 0) {
            log_bin = log_sigmoid(a);  // lower edge at -inf
        } else if (s == zeta - 1) {
            log_bin = log_sigmoid(-b);  // upper edge at +inf
        } else {
            // log(sigma(a) - sigma(b)) = logsig(a) + logsig(-b) + log(1 - e^{b-a})
            log_bin = log_sigmoid(a) + log_sigmoid(-b) + log1mexp_scalar(inv);
        }
        terms[i] = p.logit_pi[i] - pi_lse + log_bin;
    }
    return logsumexp(terms);
}

size_t dml_sample(const DmlParams& p, size_t zeta, RngStream& rng) {
    validate(p, zeta);
    const auto w = p.weights();
    const double u_comp = rng.uniform();
    size_t comp = 0;
    double acc = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
        acc += w[i];
        if (u_comp < acc) {
            comp = i;
            break;
        }
        comp = i;
    }
    double u = rng.uniform();
    u = std::min(std::max(u, 1e-15), 1.0 - 1e-15);
    const double scale = std::exp(p.log_phi[comp]) * static_cast<double>(zeta) / 2.0;
    const double v = p.mu[comp] + scale * std::log(u / (1.0 - u));
    const double clamped =
        std::min(std::max(v, 0.0), static_cast<double>(zeta - 1));
    return static_cast<size_t>(std::lrint(clamped));
}

DmlParams decode_head_row(const double* row, size_t k, size_t zeta) {
    DmlParams p;
    p.logit_pi.assign(row, row + k);
    p.mu.resize(k);
    p.log_phi.resize(k);
    const double half = static_cast<double>(zeta - 1) / 2.0;
    for (size_t i = 0; i < k; ++i) {
        p.mu[i] = half * (1.0 + row[k + i]);
        p.log_phi[i] = std::max(row[2 * k + i] + kLogPhiOffset, kLogPhiFloor);
    }
    return p;
}

Tensor dml_nll(const Tensor& head, const std::vector<uint32_t>& classes,
               const std::vector<uint8_t>& selected, size_t zeta) {
    if (head.shape().size() != 2 || head.rows() != classes.size() ||
        selected.size() != classes.size()) {
        throw DimensionError("dml_nll: head " + shape_str(head.shape()) + " vs " +
                             std::to_string(classes.size()) + " targets");
    }
    if (head.cols() % 3 != 0) {
        throw DimensionError("dml_nll: head width " + std::to_string(head.cols()) +
                             " is not 3K");
    }
    const size_t n = head.rows();
    const size_t k = head.cols() / 3;
    size_t count = 0;
    for (uint8_t s : selected) count += s;
    if (count == 0) throw DomainError("dml_nll: empty position selection");
    for (uint32_t c : classes) {
        if (c >= zeta) {
            throw DomainError("dml_nll: class " + std::to_string(c) + " out of range");
        }
    }

    Tensor logit_pi = op::slice_cols(head, 0, k);
    Tensor mu_raw = op::slice_cols(head, k, 2 * k);
    Tensor logphi_raw = op::slice_cols(head, 2 * k, 3 * k);

    const double half = static_cast<double>(zeta - 1) / 2.0;
    Tensor mu = op::mul_scalar(op::add_scalar(mu_raw, 1.0), half);
    // max(x, floor) = relu(x - floor) + floor
    Tensor log_phi = op::add_scalar(
        op::relu(op::add_scalar(logphi_raw, kLogPhiOffset - kLogPhiFloor)), kLogPhiFloor);
    Tensor inv = op::mul_scalar(op::exp_(op::neg(log_phi)), 2.0 / static_cast<double>(zeta));

    std::vector<double> s_vals(n), m0(n), m_top(n), m_int(n), sel(n);
    for (size_t i = 0; i < n; ++i) {
        s_vals[i] = static_cast<double>(classes[i]);
        const bool lo = classes[i] == 0;
        const bool hi = classes[i] == zeta - 1;
        m0[i] = lo ? 1.0 : 0.0;
        m_top[i] = hi ? 1.0 : 0.0;
        m_int[i] = (lo || hi) ? 0.0 : 1.0;
        sel[i] = selected[i] ? 1.0 : 0.0;
    }
    Tensor s_col = Tensor::from_vector({n, 1}, s_vals);
    Tensor center = op::sub(s_col, mu);  // [N x K] via trailing broadcast
    Tensor a = op::mul(op::add_scalar(center, 0.5), inv);
    Tensor b = op::mul(op::add_scalar(center, -0.5), inv);

    // log sigmoid(x) = -softplus(-x)
    Tensor logsig_a = op::neg(op::softplus(op::neg(a)));
    Tensor logsig_nb = op::neg(op::softplus(b));
    Tensor log_delta = op::log1mexp(inv);

    Tensor keep_a = Tensor::from_vector({n, 1}, [&] {
        std::vector<double> v(n);
        for (size_t i = 0; i < n; ++i) v[i] = 1.0 - m_top[i];
        return v;
    }());
    Tensor keep_b = Tensor::from_vector({n, 1}, [&] {
        std::vector<double> v(n);
        for (size_t i = 0; i < n; ++i) v[i] = 1.0 - m0[i];
        return v;
    }());
    Tensor keep_delta = Tensor::from_vector({n, 1}, m_int);

    Tensor log_bin = op::add(op::add(op::mul(logsig_a, keep_a), op::mul(logsig_nb, keep_b)),
                             op::mul(log_delta, keep_delta));

    Tensor log_pi = op::sub(logit_pi, op::logsumexp_last(logit_pi));
    Tensor ll = op::logsumexp_last(op::add(log_pi, log_bin));  // [N x 1]

    Tensor sel_col = Tensor::from_vector({n, 1}, sel);
    Tensor total = op::sum_all(op::mul(ll, sel_col));
    return op::neg(op::mul_scalar(total, 1.0 / static_cast<double>(count)));
}

std::vector<uint8_t> select_half_per_frame(size_t n_samples, size_t hop, RngStream& rng) {
    std::vector<uint8_t> sel(n_samples, 0);
    const size_t per_frame = (hop + 1) / 2;
    for (size_t start = 0; start < n_samples; start += hop) {
        const size_t len = std::min(hop, n_samples - start);
        const size_t want = std::min(per_frame, len);
        // Partial Fisher-Yates over the frame's positions.
        std::vector<size_t> idx(len);
        for (size_t i = 0; i < len; ++i) idx[i] = start + i;
        for (size_t i = 0; i < want; ++i) {
            const size_t j = i + static_cast<size_t>(rng.below(len - i));
            std::swap(idx[i], idx[j]);
            sel[idx[i]] = 1;
        }
    }
    return sel;
}

}  // namespace wavetts::vocoder
