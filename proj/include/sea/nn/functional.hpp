#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "sea/nn/tape.hpp"
#include "sea/nn/tensor.hpp"

namespace sea::nn {

// Plain (tape-free) counterparts of the training ops. These are what the
// momentum path and all evaluation code run.

template <class S>
Tensor<S> dense_fwd(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b) {
    if (x.cols() != w.cols()) throw ValidationError("dense: input width does not match weight");
    const std::size_t N = x.rows(), O = w.rows();
    Tensor<S> y = Tensor<S>::zeros({N, O});
    mat::matmul_nt(x, w, y);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t o = 0; o < O; ++o) y.data[n * O + o] += b.data[o];
    return y;
}

template <class S>
Tensor<S> relu_fwd(Tensor<S> x) {
    for (auto& v : x.data) v = v > S{0} ? v : S{0};
    return x;
}

// Max-subtracted softmax over a vector; strictly positive outputs.
template <class S>
std::vector<S> softmax(const std::vector<S>& logits) {
    if (logits.empty()) throw ValidationError("softmax: empty input");
    S zmax = logits[0];
    for (const S z : logits) zmax = std::max(zmax, z);
    std::vector<S> out(logits.size());
    S denom{0};
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - zmax);
        denom += out[i];
    }
    for (auto& v : out) v /= denom;
    return out;
}

template <class S>
S sigmoid(S x) {
    return S{1} / (S{1} + std::exp(-x));
}

// Mean negative log-likelihood of the given classes under row distributions.
template <class S>
S cross_entropy(const std::vector<std::vector<S>>& probs, const std::vector<std::int32_t>& labels) {
    if (probs.empty() || probs.size() != labels.size())
        throw ValidationError("cross_entropy: batch sizes differ or empty");
    S total{0};
    for (std::size_t n = 0; n < probs.size(); ++n) {
        const auto label = static_cast<std::size_t>(labels[n]);
        if (label >= probs[n].size()) throw ValidationError("cross_entropy: label out of range");
        total -= std::log(probs[n][label]);
    }
    return total / static_cast<S>(probs.size());
}

// Binary cross-entropy from a logit; stable softplus form.
template <class S>
S bce_from_logit(S logit, bool target) {
    const S softplus = std::max(logit, S{0}) + std::log1p(std::exp(-std::abs(logit)));
    return softplus - logit * (target ? S{1} : S{0});
}

template <class S>
std::vector<S> l2_normalize(const std::vector<S>& v) {
    if (v.empty()) throw ValidationError("l2_normalize: empty input");
    S sq{0};
    for (const S x : v) sq += x * x;
    const S norm = std::sqrt(sq);
    if (!(norm >= S{1e-12})) throw ValidationError("l2_normalize: vector norm below 1e-12");
    std::vector<S> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
    return out;
}

template <class S>
Tensor<S> l2_normalize_rows(const Tensor<S>& x) {
    const std::size_t N = x.rows(), D = x.cols();
    Tensor<S> y = Tensor<S>::zeros({N, D});
    for (std::size_t n = 0; n < N; ++n) {
        S sq{0};
        for (std::size_t i = 0; i < D; ++i) sq += x.data[n * D + i] * x.data[n * D + i];
        const S norm = std::sqrt(sq);
        if (!(norm >= S{1e-12})) throw ValidationError("l2_normalize: vector norm below 1e-12");
        for (std::size_t i = 0; i < D; ++i) y.data[n * D + i] = x.data[n * D + i] / norm;
    }
    return y;
}

}  // namespace sea::nn
