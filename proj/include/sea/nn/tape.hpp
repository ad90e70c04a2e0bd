#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "sea/instrument.hpp"
#include "sea/nn/tensor.hpp"

namespace sea::nn {

// Small dense matmul kernels, fixed loop order for determinism.
namespace mat {

// out[N,O] += A[N,I] * B[O,I]^T
// The dot product runs over four fixed-order partial sums; that keeps the
// result bit-deterministic while letting the compiler vectorize the lanes.
template <class S>
void matmul_nt(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& out) {
    const std::size_t N = a.rows(), I = a.cols(), O = b.rows();
    const std::size_t i4 = I - I % 4;
    for (std::size_t n = 0; n < N; ++n) {
        const S* ar = &a.data[n * I];
        for (std::size_t o = 0; o < O; ++o) {
            const S* br = &b.data[o * I];
            S acc0{0}, acc1{0}, acc2{0}, acc3{0};
            for (std::size_t i = 0; i < i4; i += 4) {
                acc0 += ar[i] * br[i];
                acc1 += ar[i + 1] * br[i + 1];
                acc2 += ar[i + 2] * br[i + 2];
                acc3 += ar[i + 3] * br[i + 3];
            }
            S acc = (acc0 + acc1) + (acc2 + acc3);
            for (std::size_t i = i4; i < I; ++i) acc += ar[i] * br[i];
            out.data[n * O + o] += acc;
        }
    }
}

// out[N,I] += A[N,O] * B[O,I]
template <class S>
void matmul_nn(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& out) {
    const std::size_t N = a.rows(), O = a.cols(), I = b.cols();
    for (std::size_t n = 0; n < N; ++n) {
        S* orow = &out.data[n * I];
        for (std::size_t o = 0; o < O; ++o) {
            const S s = a.data[n * O + o];
            const S* br = &b.data[o * I];
            for (std::size_t i = 0; i < I; ++i) orow[i] += s * br[i];
        }
    }
}

// out[O,I] += A[N,O]^T * B[N,I]
template <class S>
void matmul_tn(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& out) {
    const std::size_t N = a.rows(), O = a.cols(), I = b.cols();
    for (std::size_t n = 0; n < N; ++n) {
        const S* br = &b.data[n * I];
        for (std::size_t o = 0; o < O; ++o) {
            const S s = a.data[n * O + o];
            S* orow = &out.data[o * I];
            for (std::size_t i = 0; i < I; ++i) orow[i] += s * br[i];
        }
    }
}

}  // namespace mat

// Reverse-mode tape. Each op appends one node holding the forward value, a
// zeroed gradient buffer, and a closure that scatters the node's gradient
// back into its parents. Constants (momentum-encoder outputs, bank entries)
// are passed as plain tensors and never become nodes, so no gradient can
// reach them.
template <class S>
class Tape {
public:
    struct Var {
        std::uint32_t id = 0;
    };

    Var leaf(Tensor<S> value) { return push(std::move(value), nullptr); }

    const Tensor<S>& val(Var v) const { return nodes_[v.id].val; }
    const Tensor<S>& grad(Var v) const { return nodes_[v.id].grad; }

    std::size_t node_count() const { return nodes_.size(); }

    // y = x * W^T + b ; x:[N,in], W:[out,in], b:[out]
    Var dense(Var x, Var w, Var b) {
        const auto& xv = val(x);
        const auto& wv = val(w);
        const auto& bv = val(b);
        if (xv.cols() != wv.cols()) throw ValidationError("dense: input width does not match weight");
        if (bv.numel() != wv.rows()) throw ValidationError("dense: bias length does not match weight");
        const std::size_t N = xv.rows(), O = wv.rows();
        Tensor<S> y = Tensor<S>::zeros({N, O});
        mat::matmul_nt(xv, wv, y);
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t o = 0; o < O; ++o) y.data[n * O + o] += bv.data[o];
        return push(std::move(y), [this, x, w, b](const Tensor<S>& gy) {
            mat::matmul_nn(gy, nodes_[w.id].val, nodes_[x.id].grad);
            mat::matmul_tn(gy, nodes_[x.id].val, nodes_[w.id].grad);
            auto& gb = nodes_[b.id].grad;
            const std::size_t N2 = gy.rows(), O2 = gy.cols();
            for (std::size_t n = 0; n < N2; ++n)
                for (std::size_t o = 0; o < O2; ++o) gb.data[o] += gy.data[n * O2 + o];
        });
    }

    // Subgradient at exactly zero is zero.
    Var relu(Var x) {
        const auto& xv = val(x);
        Tensor<S> y = xv;
        for (auto& v : y.data) v = v > S{0} ? v : S{0};
        return push(std::move(y), [this, x](const Tensor<S>& gy) {
            auto& gx = nodes_[x.id].grad;
            const auto& xv2 = nodes_[x.id].val;
            for (std::size_t i = 0; i < gy.data.size(); ++i)
                if (xv2.data[i] > S{0}) gx.data[i] += gy.data[i];
        });
    }

    // [a | c] with a differentiable and c constant; both [N, *]
    Var concat_cols_const(Var a, const Tensor<S>& c) {
        const auto& av = val(a);
        if (av.rows() != c.rows()) throw ValidationError("concat: row counts differ");
        const std::size_t N = av.rows(), A = av.cols(), C = c.cols();
        Tensor<S> y = Tensor<S>::zeros({N, A + C});
        for (std::size_t n = 0; n < N; ++n) {
            for (std::size_t i = 0; i < A; ++i) y.data[n * (A + C) + i] = av.data[n * A + i];
            for (std::size_t i = 0; i < C; ++i) y.data[n * (A + C) + A + i] = c.data[n * C + i];
        }
        return push(std::move(y), [this, a, A, C](const Tensor<S>& gy) {
            auto& ga = nodes_[a.id].grad;
            const std::size_t N2 = gy.rows();
            for (std::size_t n = 0; n < N2; ++n)
                for (std::size_t i = 0; i < A; ++i) ga.data[n * A + i] += gy.data[n * (A + C) + i];
        });
    }

    Var concat_cols(Var a, Var b) {
        const auto& av = val(a);
        const auto& bv = val(b);
        if (av.rows() != bv.rows()) throw ValidationError("concat: row counts differ");
        const std::size_t N = av.rows(), A = av.cols(), B = bv.cols();
        Tensor<S> y = Tensor<S>::zeros({N, A + B});
        for (std::size_t n = 0; n < N; ++n) {
            for (std::size_t i = 0; i < A; ++i) y.data[n * (A + B) + i] = av.data[n * A + i];
            for (std::size_t i = 0; i < B; ++i) y.data[n * (A + B) + A + i] = bv.data[n * B + i];
        }
        return push(std::move(y), [this, a, b, A, B](const Tensor<S>& gy) {
            auto& ga = nodes_[a.id].grad;
            auto& gb = nodes_[b.id].grad;
            const std::size_t N2 = gy.rows();
            for (std::size_t n = 0; n < N2; ++n) {
                for (std::size_t i = 0; i < A; ++i) ga.data[n * A + i] += gy.data[n * (A + B) + i];
                for (std::size_t i = 0; i < B; ++i) gb.data[n * B + i] += gy.data[n * (A + B) + A + i];
            }
        });
    }

    // Row-wise L2 normalization. Throws if any row norm falls below 1e-12.
    Var l2norm_rows(Var x) {
        const auto& xv = val(x);
        const std::size_t N = xv.rows(), D = xv.cols();
        Tensor<S> y = Tensor<S>::zeros({N, D});
        std::vector<S> norms(N);
        for (std::size_t n = 0; n < N; ++n) {
            S sq{0};
            for (std::size_t i = 0; i < D; ++i) sq += xv.data[n * D + i] * xv.data[n * D + i];
            const S norm = std::sqrt(sq);
            if (!(norm >= S{1e-12})) throw ValidationError("l2_normalize: vector norm below 1e-12");
            norms[n] = norm;
            for (std::size_t i = 0; i < D; ++i) y.data[n * D + i] = xv.data[n * D + i] / norm;
        }
        return push(std::move(y), [this, x, norms](const Tensor<S>& gy) {
            auto& gx = nodes_[x.id].grad;
            const auto& xv2 = nodes_[x.id].val;
            const std::size_t N2 = gy.rows(), D2 = gy.cols();
            for (std::size_t n = 0; n < N2; ++n) {
                const S norm = norms[n];
                S dot{0};
                for (std::size_t i = 0; i < D2; ++i)
                    dot += gy.data[n * D2 + i] * xv2.data[n * D2 + i] / norm;
                for (std::size_t i = 0; i < D2; ++i) {
                    const S yni = xv2.data[n * D2 + i] / norm;
                    gx.data[n * D2 + i] += (gy.data[n * D2 + i] - yni * dot) / norm;
                }
            }
        });
    }

    // q:[N,D] x M:[K,D]^T -> [N,K], M constant (bank negatives)
    Var matmul_nt_const(Var q, Tensor<S> m) {
        const auto& qv = val(q);
        if (qv.cols() != m.cols()) throw ValidationError("matmul: widths differ");
        const std::size_t N = qv.rows(), K = m.rows();
        Tensor<S> y = Tensor<S>::zeros({N, K});
        mat::matmul_nt(qv, m, y);
        return push(std::move(y), [this, q, m = std::move(m)](const Tensor<S>& gy) {
            mat::matmul_nn(gy, m, nodes_[q.id].grad);
        });
    }

    // rowwise dot of q:[N,D] with constant rows c:[N,D] -> [N,1]
    Var rowdot_const(Var q, Tensor<S> c) {
        const auto& qv = val(q);
        if (!qv.same_shape(c)) throw ValidationError("rowdot: shapes differ");
        const std::size_t N = qv.rows(), D = qv.cols();
        Tensor<S> y = Tensor<S>::zeros({N, 1});
        for (std::size_t n = 0; n < N; ++n) {
            S acc{0};
            for (std::size_t i = 0; i < D; ++i) acc += qv.data[n * D + i] * c.data[n * D + i];
            y.data[n] = acc;
        }
        return push(std::move(y), [this, q, c = std::move(c)](const Tensor<S>& gy) {
            auto& gq = nodes_[q.id].grad;
            const std::size_t N2 = c.rows(), D2 = c.cols();
            for (std::size_t n = 0; n < N2; ++n)
                for (std::size_t i = 0; i < D2; ++i) gq.data[n * D2 + i] += gy.data[n] * c.data[n * D2 + i];
        });
    }

    Var add(Var a, Var b) {
        const auto& av = val(a);
        const auto& bv = val(b);
        if (!av.same_shape(bv)) throw ValidationError("add: shapes differ");
        Tensor<S> y = av;
        for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += bv.data[i];
        return push(std::move(y), [this, a, b](const Tensor<S>& gy) {
            auto& ga = nodes_[a.id].grad;
            auto& gb = nodes_[b.id].grad;
            for (std::size_t i = 0; i < gy.data.size(); ++i) {
                ga.data[i] += gy.data[i];
                gb.data[i] += gy.data[i];
            }
        });
    }

    // Sum of all elements -> scalar [1].
    Var sum(Var x) {
        const auto& xv = val(x);
        S total{0};
        for (const auto v : xv.data) total += v;
        Tensor<S> y = Tensor<S>::from({1}, {total});
        return push(std::move(y), [this, x](const Tensor<S>& gy) {
            auto& gx = nodes_[x.id].grad;
            for (auto& v : gx.data) v += gy.data[0];
        });
    }

    Var scale(Var x, S s) {
        Tensor<S> y = val(x);
        for (auto& v : y.data) v *= s;
        return push(std::move(y), [this, x, s](const Tensor<S>& gy) {
            auto& gx = nodes_[x.id].grad;
            for (std::size_t i = 0; i < gy.data.size(); ++i) gx.data[i] += gy.data[i] * s;
        });
    }

    // Cross-entropy over rows of logits with optional per-row availability
    // masks (empty = all classes available). Unavailable logits are treated
    // as -inf: they get exactly zero probability. Mean over the batch.
    struct CeResult {
        Var loss;
        Tensor<S> probs;
    };
    CeResult masked_softmax_ce(Var logits, const std::vector<std::int32_t>& labels,
                               const std::vector<std::vector<std::uint8_t>>& masks) {
        const auto& zv = val(logits);
        const std::size_t N = zv.rows(), C = zv.cols();
        if (labels.size() != N) throw ValidationError("cross_entropy: label count does not match batch");
        if (!masks.empty() && masks.size() != N) throw ValidationError("cross_entropy: mask count mismatch");
        Tensor<S> probs = Tensor<S>::zeros({N, C});
        S total{0};
        for (std::size_t n = 0; n < N; ++n) {
            const auto avail = [&](std::size_t c) { return masks.empty() || masks[n][c] != 0; };
            const std::int32_t label = labels[n];
            if (label < 0 || static_cast<std::size_t>(label) >= C)
                throw ValidationError("cross_entropy: label out of range");
            if (!avail(static_cast<std::size_t>(label)))
                throw ValidationError("cross_entropy: label is masked out");
            S zmax = -std::numeric_limits<S>::infinity();
            for (std::size_t c = 0; c < C; ++c)
                if (avail(c) && zv.data[n * C + c] > zmax) zmax = zv.data[n * C + c];
            S denom{0};
            for (std::size_t c = 0; c < C; ++c)
                if (avail(c)) denom += std::exp(zv.data[n * C + c] - zmax);
            for (std::size_t c = 0; c < C; ++c)
                if (avail(c)) probs.data[n * C + c] = std::exp(zv.data[n * C + c] - zmax) / denom;
            total -= std::log(probs.data[n * C + static_cast<std::size_t>(label)]);
        }
        Tensor<S> lt = Tensor<S>::from({1}, {total / static_cast<S>(N)});
        Var loss = push(std::move(lt), [this, logits, labels, probs, N, C](const Tensor<S>& gy) {
            auto& gz = nodes_[logits.id].grad;
            const S g = gy.data[0] / static_cast<S>(N);
            for (std::size_t n = 0; n < N; ++n) {
                for (std::size_t c = 0; c < C; ++c) {
                    S p = probs.data[n * C + c];
                    if (c == static_cast<std::size_t>(labels[n])) p -= S{1};
                    gz.data[n * C + c] += g * p;
                }
            }
        });
        return {loss, std::move(probs)};
    }

    // Binary cross-entropy from logits (numerically stable softplus form),
    // mean over the batch. logits: [N] or [N,1].
    struct BceResult {
        Var loss;
        Tensor<S> probs;  // sigmoid(logit) per row
    };
    BceResult bce_with_logits(Var logits, const std::vector<std::uint8_t>& targets) {
        const auto& zv = val(logits);
        const std::size_t N = zv.rows();
        if (zv.numel() != N) throw ValidationError("bce: logits must be one per row");
        if (targets.size() != N) throw ValidationError("bce: target count does not match batch");
        Tensor<S> probs = Tensor<S>::zeros({N});
        S total{0};
        for (std::size_t n = 0; n < N; ++n) {
            const S z = zv.data[n];
            const S y = targets[n] ? S{1} : S{0};
            const S softplus = std::max(z, S{0}) + std::log1p(std::exp(-std::abs(z)));
            total += softplus - z * y;
            probs.data[n] = S{1} / (S{1} + std::exp(-z));
        }
        Tensor<S> lt = Tensor<S>::from({1}, {total / static_cast<S>(N)});
        Var loss = push(std::move(lt), [this, logits, targets, probs, N](const Tensor<S>& gy) {
            auto& gz = nodes_[logits.id].grad;
            const S g = gy.data[0] / static_cast<S>(N);
            for (std::size_t n = 0; n < N; ++n) {
                const S y = targets[n] ? S{1} : S{0};
                gz.data[n] += g * (probs.data[n] - y);
            }
        });
        return {loss, std::move(probs)};
    }

    // Multi-label BCE from logits z:[N,C] against {0,1} targets (row-major
    // N*C), mean over all N*C entries.
    BceResult bce_with_logits_multi(Var logits, const std::vector<std::uint8_t>& targets) {
        const auto& zv = val(logits);
        const std::size_t total_n = zv.numel();
        if (targets.size() != total_n) throw ValidationError("bce: target count does not match logits");
        Tensor<S> probs = Tensor<S>::zeros(zv.shape);
        S total{0};
        for (std::size_t i = 0; i < total_n; ++i) {
            const S z = zv.data[i];
            const S y = targets[i] ? S{1} : S{0};
            total += std::max(z, S{0}) + std::log1p(std::exp(-std::abs(z))) - z * y;
            probs.data[i] = S{1} / (S{1} + std::exp(-z));
        }
        Tensor<S> lt = Tensor<S>::from({1}, {total / static_cast<S>(total_n)});
        Var loss = push(std::move(lt), [this, logits, targets, probs, total_n](const Tensor<S>& gy) {
            auto& gz = nodes_[logits.id].grad;
            const S g = gy.data[0] / static_cast<S>(total_n);
            for (std::size_t i = 0; i < total_n; ++i) {
                const S y = targets[i] ? S{1} : S{0};
                gz.data[i] += g * (probs.data[i] - y);
            }
        });
        return {loss, std::move(probs)};
    }

    // Mean squared error against constant targets, mean over all elements.
    Var mse(Var pred, Tensor<S> target) {
        const auto& pv = val(pred);
        if (!pv.same_shape(target)) throw ValidationError("mse: shapes differ");
        const std::size_t n = pv.numel();
        S total{0};
        for (std::size_t i = 0; i < n; ++i) {
            const S d = pv.data[i] - target.data[i];
            total += d * d;
        }
        Tensor<S> lt = Tensor<S>::from({1}, {total / static_cast<S>(n)});
        return push(std::move(lt), [this, pred, target = std::move(target), n](const Tensor<S>& gy) {
            auto& gp = nodes_[pred.id].grad;
            const auto& pv2 = nodes_[pred.id].val;
            const S g = gy.data[0] * S{2} / static_cast<S>(n);
            for (std::size_t i = 0; i < n; ++i) gp.data[i] += g * (pv2.data[i] - target.data[i]);
        });
    }

    // Weighted sum of scalar losses.
    Var weighted_sum(const std::vector<std::pair<S, Var>>& terms) {
        S total{0};
        for (const auto& [coef, v] : terms) {
            if (val(v).numel() != 1) throw ValidationError("weighted_sum: terms must be scalars");
            total += coef * val(v).data[0];
        }
        Tensor<S> lt = Tensor<S>::from({1}, {total});
        return push(std::move(lt), [this, terms](const Tensor<S>& gy) {
            for (const auto& [coef, v] : terms) nodes_[v.id].grad.data[0] += coef * gy.data[0];
        });
    }

    void backward(Var loss) {
        if (nodes_.empty()) throw ValidationError("backward: empty tape");
        if (val(loss).numel() != 1) throw ValidationError("backward: loss must be scalar");
        nodes_[loss.id].grad.data[0] = S{1};
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            if (nodes_[i].back) nodes_[i].back(nodes_[i].grad);
        }
    }

private:
    struct Node {
        Tensor<S> val;
        Tensor<S> grad;
        std::function<void(const Tensor<S>&)> back;
    };

    Var push(Tensor<S> value, std::function<void(const Tensor<S>&)> back) {
        Node node;
        node.grad = Tensor<S>::zeros(value.shape);
        node.val = std::move(value);
        node.back = std::move(back);
        nodes_.push_back(std::move(node));
        instrument::tape_nodes().fetch_add(1, std::memory_order_relaxed);
        return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
    }

    std::vector<Node> nodes_;
};

}  // namespace sea::nn
