#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sea/instrument.hpp"
#include "sea/nn/functional.hpp"
#include "sea/nn/tape.hpp"
#include "sea/nn/tensor.hpp"
#include "sea/rng.hpp"

namespace sea::nn {

// Encoder + task-head shapes. The defaults are the reference desk-scale
// configuration; tests shrink them for finite-difference checks. A hidden
// width of 0 makes that head a single affine layer — the default for the
// traversability head, which pushes the encoder to keep that structure
// linearly decodable (what the linear probes measure).
struct ModelConfig {
    std::int32_t input_dim = 32 * 32 * 3;
    std::int32_t enc_hidden1 = 256;
    std::int32_t enc_hidden2 = 128;
    std::int32_t enc_hidden3 = 96;   // 0 = three-layer reference stack
    std::int32_t feature_dim = 64;   // d
    std::int32_t jig_hidden = 128;   // head input is 2d
    std::int32_t trav_hidden = 0;
    std::int32_t ins_hidden = 64;
    std::int32_t ins_proj_dim = 32;  // memory bank entry width
    // parallel affine path on the jigsaw head; the deep path keeps the task
    // learnable while this one pressures the encoder to expose relative
    // pose linearly (the property the probes measure)
    bool jig_linear_bypass = true;
    // trainable linear pixel path summed into the encoder output; the affine
    // heads compose with it, so training shapes a linearly decodable slice
    // of the feature space
    bool enc_linear_skip = true;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <class S>
struct ParamTensor {
    std::string name;
    Tensor<S> value;
    Tensor<S> velocity;  // SGD momentum buffer, online params only
};

template <class S>
struct ParamStore {
    std::vector<ParamTensor<S>> params;

    std::int32_t add(std::string name, Tensor<S> value) {
        ParamTensor<S> p;
        p.name = std::move(name);
        p.velocity = Tensor<S>::zeros(value.shape);
        p.value = std::move(value);
        params.push_back(std::move(p));
        return static_cast<std::int32_t>(params.size() - 1);
    }

    std::int32_t find(const std::string& name) const {
        for (std::size_t i = 0; i < params.size(); ++i)
            if (params[i].name == name) return static_cast<std::int32_t>(i);
        return -1;
    }
};

// A multi-layer perceptron described as parameter indices into a store;
// ReLU between layers, none after the last.
struct MlpSpec {
    std::vector<std::int32_t> weight_idx;
    std::vector<std::int32_t> bias_idx;
};

// Online parameters theta (encoder + three heads), momentum copies
// theta_hat (encoder + instance head only), and the layer tables.
template <class S>
struct EncoderState {
    ModelConfig cfg;
    ParamStore<S> theta;
    ParamStore<S> theta_hat;
    MlpSpec enc, enc_skip, jig, jig_skip, trav, ins;  // into theta
    MlpSpec enc_hat, enc_skip_hat, ins_hat;            // into theta_hat

    static EncoderState init(const ModelConfig& cfg, std::uint64_t seed);

    // Tape-free forwards (momentum and evaluation paths).
    Tensor<S> encode(const Tensor<S>& x) const {
        return add_skip(run_mlp(theta, enc, x), theta, enc_skip, x);
    }
    Tensor<S> encode_momentum(const Tensor<S>& x) const {
        return add_skip(run_mlp(theta_hat, enc_hat, x), theta_hat, enc_skip_hat, x);
    }
    Tensor<S> jig_head(const Tensor<S>& f2d) const {
        Tensor<S> out = run_mlp(theta, jig, f2d);
        if (!jig_skip.weight_idx.empty()) {
            const Tensor<S> skip = run_mlp(theta, jig_skip, f2d);
            for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += skip.data[i];
        }
        return out;
    }
    Tensor<S> trav_head(const Tensor<S>& f) const { return run_mlp(theta, trav, f); }
    Tensor<S> ins_head(const Tensor<S>& f) const { return run_mlp(theta, ins, f); }
    Tensor<S> ins_head_momentum(const Tensor<S>& f) const { return run_mlp(theta_hat, ins_hat, f); }

    static Tensor<S> add_skip(Tensor<S> f, const ParamStore<S>& store, const MlpSpec& skip,
                              const Tensor<S>& x) {
        if (skip.weight_idx.empty()) return f;
        const Tensor<S> lin = run_mlp(store, skip, x);
        for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] += lin.data[i];
        return f;
    }

    static Tensor<S> run_mlp(const ParamStore<S>& store, const MlpSpec& spec, const Tensor<S>& x) {
        Tensor<S> h = x;
        for (std::size_t l = 0; l < spec.weight_idx.size(); ++l) {
            h = dense_fwd(h, store.params[spec.weight_idx[l]].value, store.params[spec.bias_idx[l]].value);
            if (l + 1 < spec.weight_idx.size()) h = relu_fwd(std::move(h));
        }
        return h;
    }
};

// Per-step binding of parameters onto a tape. Every online parameter becomes
// a leaf up front so the optimizer sees a gradient buffer (possibly zero)
// for each one.
template <class S>
class StepContext {
public:
    using Var = typename Tape<S>::Var;

    explicit StepContext(EncoderState<S>& state) : state_(&state) {
        param_vars_.reserve(state.theta.params.size());
        for (const auto& p : state.theta.params) param_vars_.push_back(tape_.leaf(p.value));
    }

    Tape<S>& tape() { return tape_; }

    Var mlp(const MlpSpec& spec, Var x) {
        Var h = x;
        for (std::size_t l = 0; l < spec.weight_idx.size(); ++l) {
            h = tape_.dense(h, param_vars_[spec.weight_idx[l]], param_vars_[spec.bias_idx[l]]);
            if (l + 1 < spec.weight_idx.size()) h = tape_.relu(h);
        }
        return h;
    }

    // Gradient-bearing encoder forward; the per-sample accounting contract
    // is one of these per training sample.
    Var encode(const Tensor<S>& x) {
        instrument::grad_forward_rows().fetch_add(x.rows(), std::memory_order_relaxed);
        Var in = tape_.leaf(x);
        Var f = mlp(state_->enc, in);
        if (!state_->enc_skip.weight_idx.empty()) f = tape_.add(f, mlp(state_->enc_skip, in));
        return f;
    }

    Var jig_head(Var f2d) {
        Var out = mlp(state_->jig, f2d);
        if (!state_->jig_skip.weight_idx.empty()) out = tape_.add(out, mlp(state_->jig_skip, f2d));
        return out;
    }
    Var trav_head(Var f) { return mlp(state_->trav, f); }
    Var ins_head(Var f) { return mlp(state_->ins, f); }

    void backward(Var loss) { tape_.backward(loss); }

    // Gradient of parameter i accumulated by the last backward call.
    const Tensor<S>& grad(std::int32_t param_idx) const { return tape_.grad(param_vars_[param_idx]); }

private:
    EncoderState<S>* state_;
    Tape<S> tape_;
    std::vector<Var> param_vars_;
};

template <class S>
EncoderState<S> EncoderState<S>::init(const ModelConfig& cfg, std::uint64_t seed) {
    EncoderState<S> st;
    st.cfg = cfg;
    Rng rng(derive_seed(seed, 0x706172616dULL));  // parameter stream

    auto glorot = [&rng](std::int32_t out, std::int32_t in) {
        const double bound = std::sqrt(6.0 / (in + out));
        Tensor<S> w = Tensor<S>::zeros({static_cast<std::size_t>(out), static_cast<std::size_t>(in)});
        for (auto& v : w.data) v = static_cast<S>(rng.uniform(-bound, bound));
        return w;
    };
    auto add_mlp = [&](ParamStore<S>& store, MlpSpec& spec, const std::string& prefix,
                       std::vector<std::int32_t> widths) {
        std::erase(widths, 0);  // hidden width 0 = skip that layer
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            const std::string tag = prefix + "." + std::to_string(l);
            spec.weight_idx.push_back(store.add(tag + ".W", glorot(widths[l + 1], widths[l])));
            spec.bias_idx.push_back(store.add(tag + ".b", Tensor<S>::zeros({static_cast<std::size_t>(widths[l + 1])})));
        }
    };

    add_mlp(st.theta, st.enc, "enc",
            {cfg.input_dim, cfg.enc_hidden1, cfg.enc_hidden2, cfg.enc_hidden3, cfg.feature_dim});
    if (cfg.enc_linear_skip) add_mlp(st.theta, st.enc_skip, "enc.skip", {cfg.input_dim, cfg.feature_dim});
    add_mlp(st.theta, st.jig, "jig", {2 * cfg.feature_dim, cfg.jig_hidden, 27});
    if (cfg.jig_linear_bypass) {
        add_mlp(st.theta, st.jig_skip, "jig.skip", {2 * cfg.feature_dim, 27});
        // zero-init the deep path's output layer: early jigsaw training runs
        // through the affine bypass alone, which writes pose structure into
        // the encoder before the deep path takes over residual error
        for (auto& v : st.theta.params[static_cast<std::size_t>(st.jig.weight_idx.back())].value.data)
            v = S{0};
    }
    add_mlp(st.theta, st.trav, "trav", {cfg.feature_dim, cfg.trav_hidden, 1});
    add_mlp(st.theta, st.ins, "ins", {cfg.feature_dim, cfg.ins_hidden, cfg.ins_proj_dim});

    // Momentum copies start equal to the online parameters.
    auto mirror = [&](const MlpSpec& src, MlpSpec& dst) {
        for (std::size_t l = 0; l < src.weight_idx.size(); ++l) {
            const auto& w = st.theta.params[src.weight_idx[l]];
            const auto& b = st.theta.params[src.bias_idx[l]];
            dst.weight_idx.push_back(st.theta_hat.add(w.name, w.value));
            dst.bias_idx.push_back(st.theta_hat.add(b.name, b.value));
        }
    };
    mirror(st.enc, st.enc_hat);
    mirror(st.enc_skip, st.enc_skip_hat);
    mirror(st.ins, st.ins_hat);
    return st;
}

}  // namespace sea::nn
