#pragma once

#include <cstdint>
#include <vector>

#include "sea/nn/functional.hpp"
#include "sea/nn/model.hpp"
#include "sea/nn/tape.hpp"
#include "sea/rng.hpp"
#include "sea/sampler.hpp"
#include "sea/world.hpp"

namespace sea {

// ---------------------------------------------------------------------------
// Memory bank: fixed-capacity FIFO ring of unit-norm key projections.
// ---------------------------------------------------------------------------

template <class S>
class MemoryBank {
public:
    MemoryBank(std::size_t capacity, std::size_t dim)
        : capacity_(capacity), dim_(dim), entries_(nn::Tensor<S>::zeros({capacity, dim})) {
        if (capacity == 0 || dim == 0) throw ValidationError("memory bank: capacity and dim must be > 0");
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return filled_; }
    std::size_t cursor() const { return cursor_; }

    // Writes keys FIFO at the cursor, wrapping around.
    void enqueue(const nn::Tensor<S>& keys) {
        if (keys.cols() != dim_) throw ValidationError("memory bank: key dim mismatch");
        for (std::size_t n = 0; n < keys.rows(); ++n) {
            for (std::size_t i = 0; i < dim_; ++i)
                entries_.data[cursor_ * dim_ + i] = keys.data[n * dim_ + i];
            cursor_ = (cursor_ + 1) % capacity_;
            if (filled_ < capacity_) ++filled_;
        }
    }

    // The filled entries, slot order. Used as the negatives m_i.
    nn::Tensor<S> negatives() const {
        nn::Tensor<S> out = nn::Tensor<S>::zeros({filled_, dim_});
        std::copy(entries_.data.begin(), entries_.data.begin() + static_cast<std::ptrdiff_t>(filled_ * dim_),
                  out.data.begin());
        return out;
    }

    const nn::Tensor<S>& entries() const { return entries_; }

    void restore(const nn::Tensor<S>& entries, std::size_t cursor, std::size_t filled) {
        if (!entries.same_shape(entries_)) throw ValidationError("memory bank: restore shape mismatch");
        if (cursor >= capacity_ || filled > capacity_) throw ValidationError("memory bank: restore state invalid");
        entries_ = entries;
        cursor_ = cursor;
        filled_ = filled;
    }

private:
    std::size_t capacity_;
    std::size_t dim_;
    std::size_t cursor_ = 0;
    std::size_t filled_ = 0;
    nn::Tensor<S> entries_;  // [capacity, dim]
};

// ---------------------------------------------------------------------------
// Losses. The online feature rides the tape; momentum-encoder outputs and
// bank entries enter as plain tensors, so they can never receive gradient.
// ---------------------------------------------------------------------------

template <class S>
struct JigsawLossResult {
    typename nn::Tape<S>::Var loss;
    nn::Tensor<S> logits;  // [N, 27], value snapshot
    nn::Tensor<S> probs;   // [N, 27], masked softmax; unavailable classes exactly 0
};

// logits = jig_head([f_a | f_q]); unavailable labels are masked out of the
// softmax; mean cross-entropy over the batch. labels are 1-based (1..27).
template <class S>
JigsawLossResult<S> jigsaw_loss(nn::StepContext<S>& ctx, typename nn::Tape<S>::Var f_a,
                                const nn::Tensor<S>& f_q, const std::vector<std::int32_t>& labels,
                                const std::vector<JigsawMask>& masks) {
    if (labels.size() != masks.size()) throw ValidationError("jigsaw_loss: labels/masks size mismatch");
    auto cat = ctx.tape().concat_cols_const(f_a, f_q);
    auto logits = ctx.jig_head(cat);
    std::vector<std::int32_t> labels0(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels0[i] = labels[i] - 1;
    std::vector<std::vector<std::uint8_t>> m(masks.size(), std::vector<std::uint8_t>(kNumJigsawLabels));
    for (std::size_t i = 0; i < masks.size(); ++i)
        for (std::size_t c = 0; c < kNumJigsawLabels; ++c) m[i][c] = masks[i][c] ? 1 : 0;
    auto ce = ctx.tape().masked_softmax_ce(logits, labels0, m);
    return {ce.loss, ctx.tape().val(logits), std::move(ce.probs)};
}

template <class S>
struct TravLossResult {
    typename nn::Tape<S>::Var loss;
    nn::Tensor<S> probs;  // sigmoid(logit) per sample
};

template <class S>
TravLossResult<S> traversability_loss(nn::StepContext<S>& ctx, typename nn::Tape<S>::Var f,
                                      const std::vector<std::uint8_t>& targets) {
    auto logit = ctx.trav_head(f);
    auto bce = ctx.tape().bce_with_logits(logit, targets);
    return {bce.loss, std::move(bce.probs)};
}

template <class S>
struct InstanceLossResult {
    typename nn::Tape<S>::Var loss;
    nn::Tensor<S> logits;  // [N, used+1]; column 0 is the positive pair
    std::size_t negatives_used = 0;
};

void warn_empty_bank_once();

// q = l2norm(ins_head(f_a)); logits = [q.k_pos, q.m_1, ..., q.m_K] / tau,
// cross-entropy against index 0. Only filled bank entries participate; an
// empty bank degenerates to zero loss (warned once, not an error).
template <class S>
InstanceLossResult<S> instance_loss(nn::StepContext<S>& ctx, typename nn::Tape<S>::Var f_a,
                                    const nn::Tensor<S>& k_pos, const MemoryBank<S>& bank, double tau) {
    if (!(tau > 0.0)) throw ValidationError("instance_loss: tau must be > 0");
    auto q = ctx.tape().l2norm_rows(ctx.ins_head(f_a));
    const std::size_t n = ctx.tape().val(q).rows();
    if (k_pos.rows() != n || k_pos.cols() != ctx.tape().val(q).cols())
        throw ValidationError("instance_loss: key shape mismatch");

    auto pos = ctx.tape().rowdot_const(q, k_pos);
    typename nn::Tape<S>::Var logits;
    const std::size_t used = bank.size();
    if (used > 0) {
        auto negs = ctx.tape().matmul_nt_const(q, bank.negatives());
        logits = ctx.tape().concat_cols(pos, negs);
    } else {
        warn_empty_bank_once();
        logits = pos;
    }
    logits = ctx.tape().scale(logits, static_cast<S>(1.0 / tau));
    const std::vector<std::int32_t> labels(n, 0);
    auto ce = ctx.tape().masked_softmax_ce(logits, labels, {});
    return {ce.loss, ctx.tape().val(logits), used};
}

// ---------------------------------------------------------------------------
// Augmentation: weak resize crop + affine + color jitter + grayscale + blur.
// Horizontal flip is deliberately absent: it would reverse the left/right
// structure the jigsaw heading labels depend on.
// ---------------------------------------------------------------------------

struct AugmentConfig {
    double crop_scale_min = 0.8;
    double crop_scale_max = 1.0;
    double aspect_jitter = 0.10;         // +-10% aspect
    double affine_max_deg = 10.0;        // rotation and shear, each +-10 deg
    double color_jitter_strength = 0.4;  // brightness/contrast/saturation
    double grayscale_prob = 0.2;
    double blur_prob = 0.5;
};

struct AugmentParams {
    double crop_scale = 1.0;
    double crop_aspect = 1.0;
    double crop_fx = 0.0;  // fractional offsets into the slack
    double crop_fy = 0.0;
    double rot_deg = 0.0;
    double shear_deg = 0.0;
    double brightness = 1.0;
    double contrast = 1.0;
    double saturation = 1.0;
    bool grayscale = false;
    bool blur = false;
};

// Draws every parameter in a fixed order, so the rng stream advances the
// same way regardless of the values drawn.
AugmentParams sample_augment_params(const AugmentConfig& cfg, Rng& rng);

ViewImage apply_augment(const ViewImage& view, const AugmentParams& params);

inline ViewImage augment(const ViewImage& view, const AugmentConfig& cfg, Rng& rng) {
    return apply_augment(view, sample_augment_params(cfg, rng));
}

}  // namespace sea
