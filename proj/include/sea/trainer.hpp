#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sea/nn/checkpoint.hpp"
#include "sea/nn/model.hpp"
#include "sea/nn/optim.hpp"
#include "sea/sampler.hpp"
#include "sea/tasks.hpp"
#include "sea/world.hpp"

namespace sea {

struct TrainConfig {
    std::int32_t batch_size = 32;
    std::int64_t iterations = 3000;
    double lambda_jig = 1.0;
    double lambda_trav = 1.0;
    double lambda_ins = 1.0;
    // EMA horizon and learning rate are rescaled for the desk-scale setup
    // (3k iterations, batch 32, no batch norm); both remain config knobs.
    double ema_m = 0.99;
    double tau = 0.07;
    double lr0 = 0.003;
    double sgd_momentum = 0.95;
    bool nesterov = true;
    double weight_decay = 1e-4;
    std::int32_t bank_capacity = 1024;
    std::uint64_t seed = 0;
    std::int64_t eval_every = 200;
    double holdout_fraction = 0.1;       // used by holdout_mode == "split"
    std::string holdout_mode = "world";  // "world": disjoint world; "split": pose split
    std::int32_t train_worlds = 1;       // extra worlds join under the more-data axis
    std::int32_t eval_cases = 1024;      // eval pool cap (also the instance negative pool)
};

void validate(const TrainConfig& cfg);

struct TrainRunConfig {
    TrainConfig train;
    nn::ModelConfig model;
    AugmentConfig aug;
};

// One mini-batch, already rendered and flattened to [N, input_dim] stacks.
// Per sample there are exactly two rendered views (the anchor and the jigsaw
// query); the key and the online input are augmented copies of the anchor.
struct TrainBatch {
    nn::Tensor<float> anchor_aug;  // x_i'  (online, gradient-bearing)
    nn::Tensor<float> query;       // x_iq  (momentum)
    nn::Tensor<float> key_aug;     // x_ik  (momentum)
    std::vector<std::int32_t> jig_labels;  // 1..27
    std::vector<JigsawMask> jig_masks;
    std::vector<std::uint8_t> trav_labels;
};

struct MetricsRecord {
    std::int64_t iteration = 0;
    double lr = 0.0;
    double loss_total = 0.0;
    double loss_jig = 0.0;
    double loss_trav = 0.0;
    double loss_ins = 0.0;
    bool has_eval = false;
    double acc_jig = 0.0;       // percent
    double acc_trav = 0.0;      // percent, balanced holdout
    double acc_ins_top1 = 0.0;  // percent
    std::int64_t wall_ms = 0;   // eval records only

    std::string to_jsonl() const;
};

struct AuxAccuracy {
    double jig = 0.0;
    double trav = 0.0;
    double ins_top1 = 0.0;
};

// Fixed held-out evaluation set: one jigsaw case per pose, a class-balanced
// traversability subset, and a pair of fixed augmentations per pose for the
// instance task. Everything is prerendered; evaluating consumes no rng.
struct EvalSet {
    std::vector<Pose> poses;
    nn::Tensor<float> anchor_raw;  // [n, input]
    nn::Tensor<float> query_raw;
    nn::Tensor<float> anchor_aug1;
    nn::Tensor<float> anchor_aug2;
    std::vector<std::int32_t> jig_labels;
    std::vector<JigsawMask> jig_masks;
    std::vector<std::uint8_t> trav_labels;
    std::vector<std::size_t> trav_balanced;  // indices into poses, equal class counts
};

EvalSet build_eval_set(const World& world, const std::vector<Pose>& poses, std::uint64_t seed,
                       std::int32_t max_cases, const AugmentConfig& aug);

// Per-case model outputs for the three tasks; eval_aux fills these from an
// encoder state, score_aux turns them into accuracies. Tests can score
// synthetic outputs (e.g. a perfect lookup fixture) directly.
struct AuxEvalOutputs {
    nn::Tensor<float> jig_logits;    // [n, 27]
    std::vector<float> trav_logits;  // [n]
    nn::Tensor<float> ins_query;     // [n, p] unit rows
    nn::Tensor<float> ins_key;       // [n, p] unit rows
};

AuxAccuracy score_aux(const EvalSet& eval, const AuxEvalOutputs& outputs);

AuxAccuracy eval_aux(const nn::EncoderState<float>& state, const EvalSet& eval);

TrainBatch build_batch(std::vector<PanoramaCache>& caches,
                       const std::vector<std::vector<Pose>>& pose_sets, const TrainRunConfig& cfg,
                       Rng& rng);

struct StepResult {
    float loss_total = 0.0f;
    float loss_jig = 0.0f;
    float loss_trav = 0.0f;
    float loss_ins = 0.0f;
};

// One optimization step: one gradient-bearing encoder forward over the
// augmented anchors, tape-free momentum forwards for query and key, the
// three losses combined per the lambda weights, SGD + EMA, then the keys
// are enqueued.
StepResult train_step(nn::EncoderState<float>& state, MemoryBank<float>& bank,
                      const TrainBatch& batch, const TrainRunConfig& cfg, double lr);

struct TrainerCheckpoint {
    nn::EncoderState<float> state;
    nn::Tensor<float> bank_entries;
    std::uint64_t bank_cursor = 0;
    std::uint64_t bank_filled = 0;
    std::uint64_t iteration = 0;
    std::array<std::uint64_t, 4> rng_state{};
};

// SEA1 tensor section (parameters, velocities, bank) plus an appended
// trainer block carrying the rng state and iteration counter.
void save_trainer_checkpoint(const TrainerCheckpoint& ckpt, const std::string& path);
TrainerCheckpoint load_trainer_checkpoint(const std::string& path);

struct TrainOutputs {
    nn::EncoderState<float> state;
    std::vector<MetricsRecord> metrics;
    AuxAccuracy initial_acc;
    AuxAccuracy final_acc;
};

// Runs the full loop. When out_dir is non-empty, writes metrics.jsonl and
// checkpoints at iterations 0, T/2 and T. When resume_from names a
// checkpoint, continues from its stored iteration with the stored rng
// stream; the continuation is bit-identical to the uninterrupted run.
TrainOutputs train(const std::vector<World>& worlds, const World& holdout_world,
                   const TrainRunConfig& cfg, const std::string& out_dir = "",
                   const std::string& resume_from = "");

}  // namespace sea
