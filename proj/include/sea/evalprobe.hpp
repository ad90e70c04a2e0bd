#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sea/nn/checkpoint.hpp"
#include "sea/nn/model.hpp"
#include "sea/trainer.hpp"
#include "sea/world.hpp"

namespace sea {

// ---------------------------------------------------------------------------
// Feature store: one frozen-encoder vector per discretized view, canonical
// (node, elevation, heading) order. "SEAF" binary with trailing CRC32.
// ---------------------------------------------------------------------------

inline constexpr char kFeatureMagic[4] = {'S', 'E', 'A', 'F'};
inline constexpr std::uint32_t kFeatureVersion = 1;

struct FeatureStore {
    std::uint32_t dim = 0;

    struct Record {
        std::uint32_t node = 0;
        std::uint8_t h_idx = 0;
        std::uint8_t e_idx = 0;
        std::vector<float> feature;
    };
    std::vector<Record> records;

    // Index of a pose assuming dense canonical order.
    const Record& at(const Pose& pose) const {
        const std::size_t idx = static_cast<std::size_t>(pose.node_id) * kViewsPerNode +
                                static_cast<std::size_t>(pose.elevation_idx) * kNumHeadings +
                                static_cast<std::size_t>(pose.heading_idx);
        return records.at(idx);
    }
};

// Encodes every view of the world with the frozen online encoder.
FeatureStore export_features(const nn::EncoderState<float>& state, const World& world);

std::vector<std::uint8_t> encode_feature_store(const FeatureStore& store);
FeatureStore decode_feature_store(const std::uint8_t* data, std::size_t size);
void save_feature_store(const FeatureStore& store, const std::string& path);
FeatureStore load_feature_store(const std::string& path);

// ---------------------------------------------------------------------------
// Linear probes on frozen features. Labels are derived analytically from the
// world; training uses the same SGD recipe as pre-training on an 80/20 pose
// split.
// ---------------------------------------------------------------------------

enum class ProbeKind {
    relative_pose,      // 27-way masked classification over pose pairs
    object_presence,    // multi-label over object classes, mAP
    scene_id,           // room classification, accuracy
    traversable_count,  // in-view traversable direction count, RMSE
};

// query draws per anchor for the relative_pose probe dataset
inline constexpr std::size_t kRelativePosePairsPerAnchor = 8;

ProbeKind probe_kind_from_name(const std::string& name);
std::string probe_kind_name(ProbeKind kind);

struct ProbeConfig {
    std::int64_t iterations = 2000;
    std::int32_t batch_size = 32;
    double lr0 = 0.03;
    double sgd_momentum = 0.95;
    double weight_decay = 1e-4;
    bool nesterov = true;
    double train_fraction = 0.8;
    std::uint64_t split_seed = 0;
};

struct ProbeResult {
    std::string metric_name;  // "accuracy" | "mAP" | "rmse"
    double value = 0.0;       // held-out split
    double train_value = 0.0; // training split (fixture tests use this)
    bool higher_is_better = true;
};

ProbeResult train_probe(const FeatureStore& store, const World& world, ProbeKind kind,
                        const ProbeConfig& cfg);

// ---------------------------------------------------------------------------
// Task-subset ablation: the 7 non-empty task combinations plus a frozen
// random-init baseline, each trained from the same init seed, probed on the
// holdout world, reported with deltas against the all-tasks row.
// ---------------------------------------------------------------------------

struct AblationRow {
    std::string name;
    bool jig = false;
    bool trav = false;
    bool ins = false;
    bool failed = false;
    std::string error;
    // relative_pose acc, object_presence mAP, scene_id acc, traversable_count rmse
    std::array<double, 4> metrics{};
};

struct AblationReport {
    std::vector<AblationRow> rows;
    std::string to_csv() const;
};

AblationReport run_ablation(const std::vector<World>& worlds, const World& holdout,
                            const TrainRunConfig& cfg, const ProbeConfig& probe_cfg, int jobs = 1);

}  // namespace sea
