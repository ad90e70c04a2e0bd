#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sea/pose.hpp"
#include "sea/rng.hpp"
#include "sea/world.hpp"

namespace sea {

inline constexpr int kNumJigsawLabels = 27;

// One step along each of position / elevation / heading, each in {-1,0,+1}.
struct JigsawOffset {
    std::int8_t dp = 0;
    std::int8_t de = 0;
    std::int8_t dh = 0;

    friend bool operator==(const JigsawOffset&, const JigsawOffset&) = default;
};

// Labels are 1-based: label = (dp+1)*9 + (de+1)*3 + (dh+1) + 1. This mixed-
// radix order puts the +1-elevation block at {7-9, 16-18, 25-27} and the
// +1-position block at {19-27}.
std::int32_t jigsaw_label_from_offset(const JigsawOffset& off);
JigsawOffset jigsaw_offset_from_label(std::int32_t label);

inline constexpr std::int32_t kJigsawIdentityLabel = 14;  // offset (0,0,0)

using JigsawMask = std::array<bool, kNumJigsawLabels>;  // index label-1

struct SamplePair {
    Pose anchor;
    Pose query;
    std::int32_t label = kJigsawIdentityLabel;
    JigsawMask mask{};  // availability at the anchor
};

struct TraversableBearing {
    double bearing_deg = 0.0;
    std::int32_t neighbor = 0;
    double distance_m = 0.0;
};

// Graph edges from the node within 5 m, sorted by bearing then neighbor id.
std::vector<TraversableBearing> traversable_bearings(const World& world, std::int32_t node_id);

// True iff some traversable bearing lies within hfov/2 of the pose heading
// (inclusive). Elevation never matters.
bool traversability_label(const World& world, const Pose& pose);

// The neighbor whose bearing is nearest the heading, if within hfov/2; ties
// go to the smaller bearing value.
std::optional<std::int32_t> forward_node(const World& world, const Pose& pose);

// All available neighbor views keyed by jigsaw label. Label 14 (identity) is
// always present and maps to the anchor itself.
std::map<std::int32_t, Pose> jigsaw_neighbors(const World& world, const Pose& anchor);

JigsawMask jigsaw_mask(const std::map<std::int32_t, Pose>& neighbors);

// All 36*|nodes| poses in (node, elevation, heading) order.
std::vector<Pose> enumerate_views(const World& world);

// Uniform anchor over all poses, then uniform label over its available set.
SamplePair sample_pair(const World& world, Rng& rng);

// Same draw restricted to a pose subset (used for in-world holdout splits).
SamplePair sample_pair_from(const World& world, const std::vector<Pose>& poses, Rng& rng);

// JSONL manifest: one line per pose with traversability and available labels.
std::string export_manifest(const World& world);

}  // namespace sea
