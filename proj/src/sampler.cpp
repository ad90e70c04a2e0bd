#include "sea/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "sea/errors.hpp"
#include "sea/geometry.hpp"

namespace sea {

namespace {

void check_node(const World& world, std::int32_t node_id, const char* who) {
    if (node_id < 0 || static_cast<std::size_t>(node_id) >= world.nodes.size())
        throw ValidationError(std::string(who) + ": unknown node id " + std::to_string(node_id));
}

void check_pose(const World& world, const Pose& pose, const char* who) {
    check_node(world, pose.node_id, who);
    if (!pose_indices_valid(pose)) throw ValidationError(std::string(who) + ": pose indices out of range");
}

}  // namespace

std::int32_t jigsaw_label_from_offset(const JigsawOffset& off) {
    return (off.dp + 1) * 9 + (off.de + 1) * 3 + (off.dh + 1) + 1;
}

JigsawOffset jigsaw_offset_from_label(std::int32_t label) {
    if (label < 1 || label > kNumJigsawLabels)
        throw ValidationError("jigsaw label out of range: " + std::to_string(label));
    const std::int32_t z = label - 1;
    JigsawOffset off;
    off.dp = static_cast<std::int8_t>(z / 9 - 1);
    off.de = static_cast<std::int8_t>((z / 3) % 3 - 1);
    off.dh = static_cast<std::int8_t>(z % 3 - 1);
    return off;
}

std::vector<TraversableBearing> traversable_bearings(const World& world, std::int32_t node_id) {
    check_node(world, node_id, "traversable_bearings");
    const auto& node = world.nodes[static_cast<std::size_t>(node_id)];
    std::vector<TraversableBearing> out;
    for (const std::int32_t nbr : world.adjacency[static_cast<std::size_t>(node_id)]) {
        const auto& other = world.nodes[static_cast<std::size_t>(nbr)];
        const double dist = std::hypot(other.x - node.x, other.y - node.y);
        if (dist > kTraversableMaxDistM + kGeomEps) continue;
        out.push_back({bearing_deg(other.x - node.x, other.y - node.y), nbr, dist});
    }
    std::sort(out.begin(), out.end(), [](const TraversableBearing& a, const TraversableBearing& b) {
        if (a.bearing_deg != b.bearing_deg) return a.bearing_deg < b.bearing_deg;
        return a.neighbor < b.neighbor;
    });
    return out;
}

bool traversability_label(const World& world, const Pose& pose) {
    check_pose(world, pose, "traversability_label");
    const double head = heading_deg(pose);
    for (const auto& tb : traversable_bearings(world, pose.node_id)) {
        if (circular_distance_deg(tb.bearing_deg, head) <= world.config.hfov_deg / 2.0 + kGeomEps) return true;
    }
    return false;
}

std::optional<std::int32_t> forward_node(const World& world, const Pose& pose) {
    check_pose(world, pose, "forward_node");
    const double head = heading_deg(pose);
    const double half_fov = world.config.hfov_deg / 2.0;
    std::optional<std::int32_t> best;
    double best_delta = 0.0;
    double best_bearing = 0.0;
    for (const auto& tb : traversable_bearings(world, pose.node_id)) {
        const double delta = circular_distance_deg(tb.bearing_deg, head);
        if (delta > half_fov + kGeomEps) continue;
        const bool take = !best || delta < best_delta ||
                          (delta == best_delta && tb.bearing_deg < best_bearing);
        if (take) {
            best = tb.neighbor;
            best_delta = delta;
            best_bearing = tb.bearing_deg;
        }
    }
    return best;
}

std::map<std::int32_t, Pose> jigsaw_neighbors(const World& world, const Pose& anchor) {
    check_pose(world, anchor, "jigsaw_neighbors");

    const auto fwd = forward_node(world, anchor);
    Pose turned = anchor;
    turned.heading_idx = (anchor.heading_idx + kNumHeadings / 2) % kNumHeadings;
    const auto bwd = forward_node(world, turned);

    std::map<std::int32_t, Pose> out;
    for (std::int8_t dp = -1; dp <= 1; ++dp) {
        for (std::int8_t de = -1; de <= 1; ++de) {
            for (std::int8_t dh = -1; dh <= 1; ++dh) {
                const std::int32_t e = anchor.elevation_idx + de;
                if (e < 0 || e >= kNumElevations) continue;
                std::int32_t node = anchor.node_id;
                if (dp == 1) {
                    if (!fwd) continue;
                    node = *fwd;
                } else if (dp == -1) {
                    if (!bwd) continue;
                    node = *bwd;
                }
                Pose query;
                query.node_id = node;
                query.heading_idx = ((anchor.heading_idx + dh) % kNumHeadings + kNumHeadings) % kNumHeadings;
                query.elevation_idx = e;
                out.emplace(jigsaw_label_from_offset({dp, de, dh}), query);
            }
        }
    }
    return out;
}

JigsawMask jigsaw_mask(const std::map<std::int32_t, Pose>& neighbors) {
    JigsawMask mask{};
    for (const auto& [label, pose] : neighbors) {
        (void)pose;
        mask[static_cast<std::size_t>(label - 1)] = true;
    }
    return mask;
}

std::vector<Pose> enumerate_views(const World& world) {
    std::vector<Pose> out;
    out.reserve(world.nodes.size() * kViewsPerNode);
    for (const auto& node : world.nodes) {
        for (std::int32_t e = 0; e < kNumElevations; ++e) {
            for (std::int32_t h = 0; h < kNumHeadings; ++h) {
                out.push_back(Pose{node.id, h, e});
            }
        }
    }
    return out;
}

SamplePair sample_pair(const World& world, Rng& rng) {
    const std::uint64_t n_poses = world.nodes.size() * static_cast<std::uint64_t>(kViewsPerNode);
    const std::uint64_t idx = rng.below(n_poses);
    Pose anchor;
    anchor.node_id = static_cast<std::int32_t>(idx / kViewsPerNode);
    const auto within = static_cast<std::int32_t>(idx % kViewsPerNode);
    anchor.elevation_idx = within / kNumHeadings;
    anchor.heading_idx = within % kNumHeadings;

    const auto neighbors = jigsaw_neighbors(world, anchor);
    std::vector<std::int32_t> labels;
    labels.reserve(neighbors.size());
    for (const auto& [label, pose] : neighbors) {
        (void)pose;
        labels.push_back(label);
    }
    const std::int32_t label = labels[rng.below(labels.size())];

    SamplePair pair;
    pair.anchor = anchor;
    pair.query = neighbors.at(label);
    pair.label = label;
    pair.mask = jigsaw_mask(neighbors);
    return pair;
}

SamplePair sample_pair_from(const World& world, const std::vector<Pose>& poses, Rng& rng) {
    if (poses.empty()) throw ValidationError("sample_pair_from: empty pose set");
    const Pose anchor = poses[rng.below(poses.size())];
    const auto neighbors = jigsaw_neighbors(world, anchor);
    std::vector<std::int32_t> labels;
    labels.reserve(neighbors.size());
    for (const auto& [label, pose] : neighbors) {
        (void)pose;
        labels.push_back(label);
    }
    const std::int32_t label = labels[rng.below(labels.size())];

    SamplePair pair;
    pair.anchor = anchor;
    pair.query = neighbors.at(label);
    pair.label = label;
    pair.mask = jigsaw_mask(neighbors);
    return pair;
}

std::string export_manifest(const World& world) {
    std::ostringstream out;
    for (const Pose& pose : enumerate_views(world)) {
        const auto neighbors = jigsaw_neighbors(world, pose);
        nlohmann::json rec;
        rec["node"] = pose.node_id;
        rec["h_idx"] = pose.heading_idx;
        rec["e_idx"] = pose.elevation_idx;
        rec["traversable"] = traversability_label(world, pose);
        std::vector<std::int32_t> labels;
        for (const auto& [label, q] : neighbors) {
            (void)q;
            labels.push_back(label);
        }
        rec["available_jigsaw_labels"] = labels;
        out << rec.dump() << '\n';
    }
    return out.str();
}

}  // namespace sea
