#pragma once

// Shared helpers for the test binaries.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "sea/nn/model.hpp"
#include "sea/world.hpp"

namespace sea::test {

// A hand-built world: arbitrary node positions and edges, one room. Lets
// tests place bearings and distances exactly where they want them.
inline World custom_world(std::vector<std::pair<double, double>> positions,
                          std::vector<std::pair<std::int32_t, std::int32_t>> edges,
                          double hfov_deg = 60.0) {
    World w;
    w.config.rows = 2;
    w.config.cols = 2;
    w.config.hfov_deg = hfov_deg;
    w.config.objects = 0;
    w.config.rooms = 1;
    w.room_hues = {0.5};
    for (std::size_t i = 0; i < positions.size(); ++i) {
        Node n;
        n.id = static_cast<std::int32_t>(i);
        n.x = positions[i].first;
        n.y = positions[i].second;
        n.room = 0;
        n.base_hue = 0.25;
        w.nodes.push_back(n);
    }
    for (auto& [a, b] : edges)
        w.edges.push_back({std::min(a, b), std::max(a, b)});
    w.rebuild_adjacency();
    return w;
}

// Node placed at distance d and bearing b (degrees) from the origin node.
inline std::pair<double, double> at_bearing(double bearing_deg, double dist) {
    const double r = bearing_deg * 3.14159265358979323846 / 180.0;
    return {dist * std::sin(r), dist * std::cos(r)};
}

inline nn::ModelConfig tiny_model(std::int32_t input_dim = 12) {
    nn::ModelConfig m;
    m.input_dim = input_dim;
    m.enc_hidden1 = 8;
    m.enc_hidden2 = 7;
    m.feature_dim = 6;
    m.jig_hidden = 8;
    m.trav_hidden = 5;
    m.ins_hidden = 6;
    m.ins_proj_dim = 4;
    return m;
}

}  // namespace sea::test
