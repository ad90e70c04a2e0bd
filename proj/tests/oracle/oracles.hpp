#pragma once

// Brute-force reference implementations for the test suite. These must stay
// independent of the sampler/nn code paths they check: geometry is done with
// dot products and acos instead of bearing arithmetic, and label enumeration
// is spelled out from the offset triples. Only world data types are shared.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "sea/pose.hpp"
#include "sea/world.hpp"

namespace sea::oracle {

struct OracleReport {
    std::size_t cases = 0;
    std::size_t mismatches = 0;
    std::string first_mismatch;
};

// Traversability recomputed from raw node coordinates and the edge list.
bool oracle_traversability(const World& world, const Pose& pose);

// Forward neighbor by the nearest-in-FOV rule, smaller bearing on ties.
std::optional<std::int32_t> oracle_forward_node(const World& world, std::int32_t node_id,
                                                double heading_degrees);

// All 27 offset triples with the availability rules applied literally.
std::map<std::int32_t, Pose> oracle_jigsaw_map(const World& world, const Pose& anchor);

// Central finite differences, (f(p+h) - f(p-h)) / 2h per coordinate, 64-bit.
std::vector<double> oracle_grad(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> params, double h);

}  // namespace sea::oracle
