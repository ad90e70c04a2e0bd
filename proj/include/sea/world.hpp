#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sea/pose.hpp"

namespace sea {

inline constexpr int kNumObjectClasses = 8;
inline constexpr double kCameraHeightM = 1.5;
inline constexpr double kTraversableMaxDistM = 5.0;
inline constexpr double kObjectMinDistM = 0.1;      // singularity guard
inline constexpr double kObjectWidthGain = 60.0;    // px per (size/distance)
inline constexpr int kPanoramaWidth = 360;          // one column per degree

struct WorldConfig {
    std::int32_t rows = 6;
    std::int32_t cols = 6;
    double node_spacing = 2.5;       // meters between grid neighbors
    std::int32_t rooms = 4;
    std::int32_t objects = 40;
    std::int32_t panorama_height_px = 120;  // spans elevation +60..-60
    std::int32_t view_px = 32;
    double hfov_deg = 60.0;
    double vfov_deg = 60.0;
    std::uint64_t seed = 0;
};

// Throws ValidationError when a field is out of range.
void validate(const WorldConfig& cfg);

struct Node {
    std::int32_t id = 0;
    double x = 0.0;  // meters east
    double y = 0.0;  // meters north
    std::int32_t room = 0;
    double base_hue = 0.0;  // in [0,1)
};

struct SceneObject {
    std::int32_t id = 0;
    double x = 0.0;
    double y = 0.0;
    double size = 0.5;    // meters, in [0.2, 2.0]
    double height = 1.0;  // meters above the floor
    std::array<double, 3> color{0.0, 0.0, 0.0};
    std::int32_t class_id = 0;  // in [0, kNumObjectClasses)
};

struct World {
    WorldConfig config;
    std::vector<Node> nodes;
    std::vector<SceneObject> objects;
    std::vector<double> room_hues;                          // indexed by room id
    std::vector<std::pair<std::int32_t, std::int32_t>> edges;  // a < b, sorted

    // adjacency derived from edges at construction/load time
    std::vector<std::vector<std::int32_t>> adjacency;

    std::int32_t room_of(std::int32_t node_id) const { return nodes.at(node_id).room; }
    std::size_t node_count() const { return nodes.size(); }

    void rebuild_adjacency();
};

// Deterministic procedural generation: the result is a pure function of the
// config, including the seed. Grid nodes, rectangular rooms with door edges,
// seeded object placement.
World generate_world(const WorldConfig& cfg);

// Cylindrical panorama raster for one node: kPanoramaWidth columns (column c
// is bearing c degrees) by config.panorama_height_px rows (row r is elevation
// +60 - r*(120/height) degrees), RGB in [0,1].
struct Panorama {
    std::int32_t width = 0;
    std::int32_t height = 0;
    std::vector<float> rgb;  // row-major, 3 channels

    float* pixel(std::int32_t r, std::int32_t c) { return &rgb[3 * (static_cast<std::size_t>(r) * width + c)]; }
    const float* pixel(std::int32_t r, std::int32_t c) const {
        return &rgb[3 * (static_cast<std::size_t>(r) * width + c)];
    }
};

Panorama render_panorama(const World& world, std::int32_t node_id);

struct ViewImage {
    std::int32_t size_px = 0;
    std::vector<float> rgb;  // size_px * size_px * 3, row-major
    Pose pose;

    float* pixel(std::int32_t r, std::int32_t c) { return &rgb[3 * (static_cast<std::size_t>(r) * size_px + c)]; }
    const float* pixel(std::int32_t r, std::int32_t c) const {
        return &rgb[3 * (static_cast<std::size_t>(r) * size_px + c)];
    }
};

// Extracts the hfov x vfov window centered on the pose's heading/elevation
// from the node panorama and resamples it to view_px x view_px (bilinear,
// horizontal wrap, vertical clamp).
ViewImage render_view(const World& world, const Pose& pose);

// Same extraction against an already-rendered panorama; this is what the
// training loop uses so each node panorama is rasterized once.
ViewImage render_view_from(const Panorama& pano, const WorldConfig& cfg, const Pose& pose);

// Bilinear sample of a panorama at a continuous (bearing, elevation) in
// degrees. Texel centers sit at column c+0.5 / row r+0.5.
std::array<float, 3> sample_panorama(const Panorama& pano, double bearing, double elevation);

// Per-world panorama cache, filled lazily. Not thread-safe.
class PanoramaCache {
public:
    explicit PanoramaCache(const World& world) : world_(&world) {}
    const Panorama& get(std::int32_t node_id);
    const World& world() const { return *world_; }

private:
    const World* world_;
    std::unordered_map<std::int32_t, Panorama> store_;
};

ViewImage render_view(PanoramaCache& cache, const Pose& pose);

// JSON (de)serialization of the whole world. serialize is byte-deterministic
// for a given world; round-trips exactly.
std::string serialize_world(const World& world);
World deserialize_world(const std::string& json_text);

void save_world(const World& world, const std::string& path);
World load_world(const std::string& path);

}  // namespace sea
