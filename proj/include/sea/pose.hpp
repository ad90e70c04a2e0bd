#pragma once

#include <cstdint>

namespace sea {

inline constexpr int kNumHeadings = 12;   // 30 degree steps over [0, 330]
inline constexpr int kNumElevations = 3;  // -30, 0, +30 degrees
inline constexpr int kViewsPerNode = kNumHeadings * kNumElevations;

// A discretized view identity: which node the camera stands on, which of the
// 12 headings it faces, and which of the 3 elevations it looks at.
struct Pose {
    std::int32_t node_id = 0;
    std::int32_t heading_idx = 0;    // in [0, 11], circular
    std::int32_t elevation_idx = 0;  // in [0, 2]: 0 looks down, 2 looks up

    friend bool operator==(const Pose&, const Pose&) = default;
};

inline double heading_deg(const Pose& p) { return 30.0 * p.heading_idx; }
inline double elevation_deg(const Pose& p) { return -30.0 + 30.0 * p.elevation_idx; }

inline bool pose_indices_valid(const Pose& p) {
    return p.heading_idx >= 0 && p.heading_idx < kNumHeadings &&
           p.elevation_idx >= 0 && p.elevation_idx < kNumElevations;
}

}  // namespace sea
