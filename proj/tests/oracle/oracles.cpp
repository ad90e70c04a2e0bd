#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace sea::oracle {

namespace {

constexpr double kOraclePi = 3.14159265358979323846;
constexpr double kEpsDeg = 1e-9;   // same inclusive-boundary slack as the contract
constexpr double kEpsDist = 1e-9;

struct EdgeDir {
    std::int32_t neighbor;
    double dx, dy;
    double dist;
};

std::vector<EdgeDir> edges_from(const World& world, std::int32_t node_id) {
    std::vector<EdgeDir> out;
    const auto& node = world.nodes.at(static_cast<std::size_t>(node_id));
    for (const auto& [a, b] : world.edges) {
        if (a != node_id && b != node_id) continue;
        const std::int32_t other_id = a == node_id ? b : a;
        const auto& other = world.nodes.at(static_cast<std::size_t>(other_id));
        EdgeDir e;
        e.neighbor = other_id;
        e.dx = other.x - node.x;
        e.dy = other.y - node.y;
        e.dist = std::sqrt(e.dx * e.dx + e.dy * e.dy);
        out.push_back(e);
    }
    return out;
}

// angle between the heading direction and the edge direction, degrees
double angle_to_heading_deg(const EdgeDir& e, double heading_degrees) {
    const double hr = heading_degrees * kOraclePi / 180.0;
    const double hx = std::sin(hr), hy = std::cos(hr);
    double c = (hx * e.dx + hy * e.dy) / e.dist;
    c = std::min(1.0, std::max(-1.0, c));
    return std::acos(c) * 180.0 / kOraclePi;
}

double edge_bearing_deg(const EdgeDir& e) {
    double b = std::atan2(e.dx, e.dy) * 180.0 / kOraclePi;
    while (b < 0.0) b += 360.0;
    while (b >= 360.0) b -= 360.0;
    return b;
}

}  // namespace

bool oracle_traversability(const World& world, const Pose& pose) {
    const double heading = 30.0 * pose.heading_idx;
    for (const auto& e : edges_from(world, pose.node_id)) {
        if (e.dist > 5.0 + kEpsDist) continue;
        if (angle_to_heading_deg(e, heading) <= world.config.hfov_deg / 2.0 + kEpsDeg) return true;
    }
    return false;
}

std::optional<std::int32_t> oracle_forward_node(const World& world, std::int32_t node_id,
                                                double heading_degrees) {
    std::optional<std::int32_t> best;
    double best_angle = 0.0, best_bearing = 0.0;
    for (const auto& e : edges_from(world, node_id)) {
        if (e.dist > 5.0 + kEpsDist) continue;
        const double ang = angle_to_heading_deg(e, heading_degrees);
        if (ang > world.config.hfov_deg / 2.0 + kEpsDeg) continue;
        const double bearing = edge_bearing_deg(e);
        if (!best || ang < best_angle || (ang == best_angle && bearing < best_bearing)) {
            best = e.neighbor;
            best_angle = ang;
            best_bearing = bearing;
        }
    }
    return best;
}

std::map<std::int32_t, Pose> oracle_jigsaw_map(const World& world, const Pose& anchor) {
    const auto fwd = oracle_forward_node(world, anchor.node_id, 30.0 * anchor.heading_idx);
    const double back_heading = std::fmod(30.0 * anchor.heading_idx + 180.0, 360.0);
    const auto bwd = oracle_forward_node(world, anchor.node_id, back_heading);

    std::map<std::int32_t, Pose> out;
    for (int dp = -1; dp <= 1; ++dp) {
        for (int de = -1; de <= 1; ++de) {
            for (int dh = -1; dh <= 1; ++dh) {
                const int label = 1 + (dh + 1) + 3 * (de + 1) + 9 * (dp + 1);
                const int e = anchor.elevation_idx + de;
                if (e < 0 || e > 2) continue;           // discretization limit
                std::int32_t node = anchor.node_id;
                if (dp == +1) {
                    if (!fwd) continue;                 // cannot step forward
                    node = *fwd;
                }
                if (dp == -1) {
                    if (!bwd) continue;
                    node = *bwd;
                }
                int h = anchor.heading_idx + dh;
                if (h < 0) h += 12;
                if (h >= 12) h -= 12;
                out[label] = Pose{node, h, e};
            }
        }
    }
    return out;
}

std::vector<double> oracle_grad(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> params, double h) {
    std::vector<double> grad(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double keep = params[i];
        params[i] = keep + h;
        const double up = f(params);
        params[i] = keep - h;
        const double down = f(params);
        params[i] = keep;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

}  // namespace sea::oracle
