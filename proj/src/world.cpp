#include "sea/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sea/errors.hpp"
#include "sea/geometry.hpp"
#include "sea/instrument.hpp"
#include "sea/rng.hpp"

namespace sea {

namespace {

using json = nlohmann::json;

constexpr double kPassageMaxElevDeg = 45.0;  // bands stop short of the zenith

struct Rect {
    std::int32_t r0, c0, h, w;
};

// Guillotine split of the grid into up to `target` rectangular rooms.
std::vector<Rect> partition_rooms(std::int32_t rows, std::int32_t cols, std::int32_t target, Rng& rng) {
    std::vector<Rect> rects{{0, 0, rows, cols}};
    while (static_cast<std::int32_t>(rects.size()) < target) {
        int best = -1;
        std::int64_t best_area = 1;
        for (std::size_t i = 0; i < rects.size(); ++i) {
            const auto& r = rects[i];
            const std::int64_t area = static_cast<std::int64_t>(r.h) * r.w;
            if ((r.h > 1 || r.w > 1) && area > best_area) {
                best = static_cast<int>(i);
                best_area = area;
            }
        }
        if (best < 0) break;  // nothing splittable left
        Rect r = rects[best];
        bool split_rows;
        if (r.h > 1 && r.w > 1) {
            split_rows = r.h != r.w ? r.h > r.w : rng.bernoulli(0.5);
        } else {
            split_rows = r.h > 1;
        }
        if (split_rows) {
            const std::int32_t k = 1 + static_cast<std::int32_t>(rng.below(r.h - 1));
            rects[best] = {r.r0, r.c0, k, r.w};
            rects.push_back({r.r0 + k, r.c0, r.h - k, r.w});
        } else {
            const std::int32_t k = 1 + static_cast<std::int32_t>(rng.below(r.w - 1));
            rects[best] = {r.r0, r.c0, r.h, k};
            rects.push_back({r.r0, r.c0 + k, r.h, r.w - k});
        }
    }
    return rects;
}

void blend_into(float* px, const std::array<double, 3>& c) {
    px[0] = static_cast<float>(c[0]);
    px[1] = static_cast<float>(c[1]);
    px[2] = static_cast<float>(c[2]);
}

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace

void validate(const WorldConfig& cfg) {
    if (cfg.rows < 1 || cfg.cols < 1 || static_cast<std::int64_t>(cfg.rows) * cfg.cols < 4)
        throw ValidationError("world: rows*cols must be >= 4");
    if (!(cfg.node_spacing > 0.0))
        throw ValidationError("world: node_spacing must be > 0");
    if (cfg.node_spacing > kTraversableMaxDistM)
        throw ValidationError("world: node_spacing must be <= 5.0 so grid neighbors stay traversable");
    if (!(cfg.hfov_deg > 0.0) || cfg.hfov_deg > 120.0)
        throw ValidationError("world: hfov_deg must be in (0, 120]");
    if (!(cfg.vfov_deg > 0.0) || cfg.vfov_deg > 120.0)
        throw ValidationError("world: vfov_deg must be in (0, 120]");
    if (cfg.rooms < 1) throw ValidationError("world: rooms must be >= 1");
    if (cfg.objects < 0) throw ValidationError("world: objects must be >= 0");
    if (cfg.panorama_height_px < 2) throw ValidationError("world: panorama_height_px must be >= 2");
    if (cfg.view_px < 2) throw ValidationError("world: view_px must be >= 2");
}

void World::rebuild_adjacency() {
    adjacency.assign(nodes.size(), {});
    for (const auto& [a, b] : edges) {
        adjacency.at(a).push_back(b);
        adjacency.at(b).push_back(a);
    }
    for (auto& nbrs : adjacency) std::sort(nbrs.begin(), nbrs.end());
}

World generate_world(const WorldConfig& cfg) {
    validate(cfg);
    World world;
    world.config = cfg;
    Rng rng(derive_seed(cfg.seed, 0x776f726c64ULL));  // generation stream

    const auto rooms = partition_rooms(cfg.rows, cfg.cols, cfg.rooms, rng);

    // room id per grid cell
    std::vector<std::int32_t> room_of_cell(static_cast<std::size_t>(cfg.rows) * cfg.cols, 0);
    for (std::size_t k = 0; k < rooms.size(); ++k) {
        const auto& r = rooms[k];
        for (std::int32_t rr = r.r0; rr < r.r0 + r.h; ++rr)
            for (std::int32_t cc = r.c0; cc < r.c0 + r.w; ++cc)
                room_of_cell[static_cast<std::size_t>(rr) * cfg.cols + cc] = static_cast<std::int32_t>(k);
    }

    world.nodes.reserve(room_of_cell.size());
    for (std::int32_t r = 0; r < cfg.rows; ++r) {
        for (std::int32_t c = 0; c < cfg.cols; ++c) {
            Node n;
            n.id = r * cfg.cols + c;
            n.x = c * cfg.node_spacing;
            n.y = r * cfg.node_spacing;
            n.room = room_of_cell[static_cast<std::size_t>(n.id)];
            n.base_hue = rng.next_double();
            world.nodes.push_back(n);
        }
    }

    world.room_hues.resize(rooms.size());
    for (auto& hue : world.room_hues) hue = rng.next_double();

    // Same-room 4-neighbor edges, plus one seeded door edge per adjacent
    // room pair. map iteration keeps the door draws in a fixed order.
    std::set<std::pair<std::int32_t, std::int32_t>> edge_set;
    std::map<std::pair<std::int32_t, std::int32_t>, std::vector<std::pair<std::int32_t, std::int32_t>>> boundary;
    for (std::int32_t r = 0; r < cfg.rows; ++r) {
        for (std::int32_t c = 0; c < cfg.cols; ++c) {
            const std::int32_t a = r * cfg.cols + c;
            const std::pair<std::int32_t, std::int32_t> steps[2] = {{0, 1}, {1, 0}};
            for (const auto& [dr, dc] : steps) {
                const std::int32_t rr = r + dr, cc = c + dc;
                if (rr >= cfg.rows || cc >= cfg.cols) continue;
                const std::int32_t b = rr * cfg.cols + cc;
                const std::int32_t ra = world.nodes[a].room, rb = world.nodes[b].room;
                if (ra == rb) {
                    edge_set.insert({a, b});
                } else {
                    boundary[{std::min(ra, rb), std::max(ra, rb)}].push_back({a, b});
                }
            }
        }
    }
    for (const auto& [pair, candidates] : boundary) {
        (void)pair;
        const auto& door = candidates[rng.below(candidates.size())];
        edge_set.insert(door);
    }
    world.edges.assign(edge_set.begin(), edge_set.end());
    world.rebuild_adjacency();

    // objects, uniform within a seeded room's footprint
    const double xmax = (cfg.cols - 1) * cfg.node_spacing;
    const double ymax = (cfg.rows - 1) * cfg.node_spacing;
    world.objects.reserve(static_cast<std::size_t>(cfg.objects));
    for (std::int32_t i = 0; i < cfg.objects; ++i) {
        const auto& room = rooms[rng.below(rooms.size())];
        const double margin = 0.45 * cfg.node_spacing;
        const double x_lo = room.c0 * cfg.node_spacing - margin;
        const double x_hi = (room.c0 + room.w - 1) * cfg.node_spacing + margin;
        const double y_lo = room.r0 * cfg.node_spacing - margin;
        const double y_hi = (room.r0 + room.h - 1) * cfg.node_spacing + margin;
        SceneObject obj;
        obj.id = i;
        obj.x = std::clamp(rng.uniform(x_lo, x_hi), 0.0, xmax);
        obj.y = std::clamp(rng.uniform(y_lo, y_hi), 0.0, ymax);
        obj.size = rng.uniform(0.4, 2.0);
        obj.height = rng.uniform(0.3, 2.8);
        obj.class_id = static_cast<std::int32_t>(rng.below(kNumObjectClasses));
        const auto base = rgb_from_hsv(static_cast<double>(obj.class_id) / kNumObjectClasses, 0.85, 0.9);
        for (int ch = 0; ch < 3; ++ch) obj.color[ch] = clamp01(base[ch] + rng.uniform(-0.06, 0.06));
        world.objects.push_back(obj);
    }

    return world;
}

Panorama render_panorama(const World& world, std::int32_t node_id) {
    if (node_id < 0 || static_cast<std::size_t>(node_id) >= world.nodes.size())
        throw ValidationError("render_panorama: unknown node id " + std::to_string(node_id));
    const auto& cfg = world.config;
    const auto& node = world.nodes[static_cast<std::size_t>(node_id)];
    const std::int32_t H = cfg.panorama_height_px;
    const double deg_per_row = 120.0 / H;

    Panorama pano;
    pano.width = kPanoramaWidth;
    pano.height = H;
    pano.rgb.resize(static_cast<std::size_t>(pano.width) * H * 3);

    // Background: low-frequency blend of the room hue and the node hue as a
    // function of bearing, shaded darker toward the floor, plus a gentle
    // node-seeded luminance weave. The weave survives grayscale and blur, so
    // every (heading, elevation) window keeps a distinctive fingerprint.
    const auto room_rgb = rgb_from_hsv(world.room_hues[static_cast<std::size_t>(node.room)], 0.14, 0.8);
    const auto node_rgb = rgb_from_hsv(node.base_hue, 0.2, 0.65);
    const double phase1 = 2.0 * kPi * node.base_hue;
    const double phase2 = 2.0 * kPi * (node.base_hue * 7.31 + world.room_hues[static_cast<std::size_t>(node.room)] * 3.17);
    std::uint64_t hash_state = cfg.seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(node_id) + 1));
    const double weave_phase_a = 2.0 * kPi * (Rng::splitmix64(hash_state) >> 11) * 0x1.0p-53;
    const double weave_phase_b = 2.0 * kPi * (Rng::splitmix64(hash_state) >> 11) * 0x1.0p-53;
    for (std::int32_t c = 0; c < pano.width; ++c) {
        const double theta = 2.0 * kPi * c / pano.width;
        const double t = 0.5 + 0.32 * std::sin(theta + phase1) + 0.18 * std::sin(2.0 * theta + phase2);
        std::array<double, 3> mix;
        for (int ch = 0; ch < 3; ++ch) mix[ch] = room_rgb[ch] * (1.0 - t) + node_rgb[ch] * t;
        for (std::int32_t r = 0; r < H; ++r) {
            const double elev = 60.0 - r * deg_per_row;
            const double shade = 0.6 + 0.4 * (1.0 - static_cast<double>(r) / (H - 1));
            const double weave = 0.03 * std::sin(4.0 * theta + weave_phase_a) *
                                 std::cos(2.0 * kPi * elev / 60.0 + weave_phase_b);
            float* px = pano.pixel(r, c);
            px[0] = static_cast<float>(clamp01(mix[0] * shade + weave));
            px[1] = static_cast<float>(clamp01(mix[1] * shade + weave));
            px[2] = static_cast<float>(clamp01(mix[2] * shade + weave));
        }
    }

    // Passage bands: every traversable graph edge from this node paints a
    // dark vertical band at its bearing, tinted by the far room's hue. This
    // is the visual footprint of an open direction.
    for (const std::int32_t nbr : world.adjacency[static_cast<std::size_t>(node_id)]) {
        const auto& other = world.nodes[static_cast<std::size_t>(nbr)];
        const double dx = other.x - node.x, dy = other.y - node.y;
        const double dist = std::hypot(dx, dy);
        if (dist > kTraversableMaxDistM + kGeomEps || dist < 1e-9) continue;
        const double bearing = bearing_deg(dx, dy);
        const double half_w = std::clamp(deg_from_rad(std::atan(0.5 / dist)), 2.0, 20.0);
        const auto far_rgb = rgb_from_hsv(world.room_hues[static_cast<std::size_t>(other.room)], 0.35, 0.8);
        std::array<double, 3> band;
        for (int ch = 0; ch < 3; ++ch) band[ch] = 0.07 + 0.10 * far_rgb[ch];
        const std::int32_t r_top = static_cast<std::int32_t>(std::ceil((60.0 - kPassageMaxElevDeg) / deg_per_row));
        for (std::int32_t c = 0; c < pano.width; ++c) {
            if (circular_distance_deg(static_cast<double>(c), bearing) > half_w) continue;
            for (std::int32_t r = std::max(r_top, 0); r < H; ++r) blend_into(pano.pixel(r, c), band);
        }
    }

    // Objects, far to near so closer ones end up on top.
    std::vector<const SceneObject*> order;
    order.reserve(world.objects.size());
    for (const auto& obj : world.objects) order.push_back(&obj);
    std::stable_sort(order.begin(), order.end(), [&](const SceneObject* a, const SceneObject* b) {
        const double da = std::hypot(a->x - node.x, a->y - node.y);
        const double db = std::hypot(b->x - node.x, b->y - node.y);
        return da > db;
    });
    for (const SceneObject* obj : order) {
        const double dx = obj->x - node.x, dy = obj->y - node.y;
        const double dist = std::hypot(dx, dy);
        if (dist < kObjectMinDistM) continue;  // singularity guard
        const double bearing = bearing_deg(dx, dy);
        const std::int32_t w = static_cast<std::int32_t>(
            std::clamp(std::lround(kObjectWidthGain * obj->size / dist), 1L, 120L));
        const double elev_center = deg_from_rad(std::atan2(obj->height - kCameraHeightM, dist));
        const std::int32_t h = static_cast<std::int32_t>(
            std::clamp(std::lround(kObjectWidthGain * obj->size / dist / deg_per_row), 1L, static_cast<long>(H)));
        const std::int32_t c_center = static_cast<std::int32_t>(std::lround(bearing)) % kPanoramaWidth;
        const std::int32_t r_center = static_cast<std::int32_t>(std::lround((60.0 - elev_center) / deg_per_row));
        const std::int32_t c0 = c_center - w / 2;
        const std::int32_t r0 = r_center - h / 2;
        // class-dependent stripe pattern, symmetric about the center so the
        // center pixel always carries the full color. The stripe count is
        // fixed per class (not per pixel), so the signature survives
        // distance scaling, view downsampling, and grayscale.
        const bool vertical = obj->class_id < kNumObjectClasses / 2;
        const std::int32_t bands = 2 + obj->class_id % 4;
        const std::int32_t extent = vertical ? w : h;
        const std::int32_t period = std::max(1, (extent + 2 * bands - 1) / (2 * bands));
        for (std::int32_t dc = 0; dc < w; ++dc) {
            const std::int32_t c = ((c0 + dc) % kPanoramaWidth + kPanoramaWidth) % kPanoramaWidth;
            for (std::int32_t r = std::max(r0, 0); r < std::min(r0 + h, H); ++r) {
                const std::int32_t off = vertical ? std::abs(c0 + dc - c_center) : std::abs(r - r_center);
                const double fade = (off / period) % 2 == 0 ? 1.0 : 0.45;
                blend_into(pano.pixel(r, c),
                           {obj->color[0] * fade, obj->color[1] * fade, obj->color[2] * fade});
            }
        }
    }

    return pano;
}

std::array<float, 3> sample_panorama(const Panorama& pano, double bearing, double elevation) {
    // column c holds bearing c degrees; row r holds elevation 60 - r*dpr
    const double dpr = 120.0 / pano.height;
    double x = std::fmod(bearing, 360.0);
    if (x < 0.0) x += 360.0;
    const std::int32_t c0 = static_cast<std::int32_t>(x) % pano.width;
    const std::int32_t c1 = (c0 + 1) % pano.width;
    const double fx = x - std::floor(x);

    double y = (60.0 - elevation) / dpr;
    if (y < 0.0) y = 0.0;
    if (y > pano.height - 1) y = pano.height - 1;
    const std::int32_t r0 = static_cast<std::int32_t>(y);
    const std::int32_t r1 = std::min(r0 + 1, pano.height - 1);
    const double fy = y - r0;

    std::array<float, 3> out{};
    const float* p00 = pano.pixel(r0, c0);
    const float* p01 = pano.pixel(r0, c1);
    const float* p10 = pano.pixel(r1, c0);
    const float* p11 = pano.pixel(r1, c1);
    for (int ch = 0; ch < 3; ++ch) {
        const double top = p00[ch] * (1.0 - fx) + p01[ch] * fx;
        const double bot = p10[ch] * (1.0 - fx) + p11[ch] * fx;
        out[ch] = static_cast<float>(top * (1.0 - fy) + bot * fy);
    }
    return out;
}

ViewImage render_view_from(const Panorama& pano, const WorldConfig& cfg, const Pose& pose) {
    if (!pose_indices_valid(pose)) throw ValidationError("render_view: pose indices out of range");
    instrument::count_render();

    const std::int32_t P = cfg.view_px;
    ViewImage view;
    view.size_px = P;
    view.pose = pose;
    view.rgb.resize(static_cast<std::size_t>(P) * P * 3);

    const double head = heading_deg(pose);
    const double elev = elevation_deg(pose);
    for (std::int32_t i = 0; i < P; ++i) {
        const double e = elev + cfg.vfov_deg / 2.0 - (i + 0.5) * cfg.vfov_deg / P;
        for (std::int32_t j = 0; j < P; ++j) {
            const double b = head - cfg.hfov_deg / 2.0 + (j + 0.5) * cfg.hfov_deg / P;
            const auto s = sample_panorama(pano, b, e);
            float* px = view.pixel(i, j);
            px[0] = s[0];
            px[1] = s[1];
            px[2] = s[2];
        }
    }
    return view;
}

ViewImage render_view(const World& world, const Pose& pose) {
    if (pose.node_id < 0 || static_cast<std::size_t>(pose.node_id) >= world.nodes.size())
        throw ValidationError("render_view: unknown node id " + std::to_string(pose.node_id));
    const Panorama pano = render_panorama(world, pose.node_id);
    return render_view_from(pano, world.config, pose);
}

const Panorama& PanoramaCache::get(std::int32_t node_id) {
    auto it = store_.find(node_id);
    if (it == store_.end()) {
        it = store_.emplace(node_id, render_panorama(*world_, node_id)).first;
    }
    return it->second;
}

ViewImage render_view(PanoramaCache& cache, const Pose& pose) {
    return render_view_from(cache.get(pose.node_id), cache.world().config, pose);
}

namespace {

json config_to_json(const WorldConfig& cfg) {
    return json{{"rows", cfg.rows},
                {"cols", cfg.cols},
                {"node_spacing", cfg.node_spacing},
                {"rooms", cfg.rooms},
                {"objects", cfg.objects},
                {"panorama_height_px", cfg.panorama_height_px},
                {"view_px", cfg.view_px},
                {"hfov_deg", cfg.hfov_deg},
                {"vfov_deg", cfg.vfov_deg},
                {"seed", cfg.seed}};
}

WorldConfig config_from_json(const json& j) {
    WorldConfig cfg;
    cfg.rows = j.at("rows").get<std::int32_t>();
    cfg.cols = j.at("cols").get<std::int32_t>();
    cfg.node_spacing = j.at("node_spacing").get<double>();
    cfg.rooms = j.at("rooms").get<std::int32_t>();
    cfg.objects = j.at("objects").get<std::int32_t>();
    cfg.panorama_height_px = j.at("panorama_height_px").get<std::int32_t>();
    cfg.view_px = j.at("view_px").get<std::int32_t>();
    cfg.hfov_deg = j.at("hfov_deg").get<double>();
    cfg.vfov_deg = j.at("vfov_deg").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

}  // namespace

std::string serialize_world(const World& world) {
    json j;
    j["config"] = config_to_json(world.config);
    j["nodes"] = json::array();
    for (const auto& n : world.nodes) {
        j["nodes"].push_back(json{{"id", n.id}, {"x", n.x}, {"y", n.y}, {"room", n.room}, {"base_hue", n.base_hue}});
    }
    j["objects"] = json::array();
    for (const auto& o : world.objects) {
        j["objects"].push_back(json{{"id", o.id},
                                    {"x", o.x},
                                    {"y", o.y},
                                    {"size", o.size},
                                    {"height", o.height},
                                    {"color", o.color},
                                    {"class_id", o.class_id}});
    }
    j["edges"] = json::array();
    for (const auto& [a, b] : world.edges) j["edges"].push_back(json::array({a, b}));
    j["room_hues"] = world.room_hues;
    json room_of = json::array();
    for (const auto& n : world.nodes) room_of.push_back(n.room);
    j["room_of"] = room_of;
    return j.dump();
}

World deserialize_world(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("world: malformed JSON: ") + e.what());
    }
    World world;
    try {
        world.config = config_from_json(j.at("config"));
        for (const auto& jn : j.at("nodes")) {
            Node n;
            n.id = jn.at("id").get<std::int32_t>();
            n.x = jn.at("x").get<double>();
            n.y = jn.at("y").get<double>();
            n.room = jn.at("room").get<std::int32_t>();
            n.base_hue = jn.at("base_hue").get<double>();
            world.nodes.push_back(n);
        }
        for (const auto& jo : j.at("objects")) {
            SceneObject o;
            o.id = jo.at("id").get<std::int32_t>();
            o.x = jo.at("x").get<double>();
            o.y = jo.at("y").get<double>();
            o.size = jo.at("size").get<double>();
            o.height = jo.at("height").get<double>();
            o.color = jo.at("color").get<std::array<double, 3>>();
            o.class_id = jo.at("class_id").get<std::int32_t>();
            world.objects.push_back(o);
        }
        for (const auto& je : j.at("edges")) {
            world.edges.push_back({je.at(0).get<std::int32_t>(), je.at(1).get<std::int32_t>()});
        }
        world.room_hues = j.at("room_hues").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("world: missing or mistyped field: ") + e.what());
    }
    for (std::size_t i = 0; i < world.nodes.size(); ++i) {
        if (world.nodes[i].id != static_cast<std::int32_t>(i))
            throw ValidationError("world: node ids must be dense and ordered");
    }
    for (const auto& [a, b] : world.edges) {
        if (a < 0 || b < 0 || a >= static_cast<std::int32_t>(world.nodes.size()) ||
            b >= static_cast<std::int32_t>(world.nodes.size()) || a == b)
            throw ValidationError("world: edge references invalid node");
    }
    world.rebuild_adjacency();
    return world;
}

void save_world(const World& world, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot open for writing: " + path);
    const std::string text = serialize_world(world);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw RuntimeFailure("write failed: " + path);
}

World load_world(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open world file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_world(ss.str());
}

}  // namespace sea
