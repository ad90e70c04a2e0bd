#include "sea/evalprobe.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <thread>

#include "sea/crc32.hpp"
#include "sea/errors.hpp"
#include "sea/geometry.hpp"
#include "sea/instrument.hpp"
#include "sea/sampler.hpp"

namespace sea {

FeatureStore export_features(const nn::EncoderState<float>& state, const World& world) {
    instrument::PauseGuard pause;
    const auto poses = enumerate_views(world);
    const auto input_dim = static_cast<std::size_t>(world.config.view_px) * world.config.view_px * 3;
    if (static_cast<std::int32_t>(input_dim) != state.cfg.input_dim)
        throw ValidationError("export_features: encoder input does not match world view size");

    FeatureStore store;
    store.dim = static_cast<std::uint32_t>(state.cfg.feature_dim);
    store.records.reserve(poses.size());

    PanoramaCache cache(world);
    constexpr std::size_t kChunk = 256;
    for (std::size_t base = 0; base < poses.size(); base += kChunk) {
        const std::size_t n = std::min(kChunk, poses.size() - base);
        nn::Tensor<float> x = nn::Tensor<float>::zeros({n, input_dim});
        for (std::size_t i = 0; i < n; ++i) {
            const ViewImage view = render_view(cache, poses[base + i]);
            std::copy(view.rgb.begin(), view.rgb.end(),
                      x.data.begin() + static_cast<std::ptrdiff_t>(i * input_dim));
        }
        const auto f = state.encode(x);
        const std::size_t d = f.cols();
        for (std::size_t i = 0; i < n; ++i) {
            FeatureStore::Record rec;
            rec.node = static_cast<std::uint32_t>(poses[base + i].node_id);
            rec.h_idx = static_cast<std::uint8_t>(poses[base + i].heading_idx);
            rec.e_idx = static_cast<std::uint8_t>(poses[base + i].elevation_idx);
            rec.feature.assign(f.data.begin() + static_cast<std::ptrdiff_t>(i * d),
                               f.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
            store.records.push_back(std::move(rec));
        }
    }
    return store;
}

std::vector<std::uint8_t> encode_feature_store(const FeatureStore& store) {
    std::vector<std::uint8_t> out(kFeatureMagic, kFeatureMagic + 4);
    auto put_u32 = [&out](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
    };
    put_u32(kFeatureVersion);
    put_u32(store.dim);
    put_u32(static_cast<std::uint32_t>(store.records.size()));
    for (const auto& rec : store.records) {
        if (rec.feature.size() != store.dim)
            throw ValidationError("feature store: record dim mismatch");
        put_u32(rec.node);
        out.push_back(rec.h_idx);
        out.push_back(rec.e_idx);
        out.push_back(0);
        out.push_back(0);  // u16 pad
        for (const float v : rec.feature) {
            std::uint32_t bits;
            std::memcpy(&bits, &v, 4);
            put_u32(bits);
        }
    }
    const std::uint32_t crc = crc32(out.data(), out.size());
    put_u32(crc);
    return out;
}

FeatureStore decode_feature_store(const std::uint8_t* data, std::size_t size) {
    if (size < 16 + 4) throw ValidationError("feature store: truncated file");
    if (std::memcmp(data, kFeatureMagic, 4) != 0)
        throw ValidationError("feature store: bad magic; not a SEAF file");
    const auto get_u32 = [data](std::size_t off) {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[off + i]) << (8 * i);
        return v;
    };
    const std::uint32_t stored_crc = get_u32(size - 4);
    if (stored_crc != crc32(data, size - 4))
        throw ValidationError("feature store: CRC mismatch; file is corrupt");
    const std::uint32_t version = get_u32(4);
    if (version != kFeatureVersion)
        throw ValidationError("feature store: unsupported version " + std::to_string(version));
    FeatureStore store;
    store.dim = get_u32(8);
    const std::uint32_t count = get_u32(12);
    const std::size_t rec_bytes = 8 + static_cast<std::size_t>(store.dim) * 4;
    if (size != 16 + static_cast<std::size_t>(count) * rec_bytes + 4)
        throw ValidationError("feature store: size does not match record count");
    std::size_t off = 16;
    store.records.resize(count);
    for (std::uint32_t r = 0; r < count; ++r) {
        auto& rec = store.records[r];
        rec.node = get_u32(off);
        rec.h_idx = data[off + 4];
        rec.e_idx = data[off + 5];
        off += 8;
        rec.feature.resize(store.dim);
        for (std::uint32_t i = 0; i < store.dim; ++i) {
            const std::uint32_t bits = get_u32(off);
            std::memcpy(&rec.feature[i], &bits, 4);
            off += 4;
        }
    }
    return store;
}

void save_feature_store(const FeatureStore& store, const std::string& path) {
    const auto bytes = encode_feature_store(store);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw RuntimeFailure("write failed: " + path);
}

FeatureStore load_feature_store(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open feature store: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_feature_store(bytes.data(), bytes.size());
}

ProbeKind probe_kind_from_name(const std::string& name) {
    if (name == "relative_pose") return ProbeKind::relative_pose;
    if (name == "object_presence") return ProbeKind::object_presence;
    if (name == "scene_id") return ProbeKind::scene_id;
    if (name == "traversable_count") return ProbeKind::traversable_count;
    throw ValidationError("unknown probe task: " + name);
}

std::string probe_kind_name(ProbeKind kind) {
    switch (kind) {
        case ProbeKind::relative_pose: return "relative_pose";
        case ProbeKind::object_presence: return "object_presence";
        case ProbeKind::scene_id: return "scene_id";
        case ProbeKind::traversable_count: return "traversable_count";
    }
    throw ValidationError("unknown probe kind");
}

namespace {

// Object class visibility from a pose: center bearing within the horizontal
// FOV, projected elevation within the vertical FOV, past the singularity
// guard distance, and large enough to resolve at view resolution (a few
// panorama degrees wide); sub-pixel specks are not "present".
constexpr double kPresenceMinWidthDeg = 6.0;

std::vector<std::uint8_t> object_presence_labels(const World& world, const Pose& pose) {
    std::vector<std::uint8_t> present(kNumObjectClasses, 0);
    const auto& node = world.nodes[static_cast<std::size_t>(pose.node_id)];
    for (const auto& obj : world.objects) {
        const double dx = obj.x - node.x, dy = obj.y - node.y;
        const double dist = std::hypot(dx, dy);
        if (dist < kObjectMinDistM) continue;
        if (kObjectWidthGain * obj.size / dist < kPresenceMinWidthDeg) continue;
        if (circular_distance_deg(bearing_deg(dx, dy), heading_deg(pose)) > world.config.hfov_deg / 2.0 + kGeomEps)
            continue;
        const double elev = deg_from_rad(std::atan2(obj.height - kCameraHeightM, dist));
        if (std::fabs(elev - elevation_deg(pose)) > world.config.vfov_deg / 2.0 + kGeomEps) continue;
        present[static_cast<std::size_t>(obj.class_id)] = 1;
    }
    return present;
}

std::int32_t traversable_count_label(const World& world, const Pose& pose) {
    std::int32_t count = 0;
    for (const auto& tb : traversable_bearings(world, pose.node_id)) {
        if (circular_distance_deg(tb.bearing_deg, heading_deg(pose)) <= world.config.hfov_deg / 2.0 + kGeomEps)
            ++count;
    }
    return count;
}

struct AffineProbe {
    nn::Tensor<float> w, b, vw, vb;

    AffineProbe(std::size_t out_dim, std::size_t in_dim, std::uint64_t seed) {
        Rng rng(derive_seed(seed, 0x70726f6265ULL));
        const double bound = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
        w = nn::Tensor<float>::zeros({out_dim, in_dim});
        for (auto& v : w.data) v = static_cast<float>(rng.uniform(-bound, bound));
        b = nn::Tensor<float>::zeros({out_dim});
        vw = nn::Tensor<float>::zeros({out_dim, in_dim});
        vb = nn::Tensor<float>::zeros({out_dim});
    }

    void step(const nn::Tensor<float>& gw, const nn::Tensor<float>& gb, const ProbeConfig& cfg, double lr) {
        auto update = [&](nn::Tensor<float>& p, nn::Tensor<float>& vel, const nn::Tensor<float>& grad) {
            const float mu = static_cast<float>(cfg.sgd_momentum);
            const float wd = static_cast<float>(cfg.weight_decay);
            const float flr = static_cast<float>(lr);
            for (std::size_t i = 0; i < p.data.size(); ++i) {
                const float g = grad.data[i] + wd * p.data[i];
                const float v = mu * vel.data[i] + g;
                vel.data[i] = v;
                p.data[i] -= cfg.nesterov ? flr * (g + mu * v) : flr * v;
            }
        };
        update(w, vw, gw);
        update(b, vb, gb);
    }
};

struct ProbeDataset {
    nn::Tensor<float> inputs;                 // [rows, in_dim]
    std::vector<std::int32_t> class_labels;   // CE kinds
    std::vector<std::vector<std::uint8_t>> masks;  // relative_pose only
    std::vector<std::uint8_t> multi_labels;   // object_presence, row-major n*C
    std::vector<float> reg_labels;            // traversable_count
    std::size_t out_dim = 0;
    std::size_t group_size = 1;               // rows per pose
};

ProbeDataset build_probe_dataset(const FeatureStore& store, const World& world, ProbeKind kind,
                                 const ProbeConfig& cfg) {
    const auto poses = enumerate_views(world);
    if (store.records.size() != poses.size())
        throw ValidationError("probe: feature store does not cover this world's poses");
    const std::size_t d = store.dim;

    ProbeDataset ds;
    Rng rng(derive_seed(cfg.split_seed, 0x72656c70ULL));
    const std::size_t n = poses.size();

    switch (kind) {
        case ProbeKind::relative_pose: {
            // several query draws per anchor; one pair is far too little
            // signal for a 27-way affine head, and the train/test split
            // stays by anchor pose either way
            const std::size_t pairs = kRelativePosePairsPerAnchor;
            ds.group_size = pairs;
            ds.inputs = nn::Tensor<float>::zeros({n * pairs, 2 * d});
            ds.class_labels.resize(n * pairs);
            ds.masks.assign(n * pairs, std::vector<std::uint8_t>(kNumJigsawLabels, 0));
            for (std::size_t i = 0; i < n; ++i) {
                const auto neighbors = jigsaw_neighbors(world, poses[i]);
                std::vector<std::int32_t> labels;
                for (const auto& [label, q] : neighbors) {
                    (void)q;
                    labels.push_back(label);
                }
                for (std::size_t k = 0; k < pairs; ++k) {
                    const std::size_t row = i * pairs + k;
                    const std::int32_t label = labels[rng.below(labels.size())];
                    ds.class_labels[row] = label - 1;
                    for (const std::int32_t l : labels)
                        ds.masks[row][static_cast<std::size_t>(l - 1)] = 1;
                    const auto& fa = store.at(poses[i]).feature;
                    const auto& fq = store.at(neighbors.at(label)).feature;
                    std::copy(fa.begin(), fa.end(),
                              ds.inputs.data.begin() + static_cast<std::ptrdiff_t>(row * 2 * d));
                    std::copy(fq.begin(), fq.end(),
                              ds.inputs.data.begin() + static_cast<std::ptrdiff_t>(row * 2 * d + d));
                }
            }
            ds.out_dim = kNumJigsawLabels;
            break;
        }
        case ProbeKind::object_presence: {
            ds.inputs = nn::Tensor<float>::zeros({n, d});
            ds.multi_labels.resize(n * kNumObjectClasses);
            for (std::size_t i = 0; i < n; ++i) {
                const auto& f = store.at(poses[i]).feature;
                std::copy(f.begin(), f.end(), ds.inputs.data.begin() + static_cast<std::ptrdiff_t>(i * d));
                const auto present = object_presence_labels(world, poses[i]);
                std::copy(present.begin(), present.end(),
                          ds.multi_labels.begin() + static_cast<std::ptrdiff_t>(i * kNumObjectClasses));
            }
            ds.out_dim = kNumObjectClasses;
            break;
        }
        case ProbeKind::scene_id: {
            ds.inputs = nn::Tensor<float>::zeros({n, d});
            ds.class_labels.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                const auto& f = store.at(poses[i]).feature;
                std::copy(f.begin(), f.end(), ds.inputs.data.begin() + static_cast<std::ptrdiff_t>(i * d));
                ds.class_labels[i] = world.room_of(poses[i].node_id);
            }
            ds.out_dim = world.room_hues.size();
            break;
        }
        case ProbeKind::traversable_count: {
            ds.inputs = nn::Tensor<float>::zeros({n, d});
            ds.reg_labels.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                const auto& f = store.at(poses[i]).feature;
                std::copy(f.begin(), f.end(), ds.inputs.data.begin() + static_cast<std::ptrdiff_t>(i * d));
                ds.reg_labels[i] = static_cast<float>(traversable_count_label(world, poses[i]));
            }
            ds.out_dim = 1;
            break;
        }
    }
    return ds;
}

nn::Tensor<float> gather_rows(const nn::Tensor<float>& src, const std::vector<std::size_t>& rows) {
    const std::size_t d = src.cols();
    nn::Tensor<float> out = nn::Tensor<float>::zeros({rows.size(), d});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(src.data.begin() + static_cast<std::ptrdiff_t>(rows[i] * d),
                  src.data.begin() + static_cast<std::ptrdiff_t>((rows[i] + 1) * d),
                  out.data.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    return out;
}

double average_precision(const std::vector<float>& scores, const std::vector<std::uint8_t>& labels) {
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&scores](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::size_t positives = 0;
    for (const auto y : labels) positives += y;
    if (positives == 0) return -1.0;  // undefined for this class
    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (labels[order[k]]) {
            ++hits;
            ap += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    return ap / static_cast<double>(positives);
}

}  // namespace

ProbeResult train_probe(const FeatureStore& store, const World& world, ProbeKind kind,
                        const ProbeConfig& cfg) {
    ProbeDataset ds = build_probe_dataset(store, world, kind, cfg);
    const std::size_t n = ds.inputs.rows();
    const std::size_t in_dim = ds.inputs.cols();

    // 80/20 split by pose, seeded; multi-row kinds keep a pose's rows on
    // one side of the split
    const std::size_t n_poses = n / ds.group_size;
    std::vector<std::size_t> idx(n_poses);
    for (std::size_t i = 0; i < n_poses; ++i) idx[i] = i;
    Rng split_rng(derive_seed(cfg.split_seed, 0x73706c74ULL));
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
        const std::size_t j = i + split_rng.below(idx.size() - i);
        std::swap(idx[i], idx[j]);
    }
    const std::size_t n_train_poses = std::max<std::size_t>(1, static_cast<std::size_t>(
        std::llround(cfg.train_fraction * static_cast<double>(n_poses))));
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < n_poses; ++i) {
        for (std::size_t k = 0; k < ds.group_size; ++k) {
            (i < n_train_poses ? train_idx : test_idx).push_back(idx[i] * ds.group_size + k);
        }
    }
    if (test_idx.empty()) throw ValidationError("probe: holdout split is empty");

    // standardize inputs with train-split statistics; keeps the affine
    // head's optimization well conditioned for any feature scale
    {
        std::vector<double> mean(in_dim, 0.0), var(in_dim, 0.0);
        for (const auto r : train_idx)
            for (std::size_t c = 0; c < in_dim; ++c) mean[c] += ds.inputs.data[r * in_dim + c];
        for (auto& m : mean) m /= static_cast<double>(train_idx.size());
        for (const auto r : train_idx)
            for (std::size_t c = 0; c < in_dim; ++c) {
                const double d = ds.inputs.data[r * in_dim + c] - mean[c];
                var[c] += d * d;
            }
        for (std::size_t c = 0; c < in_dim; ++c) {
            const double sd = std::sqrt(var[c] / static_cast<double>(train_idx.size()));
            const double scale = 1.0 / std::max(sd, 1e-6);
            for (std::size_t r = 0; r < n; ++r) {
                auto& v = ds.inputs.data[r * in_dim + c];
                v = static_cast<float>((v - mean[c]) * scale);
            }
        }
    }

    AffineProbe head(ds.out_dim, in_dim, cfg.split_seed);
    Rng batch_rng(derive_seed(cfg.split_seed, 0x6261746368ULL));

    for (std::int64_t t = 0; t < cfg.iterations; ++t) {
        const double lr = nn::cosine_lr(t, cfg.iterations, cfg.lr0);
        const std::size_t bs = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), train_idx.size());
        std::vector<std::size_t> rows(bs);
        for (auto& r : rows) r = train_idx[batch_rng.below(train_idx.size())];

        nn::Tape<float> tape;
        auto wv = tape.leaf(head.w);
        auto bv = tape.leaf(head.b);
        auto xv = tape.leaf(gather_rows(ds.inputs, rows));
        auto logits = tape.dense(xv, wv, bv);

        if (kind == ProbeKind::relative_pose || kind == ProbeKind::scene_id) {
            std::vector<std::int32_t> labels(bs);
            std::vector<std::vector<std::uint8_t>> masks;
            if (kind == ProbeKind::relative_pose) masks.resize(bs);
            for (std::size_t i = 0; i < bs; ++i) {
                labels[i] = ds.class_labels[rows[i]];
                if (kind == ProbeKind::relative_pose) masks[i] = ds.masks[rows[i]];
            }
            auto ce = tape.masked_softmax_ce(logits, labels, masks);
            tape.backward(ce.loss);
        } else if (kind == ProbeKind::object_presence) {
            std::vector<std::uint8_t> targets(bs * ds.out_dim);
            for (std::size_t i = 0; i < bs; ++i)
                std::copy(ds.multi_labels.begin() + static_cast<std::ptrdiff_t>(rows[i] * ds.out_dim),
                          ds.multi_labels.begin() + static_cast<std::ptrdiff_t>((rows[i] + 1) * ds.out_dim),
                          targets.begin() + static_cast<std::ptrdiff_t>(i * ds.out_dim));
            auto bce = tape.bce_with_logits_multi(logits, targets);
            tape.backward(bce.loss);
        } else {
            nn::Tensor<float> target = nn::Tensor<float>::zeros({bs, 1});
            for (std::size_t i = 0; i < bs; ++i) target.data[i] = ds.reg_labels[rows[i]];
            auto loss = tape.mse(logits, std::move(target));
            tape.backward(loss);
        }
        head.step(tape.grad(wv), tape.grad(bv), cfg, lr);
    }

    // evaluation on both splits
    auto evaluate = [&](const std::vector<std::size_t>& rows) {
        const auto x = gather_rows(ds.inputs, rows);
        const auto logits = nn::dense_fwd(x, head.w, head.b);
        const std::size_t m = rows.size();
        if (kind == ProbeKind::relative_pose || kind == ProbeKind::scene_id) {
            std::size_t hits = 0;
            for (std::size_t i = 0; i < m; ++i) {
                int best = -1;
                float best_v = 0.0f;
                for (std::size_t c = 0; c < ds.out_dim; ++c) {
                    if (kind == ProbeKind::relative_pose && !ds.masks[rows[i]][c]) continue;
                    const float v = logits.data[i * ds.out_dim + c];
                    if (best < 0 || v > best_v) {
                        best = static_cast<int>(c);
                        best_v = v;
                    }
                }
                if (best == ds.class_labels[rows[i]]) ++hits;
            }
            return 100.0 * static_cast<double>(hits) / static_cast<double>(m);
        }
        if (kind == ProbeKind::object_presence) {
            double ap_sum = 0.0;
            std::size_t valid = 0;
            for (std::size_t c = 0; c < ds.out_dim; ++c) {
                std::vector<float> scores(m);
                std::vector<std::uint8_t> labels(m);
                for (std::size_t i = 0; i < m; ++i) {
                    scores[i] = logits.data[i * ds.out_dim + c];
                    labels[i] = ds.multi_labels[rows[i] * ds.out_dim + c];
                }
                const double ap = average_precision(scores, labels);
                if (ap >= 0.0) {
                    ap_sum += ap;
                    ++valid;
                }
            }
            return valid == 0 ? 0.0 : 100.0 * ap_sum / static_cast<double>(valid);
        }
        double se = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double diff = logits.data[i] - ds.reg_labels[rows[i]];
            se += diff * diff;
        }
        return std::sqrt(se / static_cast<double>(m));
    };

    ProbeResult result;
    result.train_value = evaluate(train_idx);
    result.value = evaluate(test_idx);
    switch (kind) {
        case ProbeKind::relative_pose:
        case ProbeKind::scene_id: result.metric_name = "accuracy"; break;
        case ProbeKind::object_presence: result.metric_name = "mAP"; break;
        case ProbeKind::traversable_count:
            result.metric_name = "rmse";
            result.higher_is_better = false;
            break;
    }
    return result;
}

std::string AblationReport::to_csv() const {
    const AblationRow* ref = nullptr;
    for (const auto& row : rows)
        if (row.name == "all" && !row.failed) ref = &row;

    std::string out =
        "name,jigsaw,traversability,instance,"
        "relative_pose_acc,relative_pose_delta,"
        "object_presence_map,object_presence_delta,"
        "scene_id_acc,scene_id_delta,"
        "traversable_count_rmse,traversable_count_delta\n";
    char buf[64];
    for (const auto& row : rows) {
        out += row.name;
        out += ',';
        out += row.jig ? '1' : '0';
        out += ',';
        out += row.trav ? '1' : '0';
        out += ',';
        out += row.ins ? '1' : '0';
        for (std::size_t m = 0; m < row.metrics.size(); ++m) {
            if (row.failed) {
                out += ",failed,failed";
                continue;
            }
            std::snprintf(buf, sizeof(buf), ",%.4f", row.metrics[m]);
            out += buf;
            if (ref && !row.failed) {
                std::snprintf(buf, sizeof(buf), ",%.4f", row.metrics[m] - ref->metrics[m]);
                out += buf;
            } else {
                out += ",";
            }
        }
        out += '\n';
    }
    return out;
}

AblationReport run_ablation(const std::vector<World>& worlds, const World& holdout,
                            const TrainRunConfig& cfg, const ProbeConfig& probe_cfg, int jobs) {
    struct Plan {
        const char* name;
        bool jig, trav, ins;
        bool baseline;
    };
    static constexpr Plan kPlans[8] = {
        {"all", true, true, true, false},   {"jig", true, false, false, false},
        {"trav", false, true, false, false}, {"ins", false, false, true, false},
        {"jig+trav", true, true, false, false}, {"jig+ins", true, false, true, false},
        {"trav+ins", false, true, true, false}, {"random_frozen", false, false, false, true},
    };

    AblationReport report;
    report.rows.resize(8);

    auto run_row = [&](std::size_t r) {
        const Plan& plan = kPlans[r];
        AblationRow row;
        row.name = plan.name;
        row.jig = plan.jig;
        row.trav = plan.trav;
        row.ins = plan.ins;
        try {
            nn::EncoderState<float> state;
            if (plan.baseline) {
                state = nn::EncoderState<float>::init(cfg.model, cfg.train.seed);
            } else {
                TrainRunConfig row_cfg = cfg;
                row_cfg.train.lambda_jig = plan.jig ? cfg.train.lambda_jig : 0.0;
                row_cfg.train.lambda_trav = plan.trav ? cfg.train.lambda_trav : 0.0;
                row_cfg.train.lambda_ins = plan.ins ? cfg.train.lambda_ins : 0.0;
                state = train(worlds, holdout, row_cfg).state;
            }
            // probes run on the primary training world: the linear-probe
            // protocol measures what the representation encodes about data
            // it was trained on
            const World& probe_world = worlds.front();
            const FeatureStore store = export_features(state, probe_world);
            row.metrics[0] = train_probe(store, probe_world, ProbeKind::relative_pose, probe_cfg).value;
            row.metrics[1] = train_probe(store, probe_world, ProbeKind::object_presence, probe_cfg).value;
            row.metrics[2] = train_probe(store, probe_world, ProbeKind::scene_id, probe_cfg).value;
            row.metrics[3] = train_probe(store, probe_world, ProbeKind::traversable_count, probe_cfg).value;
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
        }
        report.rows[r] = std::move(row);
    };

    if (jobs <= 1) {
        for (std::size_t r = 0; r < 8; ++r) run_row(r);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        const int n_threads = std::min(jobs, 8);
        for (int w = 0; w < n_threads; ++w) {
            pool.emplace_back([&]() {
                for (std::size_t r = next.fetch_add(1); r < 8; r = next.fetch_add(1)) run_row(r);
            });
        }
        for (auto& th : pool) th.join();
    }
    return report;
}

}  // namespace sea
