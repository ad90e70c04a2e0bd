#include "sea/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sea/crc32.hpp"
#include "sea/errors.hpp"
#include "sea/instrument.hpp"

namespace sea {

namespace {

constexpr std::uint64_t kTrainStream = 0x747261696eULL;
constexpr std::uint64_t kEvalStream = 0x6576616cULL;
constexpr char kTrainerBlockMagic[4] = {'R', 'N', 'G', 'S'};

void flatten_into(nn::Tensor<float>& dst, std::size_t row, const ViewImage& view) {
    std::copy(view.rgb.begin(), view.rgb.end(), dst.data.begin() + static_cast<std::ptrdiff_t>(row * dst.cols()));
}

}  // namespace

void validate(const TrainConfig& cfg) {
    if (cfg.batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
    if (cfg.iterations < 1) throw ValidationError("train: iterations must be >= 1");
    if (cfg.lambda_jig < 0 || cfg.lambda_trav < 0 || cfg.lambda_ins < 0)
        throw ValidationError("train: lambda weights must be >= 0");
    if (!(cfg.ema_m >= 0.0 && cfg.ema_m <= 1.0)) throw ValidationError("train: ema_m must be in [0, 1]");
    if (!(cfg.tau > 0.0)) throw ValidationError("train: tau must be > 0");
    if (!(cfg.lr0 > 0.0)) throw ValidationError("train: lr0 must be > 0");
    if (!(cfg.sgd_momentum >= 0.0 && cfg.sgd_momentum < 1.0))
        throw ValidationError("train: sgd_momentum must be in [0, 1)");
    if (cfg.weight_decay < 0.0) throw ValidationError("train: weight_decay must be >= 0");
    if (cfg.bank_capacity < 1) throw ValidationError("train: bank_K must be >= 1");
    if (cfg.eval_every < 1) throw ValidationError("train: eval_every must be >= 1");
    if (!(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0))
        throw ValidationError("train: holdout_fraction must be in (0, 1)");
    if (cfg.holdout_mode != "world" && cfg.holdout_mode != "split")
        throw ValidationError("train: holdout_mode must be \"world\" or \"split\"");
    if (cfg.train_worlds < 1) throw ValidationError("train: train_worlds must be >= 1");
    if (cfg.eval_cases < 2) throw ValidationError("train: eval_cases must be >= 2");
}

std::string MetricsRecord::to_jsonl() const {
    nlohmann::ordered_json j;
    j["iteration"] = iteration;
    j["lr"] = lr;
    j["loss_total"] = loss_total;
    j["loss_jig"] = loss_jig;
    j["loss_trav"] = loss_trav;
    j["loss_ins"] = loss_ins;
    if (has_eval) {
        j["acc_jig"] = acc_jig;
        j["acc_trav"] = acc_trav;
        j["acc_ins_top1"] = acc_ins_top1;
        j["wall_ms"] = wall_ms;
    }
    return j.dump();
}

EvalSet build_eval_set(const World& world, const std::vector<Pose>& poses, std::uint64_t seed,
                       std::int32_t max_cases, const AugmentConfig& aug) {
    if (poses.empty()) throw ValidationError("eval set: empty holdout");
    instrument::PauseGuard pause;  // evaluation rendering is off the books

    Rng rng(derive_seed(seed, kEvalStream));
    std::vector<Pose> chosen = poses;
    if (static_cast<std::int64_t>(chosen.size()) > max_cases) {
        // seeded partial Fisher-Yates, then canonical order
        for (std::size_t i = 0; i < static_cast<std::size_t>(max_cases); ++i) {
            const std::size_t j = i + rng.below(chosen.size() - i);
            std::swap(chosen[i], chosen[j]);
        }
        chosen.resize(static_cast<std::size_t>(max_cases));
        std::sort(chosen.begin(), chosen.end(), [](const Pose& a, const Pose& b) {
            if (a.node_id != b.node_id) return a.node_id < b.node_id;
            if (a.elevation_idx != b.elevation_idx) return a.elevation_idx < b.elevation_idx;
            return a.heading_idx < b.heading_idx;
        });
    }

    const std::size_t n = chosen.size();
    const auto input_dim = static_cast<std::size_t>(world.config.view_px) * world.config.view_px * 3;
    EvalSet ev;
    ev.poses = chosen;
    ev.anchor_raw = nn::Tensor<float>::zeros({n, input_dim});
    ev.query_raw = nn::Tensor<float>::zeros({n, input_dim});
    ev.anchor_aug1 = nn::Tensor<float>::zeros({n, input_dim});
    ev.anchor_aug2 = nn::Tensor<float>::zeros({n, input_dim});
    ev.jig_labels.resize(n);
    ev.jig_masks.resize(n);
    ev.trav_labels.resize(n);

    PanoramaCache cache(world);
    for (std::size_t i = 0; i < n; ++i) {
        const Pose& pose = chosen[i];
        const auto neighbors = jigsaw_neighbors(world, pose);
        std::vector<std::int32_t> labels;
        labels.reserve(neighbors.size());
        for (const auto& [label, q] : neighbors) {
            (void)q;
            labels.push_back(label);
        }
        const std::int32_t label = labels[rng.below(labels.size())];
        ev.jig_labels[i] = label;
        ev.jig_masks[i] = jigsaw_mask(neighbors);
        ev.trav_labels[i] = traversability_label(world, pose) ? 1 : 0;

        const ViewImage anchor = render_view(cache, pose);
        const ViewImage query = render_view(cache, neighbors.at(label));
        flatten_into(ev.anchor_raw, i, anchor);
        flatten_into(ev.query_raw, i, query);
        flatten_into(ev.anchor_aug1, i, apply_augment(anchor, sample_augment_params(aug, rng)));
        flatten_into(ev.anchor_aug2, i, apply_augment(anchor, sample_augment_params(aug, rng)));
    }

    // class-balanced traversability subset
    std::vector<std::size_t> pos_idx, neg_idx;
    for (std::size_t i = 0; i < n; ++i) (ev.trav_labels[i] ? pos_idx : neg_idx).push_back(i);
    auto shuffle_vec = [&rng](std::vector<std::size_t>& v) {
        for (std::size_t i = 0; i + 1 < v.size(); ++i) {
            const std::size_t j = i + rng.below(v.size() - i);
            std::swap(v[i], v[j]);
        }
    };
    shuffle_vec(pos_idx);
    shuffle_vec(neg_idx);
    const std::size_t per_class = std::min(pos_idx.size(), neg_idx.size());
    ev.trav_balanced.clear();
    for (std::size_t i = 0; i < per_class; ++i) {
        ev.trav_balanced.push_back(pos_idx[i]);
        ev.trav_balanced.push_back(neg_idx[i]);
    }
    std::sort(ev.trav_balanced.begin(), ev.trav_balanced.end());
    return ev;
}

AuxAccuracy score_aux(const EvalSet& ev, const AuxEvalOutputs& out) {
    if (ev.poses.empty()) throw ValidationError("eval_aux: empty holdout");
    const std::size_t n = ev.poses.size();
    AuxAccuracy acc;

    // jigsaw: masked argmax against the drawn label
    std::size_t jig_hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        int best = -1;
        float best_v = 0.0f;
        for (int c = 0; c < kNumJigsawLabels; ++c) {
            if (!ev.jig_masks[i][static_cast<std::size_t>(c)]) continue;
            const float v = out.jig_logits.data[i * kNumJigsawLabels + static_cast<std::size_t>(c)];
            if (best < 0 || v > best_v) {
                best = c;
                best_v = v;
            }
        }
        if (best + 1 == ev.jig_labels[i]) ++jig_hits;
    }
    acc.jig = 100.0 * static_cast<double>(jig_hits) / static_cast<double>(n);

    // traversability at p >= 0.5 over the balanced subset
    std::size_t trav_hits = 0;
    for (const std::size_t i : ev.trav_balanced) {
        const bool pred = out.trav_logits[i] >= 0.0f;  // sigmoid(z) >= 0.5 iff z >= 0
        if (pred == (ev.trav_labels[i] != 0)) ++trav_hits;
    }
    acc.trav = ev.trav_balanced.empty()
                   ? 0.0
                   : 100.0 * static_cast<double>(trav_hits) / static_cast<double>(ev.trav_balanced.size());

    // instance: the own key must beat every other case's key
    const std::size_t pd = out.ins_query.cols();
    std::size_t ins_hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double best_v = -2.0;
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t t = 0; t < pd; ++t)
                dot += static_cast<double>(out.ins_query.data[i * pd + t]) * out.ins_key.data[j * pd + t];
            if (dot > best_v) {
                best_v = dot;
                best_j = j;
            }
        }
        if (best_j == i) ++ins_hits;
    }
    acc.ins_top1 = 100.0 * static_cast<double>(ins_hits) / static_cast<double>(n);
    return acc;
}

AuxAccuracy eval_aux(const nn::EncoderState<float>& state, const EvalSet& ev) {
    if (ev.poses.empty()) throw ValidationError("eval_aux: empty holdout");
    const std::size_t n = ev.poses.size();

    AuxEvalOutputs out;
    const auto f_a = state.encode(ev.anchor_raw);
    const auto f_q = state.encode_momentum(ev.query_raw);
    const std::size_t d = f_a.cols();
    nn::Tensor<float> cat = nn::Tensor<float>::zeros({n, 2 * d});
    for (std::size_t i = 0; i < n; ++i) {
        std::copy(f_a.data.begin() + static_cast<std::ptrdiff_t>(i * d),
                  f_a.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * d),
                  cat.data.begin() + static_cast<std::ptrdiff_t>(i * 2 * d));
        std::copy(f_q.data.begin() + static_cast<std::ptrdiff_t>(i * d),
                  f_q.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * d),
                  cat.data.begin() + static_cast<std::ptrdiff_t>(i * 2 * d + d));
    }
    out.jig_logits = state.jig_head(cat);

    const auto trav = state.trav_head(f_a);
    out.trav_logits.assign(trav.data.begin(), trav.data.end());

    out.ins_query = nn::l2_normalize_rows(state.ins_head(state.encode(ev.anchor_aug1)));
    out.ins_key = nn::l2_normalize_rows(state.ins_head_momentum(state.encode_momentum(ev.anchor_aug2)));
    return score_aux(ev, out);
}

TrainBatch build_batch(std::vector<PanoramaCache>& caches,
                       const std::vector<std::vector<Pose>>& pose_sets, const TrainRunConfig& cfg,
                       Rng& rng) {
    const std::size_t n = static_cast<std::size_t>(cfg.train.batch_size);
    const auto& world0 = caches.front().world();
    const auto input_dim = static_cast<std::size_t>(world0.config.view_px) * world0.config.view_px * 3;

    TrainBatch batch;
    batch.anchor_aug = nn::Tensor<float>::zeros({n, input_dim});
    batch.query = nn::Tensor<float>::zeros({n, input_dim});
    batch.key_aug = nn::Tensor<float>::zeros({n, input_dim});
    batch.jig_labels.resize(n);
    batch.jig_masks.resize(n);
    batch.trav_labels.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t w = caches.size() > 1 ? rng.below(caches.size()) : 0;
        const World& world = caches[w].world();
        const SamplePair pair = sample_pair_from(world, pose_sets[w], rng);

        const ViewImage anchor = render_view(caches[w], pair.anchor);
        const ViewImage query = render_view(caches[w], pair.query);

        batch.jig_labels[i] = pair.label;
        batch.jig_masks[i] = pair.mask;
        batch.trav_labels[i] = traversability_label(world, pair.anchor) ? 1 : 0;

        const AugmentParams a1 = sample_augment_params(cfg.aug, rng);
        const AugmentParams a2 = sample_augment_params(cfg.aug, rng);
        flatten_into(batch.anchor_aug, i, apply_augment(anchor, a1));
        flatten_into(batch.key_aug, i, apply_augment(anchor, a2));
        flatten_into(batch.query, i, query);
    }
    return batch;
}

StepResult train_step(nn::EncoderState<float>& state, MemoryBank<float>& bank,
                      const TrainBatch& batch, const TrainRunConfig& cfg, double lr) {
    nn::StepContext<float> ctx(state);

    // Momentum forwards are tape-free; any tape growth here is a bug and is
    // tracked in the momentum_tape_nodes counter (contract: stays 0).
    const std::uint64_t tape_before = instrument::tape_nodes().load(std::memory_order_relaxed);
    const auto f_q = state.encode_momentum(batch.query);
    const auto k_pos = nn::l2_normalize_rows(state.ins_head_momentum(state.encode_momentum(batch.key_aug)));
    const std::uint64_t tape_delta =
        instrument::tape_nodes().load(std::memory_order_relaxed) - tape_before;
    instrument::momentum_tape_nodes().fetch_add(tape_delta, std::memory_order_relaxed);

    // Single gradient-bearing forward over the augmented anchors feeds all
    // three online paths.
    const auto f_a = ctx.encode(batch.anchor_aug);

    StepResult result;
    std::vector<std::pair<float, nn::Tape<float>::Var>> terms;
    try {
        if (cfg.train.lambda_jig > 0.0) {
            auto jig = jigsaw_loss(ctx, f_a, f_q, batch.jig_labels, batch.jig_masks);
            result.loss_jig = ctx.tape().val(jig.loss).data[0];
            terms.push_back({static_cast<float>(cfg.train.lambda_jig), jig.loss});
        }
        if (cfg.train.lambda_trav > 0.0) {
            auto trav = traversability_loss(ctx, f_a, batch.trav_labels);
            result.loss_trav = ctx.tape().val(trav.loss).data[0];
            terms.push_back({static_cast<float>(cfg.train.lambda_trav), trav.loss});
        }
        if (cfg.train.lambda_ins > 0.0) {
            auto ins = instance_loss(ctx, f_a, k_pos, bank, cfg.train.tau);
            result.loss_ins = ctx.tape().val(ins.loss).data[0];
            terms.push_back({static_cast<float>(cfg.train.lambda_ins), ins.loss});
        }
    } catch (const ValidationError& e) {
        // mid-run degeneracy (e.g. a collapsed projection) aborts the run
        throw RuntimeFailure("train: loss computation degenerated at lr=" + std::to_string(lr) +
                             ": " + e.what());
    }

    if (!terms.empty()) {
        auto total = ctx.tape().weighted_sum(terms);
        result.loss_total = ctx.tape().val(total).data[0];
        if (!std::isfinite(result.loss_total)) {
            throw RuntimeFailure("train: non-finite loss (lr=" + std::to_string(lr) +
                                 ", jig=" + std::to_string(result.loss_jig) +
                                 ", trav=" + std::to_string(result.loss_trav) +
                                 ", ins=" + std::to_string(result.loss_ins) + ")");
        }
        ctx.backward(total);
        nn::SgdConfig sgd;
        sgd.lr = lr;
        sgd.momentum = cfg.train.sgd_momentum;
        sgd.weight_decay = cfg.train.weight_decay;
        sgd.nesterov = cfg.train.nesterov;
        nn::sgd_step(state, ctx, sgd);
    }

    nn::ema_update(state, cfg.train.ema_m);
    bank.enqueue(k_pos);  // after the loss consumed the pre-update bank
    return result;
}

void save_trainer_checkpoint(const TrainerCheckpoint& ckpt, const std::string& path) {
    auto tensors = nn::state_to_tensors(ckpt.state);
    nn::NamedTensorF32 bank;
    bank.name = "bank/entries";
    bank.shape = {static_cast<std::uint32_t>(ckpt.bank_entries.rows()),
                  static_cast<std::uint32_t>(ckpt.bank_entries.cols())};
    bank.data = ckpt.bank_entries.data;
    tensors.push_back(std::move(bank));
    auto bytes = nn::encode_checkpoint(tensors);

    // trainer block: magic, length, payload (7 u64 LE), crc
    std::vector<std::uint8_t> block(kTrainerBlockMagic, kTrainerBlockMagic + 4);
    auto put_u32 = [&block](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) block.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
    };
    auto put_u64 = [&block](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) block.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
    };
    put_u32(7 * 8);
    put_u64(ckpt.iteration);
    for (const auto w : ckpt.rng_state) put_u64(w);
    put_u64(ckpt.bank_cursor);
    put_u64(ckpt.bank_filled);
    const std::uint32_t crc = crc32(block.data(), block.size());
    put_u32(crc);

    bytes.insert(bytes.end(), block.begin(), block.end());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw RuntimeFailure("write failed: " + path);
}

TrainerCheckpoint load_trainer_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t consumed = 0;
    const auto tensors = nn::decode_checkpoint(bytes.data(), bytes.size(), &consumed);

    TrainerCheckpoint ckpt;
    ckpt.state = nn::state_from_tensors(tensors);
    const nn::NamedTensorF32* bank = nullptr;
    for (const auto& t : tensors)
        if (t.name == "bank/entries") bank = &t;
    if (!bank || bank->shape.size() != 2) throw ValidationError("checkpoint: missing bank entries");
    ckpt.bank_entries = nn::Tensor<float>::from({bank->shape[0], bank->shape[1]}, bank->data);

    // trainer block
    if (bytes.size() < consumed + 4 + 4 + 7 * 8 + 4) throw ValidationError("checkpoint: missing trainer block");
    const std::uint8_t* p = bytes.data() + consumed;
    if (std::memcmp(p, kTrainerBlockMagic, 4) != 0) throw ValidationError("checkpoint: bad trainer block magic");
    auto get_u32 = [&p]() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        return v;
    };
    auto get_u64 = [&p]() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        return v;
    };
    p += 4;
    const std::uint32_t len = get_u32();
    if (len != 7 * 8) throw ValidationError("checkpoint: unexpected trainer block length");
    const std::uint8_t* block_start = bytes.data() + consumed;
    ckpt.iteration = get_u64();
    for (auto& w : ckpt.rng_state) w = get_u64();
    ckpt.bank_cursor = get_u64();
    ckpt.bank_filled = get_u64();
    const std::uint32_t stored_crc = get_u32();
    if (stored_crc != crc32(block_start, 4 + 4 + len))
        throw ValidationError("checkpoint: trainer block CRC mismatch");
    return ckpt;
}

TrainOutputs train(const std::vector<World>& worlds, const World& holdout_world,
                   const TrainRunConfig& cfg, const std::string& out_dir,
                   const std::string& resume_from) {
    validate(cfg.train);
    if (worlds.empty()) throw ValidationError("train: need at least one world");
    const auto expected_input =
        static_cast<std::int32_t>(worlds[0].config.view_px) * worlds[0].config.view_px * 3;
    if (cfg.model.input_dim != expected_input)
        throw ValidationError("train: model input_dim does not match view_px*view_px*3");

    std::vector<PanoramaCache> caches;
    caches.reserve(worlds.size());
    for (const auto& w : worlds) caches.emplace_back(w);

    // training pose sets and the evaluation pose pool
    std::vector<std::vector<Pose>> pose_sets;
    std::vector<Pose> eval_pool;
    const World* eval_world = &holdout_world;
    if (cfg.train.holdout_mode == "split") {
        if (worlds.size() != 1)
            throw ValidationError("train: split holdout mode expects a single world");
        auto all = enumerate_views(worlds[0]);
        Rng split_rng(derive_seed(cfg.train.seed, 0x73706c6974ULL));
        for (std::size_t i = 0; i + 1 < all.size(); ++i) {
            const std::size_t j = i + split_rng.below(all.size() - i);
            std::swap(all[i], all[j]);
        }
        const auto n_hold = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(cfg.train.holdout_fraction * static_cast<double>(all.size()))));
        eval_pool.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_hold));
        pose_sets.push_back(std::vector<Pose>(all.begin() + static_cast<std::ptrdiff_t>(n_hold), all.end()));
        eval_world = &worlds[0];
    } else {
        for (const auto& w : worlds) pose_sets.push_back(enumerate_views(w));
        eval_pool = enumerate_views(holdout_world);
    }

    const EvalSet eval_set =
        build_eval_set(*eval_world, eval_pool, cfg.train.seed, cfg.train.eval_cases, cfg.aug);

    const std::int64_t T = cfg.train.iterations;
    const bool resuming = !resume_from.empty();

    nn::EncoderState<float> state =
        resuming ? nn::EncoderState<float>{} : nn::EncoderState<float>::init(cfg.model, cfg.train.seed);
    MemoryBank<float> bank(static_cast<std::size_t>(cfg.train.bank_capacity),
                           static_cast<std::size_t>(cfg.model.ins_proj_dim));
    Rng rng(derive_seed(cfg.train.seed, kTrainStream));
    std::int64_t start_iter = 0;

    if (resuming) {
        TrainerCheckpoint ckpt = load_trainer_checkpoint(resume_from);
        if (!(ckpt.state.cfg == cfg.model))
            throw ValidationError("train: checkpoint model config does not match run config");
        state = std::move(ckpt.state);
        bank.restore(ckpt.bank_entries, ckpt.bank_cursor, ckpt.bank_filled);
        rng.set_state(ckpt.rng_state);
        start_iter = static_cast<std::int64_t>(ckpt.iteration);
        if (start_iter >= T) throw ValidationError("train: checkpoint is already past the final iteration");
    }

    const bool writing = !out_dir.empty();
    std::ofstream metrics_file;
    if (writing) {
        std::filesystem::create_directories(out_dir);
        metrics_file.open(out_dir + "/metrics.jsonl", std::ios::binary);
        if (!metrics_file) throw RuntimeFailure("cannot open metrics file in " + out_dir);
    }

    const auto t_start = std::chrono::steady_clock::now();
    auto wall_ms = [&t_start]() {
        return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                     t_start)
            .count();
    };

    TrainOutputs out;
    auto emit = [&](const MetricsRecord& rec) {
        out.metrics.push_back(rec);
        if (writing) metrics_file << rec.to_jsonl() << '\n';
    };
    auto save_ckpt = [&](std::int64_t iter) {
        if (!writing) return;
        TrainerCheckpoint ckpt;
        ckpt.state = state;
        ckpt.bank_entries = bank.entries();
        ckpt.bank_cursor = bank.cursor();
        ckpt.bank_filled = bank.size();
        ckpt.iteration = static_cast<std::uint64_t>(iter);
        ckpt.rng_state = rng.state();
        save_trainer_checkpoint(ckpt, out_dir + "/ckpt_" + std::to_string(iter) + ".sea1");
    };

    if (!resuming) {
        out.initial_acc = eval_aux(state, eval_set);
        MetricsRecord rec;
        rec.iteration = 0;
        rec.lr = nn::cosine_lr(0, T, cfg.train.lr0);
        rec.has_eval = true;
        rec.acc_jig = out.initial_acc.jig;
        rec.acc_trav = out.initial_acc.trav;
        rec.acc_ins_top1 = out.initial_acc.ins_top1;
        rec.wall_ms = wall_ms();
        emit(rec);
        save_ckpt(0);
    }

    for (std::int64_t t = start_iter + 1; t <= T; ++t) {
        const double lr = nn::cosine_lr(t - 1, T, cfg.train.lr0);
        const TrainBatch batch = build_batch(caches, pose_sets, cfg, rng);
        const StepResult step = train_step(state, bank, batch, cfg, lr);

        MetricsRecord rec;
        rec.iteration = t;
        rec.lr = lr;
        rec.loss_total = step.loss_total;
        rec.loss_jig = step.loss_jig;
        rec.loss_trav = step.loss_trav;
        rec.loss_ins = step.loss_ins;
        if (t % cfg.train.eval_every == 0 || t == T) {
            const AuxAccuracy acc = eval_aux(state, eval_set);
            rec.has_eval = true;
            rec.acc_jig = acc.jig;
            rec.acc_trav = acc.trav;
            rec.acc_ins_top1 = acc.ins_top1;
            rec.wall_ms = wall_ms();
            out.final_acc = acc;
        }
        emit(rec);
        if (t == T / 2 || t == T) save_ckpt(t);
    }

    out.state = std::move(state);
    return out;
}

}  // namespace sea
