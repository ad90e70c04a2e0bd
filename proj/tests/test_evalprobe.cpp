#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sea/errors.hpp"
#include "sea/evalprobe.hpp"
#include "sea/sampler.hpp"
#include "sea/trainer.hpp"
#include "test_support.hpp"

using namespace sea;

namespace {

World probe_world(std::uint64_t seed = 51) {
    WorldConfig cfg;
    cfg.rows = 3;
    cfg.cols = 3;
    cfg.view_px = 16;
    cfg.rooms = 2;
    cfg.objects = 14;
    cfg.seed = seed;
    return generate_world(cfg);
}

nn::ModelConfig probe_model() {
    nn::ModelConfig m;
    m.input_dim = 16 * 16 * 3;
    m.enc_hidden1 = 32;
    m.enc_hidden2 = 24;
    m.feature_dim = 16;
    m.jig_hidden = 24;
    m.trav_hidden = 8;
    m.ins_hidden = 16;
    m.ins_proj_dim = 8;
    return m;
}

// one-hot feature per pose index: linearly separable for any pose label
FeatureStore one_hot_store(const World& w) {
    const auto poses = enumerate_views(w);
    FeatureStore store;
    store.dim = static_cast<std::uint32_t>(poses.size());
    for (std::size_t i = 0; i < poses.size(); ++i) {
        FeatureStore::Record rec;
        rec.node = static_cast<std::uint32_t>(poses[i].node_id);
        rec.h_idx = static_cast<std::uint8_t>(poses[i].heading_idx);
        rec.e_idx = static_cast<std::uint8_t>(poses[i].elevation_idx);
        rec.feature.assign(poses.size(), 0.0f);
        rec.feature[i] = 1.0f;
        store.records.push_back(std::move(rec));
    }
    return store;
}

}  // namespace

TEST_CASE("export_features: one record per pose, canonical order, bit-exact round-trip") {
    const World w = probe_world();
    const auto state = nn::EncoderState<float>::init(probe_model(), 1);
    const FeatureStore store = export_features(state, w);

    const auto poses = enumerate_views(w);
    REQUIRE(store.records.size() == poses.size());
    CHECK(store.records.size() == w.nodes.size() * 36);
    CHECK(store.dim == 16);
    for (std::size_t i = 0; i < poses.size(); ++i) {
        CHECK(store.records[i].node == static_cast<std::uint32_t>(poses[i].node_id));
        CHECK(store.records[i].h_idx == poses[i].heading_idx);
        CHECK(store.records[i].e_idx == poses[i].elevation_idx);
    }

    const auto dir = std::filesystem::temp_directory_path() / "sea_feat_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "features.seaf").string();
    save_feature_store(store, path);
    const FeatureStore loaded = load_feature_store(path);
    REQUIRE(loaded.records.size() == store.records.size());
    for (std::size_t i = 0; i < store.records.size(); ++i)
        CHECK(loaded.records[i].feature == store.records[i].feature);

    // save(load(x)) reproduces identical bytes
    const std::string path2 = (dir / "echo.seaf").string();
    save_feature_store(loaded, path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);

    // corruption detected
    std::vector<std::uint8_t> bytes(b1.begin(), b1.end());
    bytes[20] ^= 0x55;
    CHECK_THROWS_AS(decode_feature_store(bytes.data(), bytes.size()), ValidationError);

    // deterministic export: same state, same world, same bytes
    const FeatureStore again = export_features(state, w);
    CHECK(encode_feature_store(again) == encode_feature_store(store));

    std::filesystem::remove_all(dir);
}

TEST_CASE("score_aux: a perfect lookup fixture scores 100 on all tasks") {
    const World w = probe_world(52);
    const EvalSet ev = build_eval_set(w, enumerate_views(w), 7, 64, AugmentConfig{});
    const std::size_t n = ev.poses.size();

    AuxEvalOutputs out;
    out.jig_logits = nn::Tensor<float>::zeros({n, 27});
    out.trav_logits.resize(n);
    out.ins_query = nn::Tensor<float>::zeros({n, n});
    out.ins_key = nn::Tensor<float>::zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        out.jig_logits.data[i * 27 + static_cast<std::size_t>(ev.jig_labels[i] - 1)] = 5.0f;
        out.trav_logits[i] = ev.trav_labels[i] ? 3.0f : -3.0f;
        out.ins_query.data[i * n + i] = 1.0f;  // orthonormal lookup rows
        out.ins_key.data[i * n + i] = 1.0f;
    }
    const AuxAccuracy acc = score_aux(ev, out);
    CHECK(acc.jig == doctest::Approx(100.0));
    CHECK(acc.trav == doctest::Approx(100.0));
    CHECK(acc.ins_top1 == doctest::Approx(100.0));
}

TEST_CASE("eval_aux on an untrained encoder sits near chance") {
    const World w = probe_world(53);
    const auto state = nn::EncoderState<float>::init(probe_model(), 2);
    const EvalSet ev = build_eval_set(w, enumerate_views(w), 11, 324, AugmentConfig{});
    const AuxAccuracy acc = eval_aux(state, ev);

    // balanced traversability: majority guessing gives 50; random features
    // land near it
    CHECK(acc.trav > 25.0);
    CHECK(acc.trav < 75.0);

    // jigsaw chance under masks is 1/|available| averaged, below ~12%
    CHECK(acc.jig < 25.0);
}

TEST_CASE("probe on one-hot features memorizes any pose-derived label") {
    const World w = probe_world(54);
    const FeatureStore store = one_hot_store(w);
    // gradients are batch-averaged, so memorizing one-hot rows needs a
    // longer schedule than the production recipe
    ProbeConfig cfg;
    cfg.iterations = 2500;
    cfg.lr0 = 0.02;
    const ProbeResult scene = train_probe(store, w, ProbeKind::scene_id, cfg);
    CHECK(scene.train_value == doctest::Approx(100.0));

    const ProbeResult trav = train_probe(store, w, ProbeKind::traversable_count, cfg);
    CHECK(trav.train_value < 0.5);  // rmse on memorized labels
}

TEST_CASE("probe with permuted features scores at the permutation null") {
    const World w = probe_world(55);
    FeatureStore store = one_hot_store(w);
    // permute features across poses: labels stay put, features are shuffled
    Rng rng(99);
    for (std::size_t i = store.records.size(); i > 1; --i) {
        const std::size_t j = rng.below(i);
        std::swap(store.records[i - 1].feature, store.records[j].feature);
    }
    ProbeConfig cfg;
    cfg.iterations = 400;
    const ProbeResult scene = train_probe(store, w, ProbeKind::scene_id, cfg);

    // majority-class share of scene labels = the permutation-null accuracy
    const auto poses = enumerate_views(w);
    std::vector<int> counts(w.room_hues.size(), 0);
    for (const auto& p : poses) counts[static_cast<std::size_t>(w.room_of(p.node_id))]++;
    const double majority = 100.0 * *std::max_element(counts.begin(), counts.end()) /
                            static_cast<double>(poses.size());
    CHECK(scene.value <= majority + 10.0);
}

TEST_CASE("probe errors on store/world mismatch") {
    const World w = probe_world(56);
    const World other = probe_world(57);
    WorldConfig big = other.config;
    big.rows = 4;
    const World w4 = generate_world(big);
    const FeatureStore store = one_hot_store(w4);
    CHECK_THROWS_AS(train_probe(store, w, ProbeKind::scene_id, ProbeConfig{}), ValidationError);
    CHECK_THROWS_AS(probe_kind_from_name("bogus"), ValidationError);
}

TEST_CASE("ablation report: 8 rows, zero deltas on the reference, byte-stable") {
    const World w = probe_world(58);
    const World holdout = probe_world(59);
    TrainRunConfig cfg;
    cfg.train.batch_size = 4;
    cfg.train.iterations = 3;
    cfg.train.eval_every = 3;
    cfg.train.bank_capacity = 32;
    cfg.train.eval_cases = 48;
    cfg.train.seed = 5;
    cfg.model = probe_model();
    ProbeConfig probe_cfg;
    probe_cfg.iterations = 30;

    const AblationReport a = run_ablation({w}, holdout, cfg, probe_cfg);
    REQUIRE(a.rows.size() == 8);
    CHECK(a.rows[0].name == "all");
    CHECK(a.rows[7].name == "random_frozen");
    for (const auto& row : a.rows) CHECK_FALSE(row.failed);

    const std::string csv = a.to_csv();
    std::istringstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "name,jigsaw,traversability,instance,relative_pose_acc,relative_pose_delta,"
          "object_presence_map,object_presence_delta,scene_id_acc,scene_id_delta,"
          "traversable_count_rmse,traversable_count_delta");
    std::string all_row;
    std::getline(in, all_row);
    CHECK(all_row.find(",0.0000,") != std::string::npos);  // self-delta is zero

    const AblationReport b = run_ablation({w}, holdout, cfg, probe_cfg);
    CHECK(b.to_csv() == csv);

    // two worker threads must produce the identical report
    const AblationReport c = run_ablation({w}, holdout, cfg, probe_cfg, 2);
    CHECK(c.to_csv() == csv);
}
