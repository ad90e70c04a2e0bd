// Command-line front end: world generation, pre-training, auxiliary
// evaluation, feature export, linear probes, and the task-subset ablation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sea/errors.hpp"
#include "sea/evalprobe.hpp"
#include "sea/png.hpp"
#include "sea/runconfig.hpp"
#include "sea/sampler.hpp"
#include "sea/trainer.hpp"
#include "sea/world.hpp"

namespace {

using sea::RunConfig;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = false) {
    auto* opt = cmd->add_option("--config", args.config_path, "JSON config of dotted keys");
    if (config_required) opt->required();
    cmd->add_option("--set", args.overrides, "override a config key, e.g. --set train.tau=0.1");
    cmd->add_option("--out", args.out_dir, "output directory")->required();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw sea::RuntimeFailure("cannot open for writing: " + path);
    out << text;
    if (!out) throw sea::RuntimeFailure("write failed: " + path);
}

std::vector<std::uint8_t> to_rgb8(const std::vector<float>& rgb) {
    std::vector<std::uint8_t> out(rgb.size());
    for (std::size_t i = 0; i < rgb.size(); ++i) {
        const float v = rgb[i] < 0.f ? 0.f : (rgb[i] > 1.f ? 1.f : rgb[i]);
        out[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    return out;
}

// Training worlds under the more-data axis: the primary world seed, then
// seed+2, seed+4, ... (seed+1 is reserved for the holdout world).
std::vector<sea::World> build_training_worlds(const sea::World& primary, std::int32_t count) {
    std::vector<sea::World> worlds{primary};
    for (std::int32_t k = 1; k < count; ++k) {
        sea::WorldConfig cfg = primary.config;
        cfg.seed = primary.config.seed + 2 * static_cast<std::uint64_t>(k);
        worlds.push_back(sea::generate_world(cfg));
    }
    return worlds;
}

sea::World build_holdout_world(const sea::WorldConfig& primary_cfg) {
    sea::WorldConfig cfg = primary_cfg;
    cfg.seed = primary_cfg.seed + 1;
    return sea::generate_world(cfg);
}

int cmd_gen_world(const CommonArgs& args, bool dump_panoramas, bool manifest) {
    const RunConfig cfg = sea::parse_run_config(args.config_path, args.overrides);
    const sea::World world = sea::generate_world(cfg.world);
    std::filesystem::create_directories(args.out_dir);
    sea::write_config_snapshot(cfg, args.out_dir);
    sea::save_world(world, args.out_dir + "/world.json");
    if (manifest) write_text(args.out_dir + "/manifest.jsonl", sea::export_manifest(world));
    if (dump_panoramas) {
        const std::string dir = args.out_dir + "/panoramas";
        std::filesystem::create_directories(dir);
        for (const auto& node : world.nodes) {
            const sea::Panorama pano = sea::render_panorama(world, node.id);
            sea::write_png_rgb8(dir + "/pano_" + std::to_string(node.id) + ".png", pano.width,
                                pano.height, to_rgb8(pano.rgb));
        }
    }
    return 0;
}

int cmd_pretrain(const CommonArgs& args, const std::string& world_path, const std::string& resume) {
    const RunConfig cfg = sea::parse_run_config(args.config_path, args.overrides);
    const sea::World primary = sea::load_world(world_path);
    const auto worlds = build_training_worlds(primary, cfg.train.train_worlds);
    const sea::World holdout = build_holdout_world(primary.config);
    std::filesystem::create_directories(args.out_dir);
    sea::write_config_snapshot(cfg, args.out_dir);
    sea::TrainRunConfig run{cfg.train, cfg.model, cfg.aug};
    run.model.input_dim = primary.config.view_px * primary.config.view_px * 3;
    sea::train(worlds, holdout, run, args.out_dir, resume);
    return 0;
}

int cmd_eval_aux(const CommonArgs& args, const std::string& ckpt_path, const std::string& world_path,
                 const std::string& holdout_path) {
    const RunConfig cfg = sea::parse_run_config(args.config_path, args.overrides);
    const sea::nn::EncoderState<float> state = sea::nn::load_state(ckpt_path);
    const sea::World world = sea::load_world(world_path);
    const sea::World holdout =
        holdout_path.empty() ? build_holdout_world(world.config) : sea::load_world(holdout_path);
    if (holdout.config.view_px * holdout.config.view_px * 3 != state.cfg.input_dim)
        throw sea::ValidationError("eval-aux: checkpoint expects " + std::to_string(state.cfg.input_dim) +
                                   " inputs; holdout world views do not match");
    std::filesystem::create_directories(args.out_dir);
    sea::write_config_snapshot(cfg, args.out_dir);

    const auto eval_set = sea::build_eval_set(holdout, sea::enumerate_views(holdout), cfg.train.seed,
                                              cfg.train.eval_cases, cfg.aug);
    const sea::AuxAccuracy acc = sea::eval_aux(state, eval_set);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f\n", acc.jig, acc.trav, acc.ins_top1);
    write_text(args.out_dir + "/table2.csv",
               std::string("jigsaw_acc,traversability_acc,instance_top1\n") + buf);
    std::printf("jigsaw %.2f%%  traversability %.2f%%  instance-top1 %.2f%%\n", acc.jig, acc.trav,
                acc.ins_top1);
    return 0;
}

int cmd_export_features(const CommonArgs& args, const std::string& ckpt_path,
                        const std::string& world_path) {
    const RunConfig cfg = sea::parse_run_config(args.config_path, args.overrides);
    const sea::nn::EncoderState<float> state = sea::nn::load_state(ckpt_path);
    const sea::World world = sea::load_world(world_path);
    std::filesystem::create_directories(args.out_dir);
    sea::write_config_snapshot(cfg, args.out_dir);
    const sea::FeatureStore store = sea::export_features(state, world);
    sea::save_feature_store(store, args.out_dir + "/features.seaf");
    return 0;
}

int cmd_probe(const CommonArgs& args, const std::string& features_path, const std::string& world_path,
              const std::string& task) {
    const RunConfig cfg = sea::parse_run_config(args.config_path, args.overrides);
    const sea::ProbeKind kind = sea::probe_kind_from_name(task);
    const sea::FeatureStore store = sea::load_feature_store(features_path);
    const sea::World world = sea::load_world(world_path);
    std::filesystem::create_directories(args.out_dir);
    sea::write_config_snapshot(cfg, args.out_dir);

    const sea::ProbeResult result = sea::train_probe(store, world, kind, cfg.probe);
    nlohmann::ordered_json j;
    j["task"] = task;
    j["metric"] = result.metric_name;
    j["value"] = result.value;
    j["train_value"] = result.train_value;
    write_text(args.out_dir + "/probe_" + task + ".json", j.dump(2) + "\n");
    std::printf("%s %s = %.4f (train %.4f)\n", task.c_str(), result.metric_name.c_str(), result.value,
                result.train_value);
    return 0;
}

int cmd_ablate(const CommonArgs& args, int jobs) {
    const RunConfig cfg = sea::parse_run_config(args.config_path, args.overrides);
    const sea::World primary = sea::generate_world(cfg.world);
    const auto worlds = build_training_worlds(primary, cfg.train.train_worlds);
    const sea::World holdout = build_holdout_world(primary.config);
    std::filesystem::create_directories(args.out_dir);
    sea::write_config_snapshot(cfg, args.out_dir);
    sea::TrainRunConfig run{cfg.train, cfg.model, cfg.aug};
    const sea::AblationReport report = sea::run_ablation(worlds, holdout, run, cfg.probe, jobs);
    write_text(args.out_dir + "/report.csv", report.to_csv());
    for (const auto& row : report.rows) {
        if (row.failed) std::fprintf(stderr, "row %s failed: %s\n", row.name.c_str(), row.error.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"procedural panorama worlds, auxiliary-task pre-training, and representation probes"};
    app.require_subcommand(1);

    CommonArgs gen_args, pre_args, eval_args, feat_args, probe_args, abl_args;
    bool dump_panoramas = false, manifest = false;
    std::string world_path, holdout_path, ckpt_path, features_path, task, resume;
    int jobs = 1;

    auto* gen = app.add_subcommand("gen-world", "generate a deterministic world");
    add_common(gen, gen_args);
    gen->add_flag("--dump-panoramas", dump_panoramas, "write per-node panorama PNGs");
    gen->add_flag("--manifest", manifest, "write the per-pose JSONL manifest");

    auto* pre = app.add_subcommand("pretrain", "train the encoder on the auxiliary tasks");
    add_common(pre, pre_args);
    pre->add_option("--world", world_path, "world JSON produced by gen-world")->required();
    pre->add_option("--resume", resume, "resume from a checkpoint");

    auto* ev = app.add_subcommand("eval-aux", "auxiliary-task accuracies of a checkpoint");
    add_common(ev, eval_args);
    ev->add_option("--checkpoint", ckpt_path)->required();
    ev->add_option("--world", world_path)->required();
    ev->add_option("--holdout-world", holdout_path);

    auto* ex = app.add_subcommand("export-features", "encode every view with a frozen checkpoint");
    add_common(ex, feat_args);
    ex->add_option("--checkpoint", ckpt_path)->required();
    ex->add_option("--world", world_path)->required();

    auto* pr = app.add_subcommand("probe", "linear probe on exported features");
    add_common(pr, probe_args);
    pr->add_option("--features", features_path)->required();
    pr->add_option("--world", world_path)->required();
    pr->add_option("--task", task, "relative_pose|object_presence|scene_id|traversable_count")->required();

    auto* ab = app.add_subcommand("ablate", "train every task subset and probe each encoder");
    add_common(ab, abl_args);
    ab->add_option("--jobs", jobs, "parallel rows (default 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return cmd_gen_world(gen_args, dump_panoramas, manifest);
        if (pre->parsed()) return cmd_pretrain(pre_args, world_path, resume);
        if (ev->parsed()) return cmd_eval_aux(eval_args, ckpt_path, world_path, holdout_path);
        if (ex->parsed()) return cmd_export_features(feat_args, ckpt_path, world_path);
        if (pr->parsed()) return cmd_probe(probe_args, features_path, world_path, task);
        if (ab->parsed()) return cmd_ablate(abl_args, jobs);
    } catch (const sea::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
