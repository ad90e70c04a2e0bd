#include "sea/runconfig.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "sea/errors.hpp"

namespace sea {

namespace {

using json = nlohmann::json;

struct Field {
    std::function<void(RunConfig&, const json&)> set;
    std::function<json(const RunConfig&)> get;
};

template <class T, class M>
Field field(M RunConfig::* group, T std::remove_reference_t<M>::* member) {
    return Field{
        [group, member](RunConfig& cfg, const json& v) {
            try {
                (cfg.*group).*member = v.get<T>();
            } catch (const json::exception&) {
                throw ValidationError("config: wrong value type");
            }
        },
        [group, member](const RunConfig& cfg) { return json((cfg.*group).*member); },
    };
}

const std::map<std::string, Field>& field_table() {
    static const std::map<std::string, Field> table = {
        {"world.rows", field(&RunConfig::world, &WorldConfig::rows)},
        {"world.cols", field(&RunConfig::world, &WorldConfig::cols)},
        {"world.node_spacing", field(&RunConfig::world, &WorldConfig::node_spacing)},
        {"world.rooms", field(&RunConfig::world, &WorldConfig::rooms)},
        {"world.objects", field(&RunConfig::world, &WorldConfig::objects)},
        {"world.panorama_height_px", field(&RunConfig::world, &WorldConfig::panorama_height_px)},
        {"world.view_px", field(&RunConfig::world, &WorldConfig::view_px)},
        {"world.hfov_deg", field(&RunConfig::world, &WorldConfig::hfov_deg)},
        {"world.vfov_deg", field(&RunConfig::world, &WorldConfig::vfov_deg)},
        {"world.seed", field(&RunConfig::world, &WorldConfig::seed)},
        {"train.batch_size", field(&RunConfig::train, &TrainConfig::batch_size)},
        {"train.iterations", field(&RunConfig::train, &TrainConfig::iterations)},
        {"train.lambda_jig", field(&RunConfig::train, &TrainConfig::lambda_jig)},
        {"train.lambda_trav", field(&RunConfig::train, &TrainConfig::lambda_trav)},
        {"train.lambda_ins", field(&RunConfig::train, &TrainConfig::lambda_ins)},
        {"train.ema_m", field(&RunConfig::train, &TrainConfig::ema_m)},
        {"train.tau", field(&RunConfig::train, &TrainConfig::tau)},
        {"train.lr0", field(&RunConfig::train, &TrainConfig::lr0)},
        {"train.sgd_momentum", field(&RunConfig::train, &TrainConfig::sgd_momentum)},
        {"train.nesterov", field(&RunConfig::train, &TrainConfig::nesterov)},
        {"train.weight_decay", field(&RunConfig::train, &TrainConfig::weight_decay)},
        {"train.bank_K", field(&RunConfig::train, &TrainConfig::bank_capacity)},
        {"train.seed", field(&RunConfig::train, &TrainConfig::seed)},
        {"train.eval_every", field(&RunConfig::train, &TrainConfig::eval_every)},
        {"train.holdout_fraction", field(&RunConfig::train, &TrainConfig::holdout_fraction)},
        {"train.holdout_mode", field(&RunConfig::train, &TrainConfig::holdout_mode)},
        {"train.train_worlds", field(&RunConfig::train, &TrainConfig::train_worlds)},
        {"train.eval_cases", field(&RunConfig::train, &TrainConfig::eval_cases)},
        {"model.enc_hidden1", field(&RunConfig::model, &nn::ModelConfig::enc_hidden1)},
        {"model.enc_hidden2", field(&RunConfig::model, &nn::ModelConfig::enc_hidden2)},
        {"model.enc_hidden3", field(&RunConfig::model, &nn::ModelConfig::enc_hidden3)},
        {"model.feature_dim", field(&RunConfig::model, &nn::ModelConfig::feature_dim)},
        {"model.jig_hidden", field(&RunConfig::model, &nn::ModelConfig::jig_hidden)},
        {"model.trav_hidden", field(&RunConfig::model, &nn::ModelConfig::trav_hidden)},
        {"model.ins_hidden", field(&RunConfig::model, &nn::ModelConfig::ins_hidden)},
        {"model.ins_proj_dim", field(&RunConfig::model, &nn::ModelConfig::ins_proj_dim)},
        {"model.jig_linear_bypass", field(&RunConfig::model, &nn::ModelConfig::jig_linear_bypass)},
        {"model.enc_linear_skip", field(&RunConfig::model, &nn::ModelConfig::enc_linear_skip)},
        {"aug.crop_scale_min", field(&RunConfig::aug, &AugmentConfig::crop_scale_min)},
        {"aug.crop_scale_max", field(&RunConfig::aug, &AugmentConfig::crop_scale_max)},
        {"aug.aspect_jitter", field(&RunConfig::aug, &AugmentConfig::aspect_jitter)},
        {"aug.affine_max_deg", field(&RunConfig::aug, &AugmentConfig::affine_max_deg)},
        {"aug.color_jitter_strength", field(&RunConfig::aug, &AugmentConfig::color_jitter_strength)},
        {"aug.grayscale_prob", field(&RunConfig::aug, &AugmentConfig::grayscale_prob)},
        {"aug.blur_prob", field(&RunConfig::aug, &AugmentConfig::blur_prob)},
        {"probe.iterations", field(&RunConfig::probe, &ProbeConfig::iterations)},
        {"probe.batch_size", field(&RunConfig::probe, &ProbeConfig::batch_size)},
        {"probe.lr0", field(&RunConfig::probe, &ProbeConfig::lr0)},
        {"probe.sgd_momentum", field(&RunConfig::probe, &ProbeConfig::sgd_momentum)},
        {"probe.weight_decay", field(&RunConfig::probe, &ProbeConfig::weight_decay)},
        {"probe.nesterov", field(&RunConfig::probe, &ProbeConfig::nesterov)},
        {"probe.train_fraction", field(&RunConfig::probe, &ProbeConfig::train_fraction)},
        {"probe.split_seed", field(&RunConfig::probe, &ProbeConfig::split_seed)},
    };
    return table;
}

void apply_key(RunConfig& cfg, const std::string& key, const json& value) {
    const auto& table = field_table();
    const auto it = table.find(key);
    if (it == table.end()) throw ValidationError("config: unknown key \"" + key + "\"");
    try {
        it->second.set(cfg, value);
    } catch (const ValidationError&) {
        throw ValidationError("config: wrong value type for key \"" + key + "\"");
    }
}

json parse_override_value(const std::string& text) {
    // try JSON literal first (numbers, booleans), else treat as string
    json v = json::parse(text, nullptr, false);
    if (!v.is_discarded() && !v.is_object() && !v.is_array()) return v;
    return json(text);
}

}  // namespace

RunConfig parse_run_config(const std::string& file_path, const std::vector<std::string>& overrides) {
    RunConfig cfg;

    if (const char* env = std::getenv("SEA_SEED")) {
        try {
            const std::uint64_t seed = std::stoull(env);
            cfg.world.seed = seed;
            cfg.train.seed = seed;
        } catch (const std::exception&) {
            throw ValidationError("SEA_SEED is not a valid integer");
        }
    }

    if (!file_path.empty()) {
        std::ifstream in(file_path);
        if (!in) throw ValidationError("cannot open config file: " + file_path);
        json doc;
        try {
            in >> doc;
        } catch (const json::exception& e) {
            throw ValidationError(std::string("config: malformed JSON: ") + e.what());
        }
        if (!doc.is_object()) throw ValidationError("config: top level must be an object of dotted keys");
        for (const auto& [key, value] : doc.items()) apply_key(cfg, key, value);
    }

    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ValidationError("override must look like key=value, got \"" + kv + "\"");
        apply_key(cfg, kv.substr(0, eq), parse_override_value(kv.substr(eq + 1)));
    }

    // derived and validated before any work starts
    cfg.model.input_dim = cfg.world.view_px * cfg.world.view_px * 3;
    validate(cfg.world);
    validate(cfg.train);
    if (!(cfg.aug.crop_scale_min >= 0.0 && cfg.aug.crop_scale_min <= cfg.aug.crop_scale_max &&
          cfg.aug.crop_scale_max <= 1.0))
        throw ValidationError("config: crop scale range must satisfy 0 <= min <= max <= 1");
    if (cfg.probe.iterations < 1) throw ValidationError("config: probe.iterations must be >= 1");
    if (!(cfg.probe.train_fraction > 0.0 && cfg.probe.train_fraction < 1.0))
        throw ValidationError("config: probe.train_fraction must be in (0, 1)");
    return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
    json out;  // std::map ordering -> sorted keys, deterministic bytes
    for (const auto& [key, f] : field_table()) out[key] = f.get(cfg);
    return out.dump(2) + "\n";
}

void write_config_snapshot(const RunConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir + "/config.json", std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write config snapshot in " + out_dir);
    out << run_config_to_json(cfg);
}

}  // namespace sea
