#pragma once

// Run configuration: every knob of the training and evaluation pipeline,
// loadable from a "key value" text file (one pair per line, '#' comments).
// CLI flags override file values; file values override the per-setting
// defaults.

#include "dagnet/data.hpp"
#include "dagnet/model.hpp"
#include "dagnet/scene.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace dagnet {

struct RunConfig {
    DatasetKind dataset = DatasetKind::Synthetic;
    ModelVariant variant = ModelVariant::DagNet;
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;   // counted in scenes
    std::size_t epochs = 300;
    double ce_weight = 1e-2;
    double grad_clip = 10.0;
    std::size_t grid_rows = 10;
    std::size_t grid_cols = 10;
    std::size_t goal_window = 10;
    double adjacency_threshold = 5.0;
    std::size_t graph_hidden = 8;
    std::size_t t_obs = 10;
    std::size_t t_pred = 40;
    std::uint64_t seed = 1;
    std::string mlp_activation = "relu";

    // dataset-specific ingestion knobs
    std::size_t sdd_stride = 0;          // 0 = non-overlapping (stride = t_obs + t_pred)
    double train_fraction = 0.7;
    double val_fraction = 0.1;

    // synthetic generator
    std::size_t synth_scenes = 24;
    std::size_t synth_agents = 5;
    std::size_t synth_steps = 20;
    double synth_coordination = 1.0;
    double synth_noise = 0.05;
    double synth_arena_min = 0.0;
    double synth_arena_max = 10.0;

    // per-setting defaults from the model's reference hyperparameters
    static RunConfig defaults_for(DatasetKind kind) {
        RunConfig cfg;
        cfg.dataset = kind;
        switch (kind) {
            case DatasetKind::Sdd:
                cfg.learning_rate = 1e-4;
                cfg.batch_size = 16;
                cfg.epochs = 500;
                cfg.graph_hidden = 4;
                cfg.grid_rows = 10;
                cfg.grid_cols = 10;
                cfg.goal_window = 4;
                cfg.adjacency_threshold = 3.0;
                cfg.t_obs = 8;
                cfg.t_pred = 12;
                break;
            case DatasetKind::Sports:
                cfg.learning_rate = 1e-3;
                cfg.batch_size = 64;
                cfg.epochs = 300;
                cfg.graph_hidden = 8;
                cfg.grid_rows = 5;  // court-aligned 10x5 grid: 10 columns along the court length
                cfg.grid_cols = 10;
                cfg.goal_window = 10;
                cfg.adjacency_threshold = 5.0;
                cfg.t_obs = 10;
                cfg.t_pred = 40;
                break;
            case DatasetKind::Synthetic:
                cfg.learning_rate = 1e-3;
                cfg.batch_size = 8;
                cfg.epochs = 50;
                cfg.graph_hidden = 4;
                cfg.grid_rows = 5;
                cfg.grid_cols = 5;
                cfg.goal_window = 5;
                cfg.adjacency_threshold = 3.0;
                cfg.t_obs = 8;
                cfg.t_pred = 12;
                break;
        }
        return cfg;
    }

    ModelConfig model_config() const {
        ModelConfig mc;
        mc.variant = variant;
        mc.goal_cells = grid_rows * grid_cols;
        mc.graph_hidden_dim = graph_hidden;
        mc.adjacency_threshold = adjacency_threshold;
        mc.mlp_activation = activation_from_name(mlp_activation);
        mc.init_seed = seed;
        return mc;
    }

    SyntheticConfig synthetic_config() const {
        SyntheticConfig sc;
        sc.seed = seed;
        sc.n_scenes = synth_scenes;
        sc.n_agents = synth_agents;
        sc.n_steps = synth_steps;
        sc.coordination = synth_coordination;
        sc.noise_level = synth_noise;
        sc.arena_min = synth_arena_min;
        sc.arena_max = synth_arena_max;
        sc.grid_rows = grid_rows;
        sc.grid_cols = grid_cols;
        return sc;
    }

    void apply(const std::string& key, const std::string& value);
};

namespace detail {

template <typename T>
T parse_value(const std::string& key, const std::string& value) {
    std::istringstream ss(value);
    T out;
    if (!(ss >> out)) throw TensorError("config: bad value for " + key + ": \"" + value + "\"");
    std::string extra;
    if (ss >> extra) throw TensorError("config: trailing data for " + key + ": \"" + value + "\"");
    return out;
}

} // namespace detail

inline void RunConfig::apply(const std::string& key, const std::string& value) {
    if (key == "dataset") {
        if (value == "sdd") dataset = DatasetKind::Sdd;
        else if (value == "sports") dataset = DatasetKind::Sports;
        else if (value == "synthetic") dataset = DatasetKind::Synthetic;
        else throw TensorError("config: unknown dataset \"" + value + "\"");
    } else if (key == "variant") variant = variant_from_name(value);
    else if (key == "learning_rate") learning_rate = detail::parse_value<double>(key, value);
    else if (key == "batch_size") batch_size = detail::parse_value<std::size_t>(key, value);
    else if (key == "epochs") epochs = detail::parse_value<std::size_t>(key, value);
    else if (key == "ce_weight") ce_weight = detail::parse_value<double>(key, value);
    else if (key == "grad_clip") grad_clip = detail::parse_value<double>(key, value);
    else if (key == "grid_rows") grid_rows = detail::parse_value<std::size_t>(key, value);
    else if (key == "grid_cols") grid_cols = detail::parse_value<std::size_t>(key, value);
    else if (key == "goal_window") goal_window = detail::parse_value<std::size_t>(key, value);
    else if (key == "adjacency_threshold") adjacency_threshold = detail::parse_value<double>(key, value);
    else if (key == "graph_hidden") graph_hidden = detail::parse_value<std::size_t>(key, value);
    else if (key == "t_obs") t_obs = detail::parse_value<std::size_t>(key, value);
    else if (key == "t_pred") t_pred = detail::parse_value<std::size_t>(key, value);
    else if (key == "seed") seed = detail::parse_value<std::uint64_t>(key, value);
    else if (key == "mlp_activation") mlp_activation = value;
    else if (key == "sdd_stride") sdd_stride = detail::parse_value<std::size_t>(key, value);
    else if (key == "train_fraction") train_fraction = detail::parse_value<double>(key, value);
    else if (key == "val_fraction") val_fraction = detail::parse_value<double>(key, value);
    else if (key == "synth_scenes") synth_scenes = detail::parse_value<std::size_t>(key, value);
    else if (key == "synth_agents") synth_agents = detail::parse_value<std::size_t>(key, value);
    else if (key == "synth_steps") synth_steps = detail::parse_value<std::size_t>(key, value);
    else if (key == "synth_coordination") synth_coordination = detail::parse_value<double>(key, value);
    else if (key == "synth_noise") synth_noise = detail::parse_value<double>(key, value);
    else if (key == "synth_arena_min") synth_arena_min = detail::parse_value<double>(key, value);
    else if (key == "synth_arena_max") synth_arena_max = detail::parse_value<double>(key, value);
    else throw TensorError("config: unknown key \"" + key + "\"");
}

// file syntax: "key value" per line; blank lines and '#' comments allowed.
// The dataset key, when present, is applied first so later keys override
// that dataset's defaults.
inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TensorError("load_run_config: cannot open " + path);
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string key, value;
        if (!(ls >> key)) continue;
        if (!(ls >> value))
            throw TensorError(path + ":" + std::to_string(line_no) + ": key \"" + key + "\" has no value");
        std::string extra;
        if (ls >> extra)
            throw TensorError(path + ":" + std::to_string(line_no) + ": trailing data \"" + extra + "\"");
        pairs.emplace_back(key, value);
    }
    RunConfig cfg;
    for (const auto& [k, v] : pairs)
        if (k == "dataset") {
            cfg.apply(k, v);
            cfg = RunConfig::defaults_for(cfg.dataset);
        }
    for (const auto& [k, v] : pairs) cfg.apply(k, v);
    return cfg;
}

struct EvalConfig {
    std::size_t t_obs = 8;
    std::size_t t_pred = 12;
    std::vector<std::pair<std::size_t, std::size_t>> splits; // long-term (t_obs, t_pred) pairs
    ModelVariant variant = ModelVariant::DagNet;
    std::uint64_t seed = 1;
    bool sample_displacement = false;
};

// parses "a-b,c-d,..." split lists
inline std::vector<std::pair<std::size_t, std::size_t>> parse_splits(const std::string& text) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto dash = item.find('-');
        if (dash == std::string::npos)
            throw TensorError("parse_splits: expected obs-pred pair, got \"" + item + "\"");
        out.emplace_back(detail::parse_value<std::size_t>("splits", item.substr(0, dash)),
                         detail::parse_value<std::size_t>("splits", item.substr(dash + 1)));
    }
    if (out.empty()) throw TensorError("parse_splits: empty split list");
    return out;
}

} // namespace dagnet
