#pragma once

// Training loop, evaluation protocol (single roll-out per scene, plain
// ADE/FDE averages), long-term split evaluation and the ablation runner.

#include "dagnet/config.hpp"
#include "dagnet/data.hpp"
#include "dagnet/metrics.hpp"
#include "dagnet/model.hpp"

#include <filesystem>
#include <functional>

namespace dagnet {

inline SceneGrid grid_for_scene(const Scene& scene, std::size_t rows, std::size_t cols,
                                double arena_min = 0.0, double arena_max = 10.0) {
    switch (scene.kind) {
        case DatasetKind::Sdd:
            // urban scenes get a grid over their own bounding box
            return SceneGrid::fit(scene.all_present_points(), rows, cols);
        case DatasetKind::Sports:
            // court-aligned grid over the normalized 94x50 ft extent
            return SceneGrid(-kCourtLengthFt / 2.0, -kCourtWidthFt / 2.0, kCourtLengthFt / 2.0,
                             kCourtWidthFt / 2.0, rows, cols);
        case DatasetKind::Synthetic:
            return SceneGrid(arena_min, arena_min, arena_max, arena_max, rows, cols);
    }
    throw TensorError("grid_for_scene: unknown dataset kind");
}

inline SceneGrid grid_for_scene(const Scene& scene, const RunConfig& rc) {
    return grid_for_scene(scene, rc.grid_rows, rc.grid_cols, rc.synth_arena_min, rc.synth_arena_max);
}

// ---- evaluation ----

// Aggregates ADE/FDE over scenes with the predictor injected, so the metric
// plumbing can be exercised with a perfect oracle. The global average pools
// every valid (agent, step) pair across scenes.
inline EvalReport evaluate_with(
    const std::function<RolloutResult(const Scene&, std::size_t, std::size_t, std::size_t)>& predict,
    const std::vector<Scene>& scenes, std::size_t t_obs, std::size_t t_pred, const std::string& units) {
    EvalReport report;
    report.units = units;
    double dist_sum = 0.0, final_sum = 0.0;
    std::size_t dist_count = 0, final_count = 0;
    std::size_t scene_idx = 0;
    for (const auto& scene : scenes) {
        ++scene_idx;
        if (scene.n_steps < t_obs + t_pred) continue;
        RolloutResult pred = predict(scene, t_obs, t_pred, scene_idx - 1);
        if (pred.t_pred != t_pred || pred.n_agents != scene.n_agents)
            throw TensorError("evaluate: predictor returned wrong shape");
        bool counted_agent = false;
        for (std::size_t a = 0; a < scene.n_agents; ++a) {
            if (!pred.tracked.empty() && !pred.tracked[a]) continue;
            bool any = false;
            for (std::size_t k = 0; k < t_pred; ++k) {
                if (!scene.present(a, t_obs + k)) continue;
                const Vec2 truth = scene.position(a, t_obs + k);
                const Vec2 p = pred.position(a, k);
                const double d = std::hypot(p.x - truth.x, p.y - truth.y);
                dist_sum += d;
                ++dist_count;
                any = true;
                if (k + 1 == t_pred) {
                    final_sum += d;
                    ++final_count;
                }
            }
            if (any) {
                ++report.n_agents;
                counted_agent = true;
            }
        }
        if (counted_agent) ++report.n_scenes;
    }
    if (dist_count == 0) throw TensorError("evaluate: no valid (agent, step) pairs in any scene");
    if (final_count == 0) throw TensorError("evaluate: no valid final entries in any scene");
    report.ade = dist_sum / static_cast<double>(dist_count);
    report.fde = final_sum / static_cast<double>(final_count);
    return report;
}

// Evaluation draws the latent through the generative path (seeded per
// scene, so reports are reproducible and order-independent) and takes the
// decoder mean unless displacement sampling was requested.
inline RolloutOptions eval_rollout_options(const EvalConfig& ec, std::size_t scene_idx) {
    RolloutOptions opts;
    opts.deterministic = false;
    opts.sample_displacement = ec.sample_displacement;
    opts.seed = ec.seed * 1000003ULL + scene_idx;
    return opts;
}

inline EvalReport evaluate(const DagNet& model, const std::vector<Scene>& scenes, const RunConfig& rc,
                           const EvalConfig& ec) {
    auto predict = [&](const Scene& scene, std::size_t t_obs, std::size_t t_pred, std::size_t idx) {
        return model.rollout(scene, grid_for_scene(scene, rc), t_obs, t_pred,
                             eval_rollout_options(ec, idx));
    };
    const std::string units = scenes.empty() ? "meters" : dataset_units(scenes.front().kind);
    EvalReport report = evaluate_with(predict, scenes, ec.t_obs, ec.t_pred, units);
    for (const auto& [obs, pred_len] : ec.splits) {
        EvalReport sub = evaluate_with(predict, scenes, obs, pred_len, units);
        report.splits.push_back({obs, pred_len, sub.ade, sub.fde, sub.n_scenes, sub.n_agents});
    }
    return report;
}

// ---- training ----

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double nll = 0.0;
    double kl = 0.0;
    double ce = 0.0;
};

struct TrainResult {
    std::vector<EpochLog> curve;
    std::string checkpoint_path;
    std::string log_path;
    double best_val_loss = 0.0;
};

inline nlohmann::json checkpoint_meta(const DagNet& model, const RunConfig& rc) {
    nlohmann::json meta = model.model_meta();
    meta["adjacency_threshold"] = rc.adjacency_threshold;
    meta["mlp_activation"] = rc.mlp_activation;
    meta["grid_rows"] = rc.grid_rows;
    meta["grid_cols"] = rc.grid_cols;
    meta["goal_window"] = rc.goal_window;
    meta["dataset"] = dataset_kind_name(rc.dataset);
    meta["arena_min"] = rc.synth_arena_min;
    meta["arena_max"] = rc.synth_arena_max;
    return meta;
}

inline ModelConfig model_config_from_meta(const nlohmann::json& meta) {
    ModelConfig mc;
    mc.variant = variant_from_name(meta.at("variant").get<std::string>());
    mc.goal_cells = meta.at("goal_cells").get<std::size_t>();
    mc.hidden_dim = meta.at("hidden_dim").get<std::size_t>();
    mc.latent_dim = meta.at("latent_dim").get<std::size_t>();
    mc.input_feature_dim = meta.at("input_feature_dim").get<std::size_t>();
    mc.latent_feature_dim = meta.at("latent_feature_dim").get<std::size_t>();
    mc.head_hidden_dim = meta.at("head_hidden_dim").get<std::size_t>();
    mc.graph_hidden_dim = meta.at("graph_hidden_dim").get<std::size_t>();
    mc.attention_heads = meta.at("attention_heads").get<std::size_t>();
    if (meta.contains("adjacency_threshold")) mc.adjacency_threshold = meta.at("adjacency_threshold").get<double>();
    if (meta.contains("mlp_activation"))
        mc.mlp_activation = activation_from_name(meta.at("mlp_activation").get<std::string>());
    return mc;
}

// Loss of a scene set without gradient recording; used for validation.
inline double dataset_loss(const DagNet& model, const std::vector<Scene>& scenes, const RunConfig& rc,
                           std::uint64_t noise_seed) {
    if (scenes.empty()) return 0.0;
    std::mt19937_64 rng(noise_seed);
    double total = 0.0;
    for (const auto& scene : scenes) {
        Tensor loss = model.training_step(scene, grid_for_scene(scene, rc), rc.goal_window,
                                          rc.ce_weight, rng);
        total += loss.value();
    }
    return total / static_cast<double>(scenes.size());
}

inline TrainResult train(const RunConfig& rc, const std::vector<Scene>& train_scenes,
                         const std::vector<Scene>& val_scenes, const std::string& out_dir,
                         DagNet* model_out = nullptr, std::size_t max_adam_steps = 0) {
    if (train_scenes.empty()) throw TensorError("train: no training scenes");
    std::filesystem::create_directories(out_dir);

    DagNet model(rc.model_config());
    AdamState adam({rc.learning_rate});
    std::mt19937_64 rng(rc.seed);

    TrainResult result;
    result.checkpoint_path = out_dir + "/model.ckpt";
    result.log_path = out_dir + "/train_log.jsonl";
    std::ofstream log(result.log_path);
    if (!log) throw TensorError("train: cannot open log " + result.log_path);

    double best_val = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order(train_scenes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    bool stop = false;
    for (std::size_t epoch = 0; epoch < rc.epochs && !stop; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0, epoch_nll = 0.0, epoch_kl = 0.0, epoch_ce = 0.0;
        std::size_t scene_count = 0;
        for (std::size_t start = 0; start < order.size(); start += rc.batch_size) {
            const std::size_t end = std::min(order.size(), start + rc.batch_size);
            const double inv_batch = 1.0 / static_cast<double>(end - start);
            model.params().zero_grads();
            for (std::size_t i = start; i < end; ++i) {
                const Scene& scene = train_scenes[order[i]];
                Tape tape;
                TrainingMetrics m;
                Tensor loss = model.training_step(scene, grid_for_scene(scene, rc), rc.goal_window,
                                                  rc.ce_weight, rng, &m);
                tape.backward(mul_scalar(loss, inv_batch));
                epoch_loss += m.loss;
                epoch_nll += m.reconstruction_nll;
                epoch_kl += m.kl;
                epoch_ce += m.goal_ce;
                ++scene_count;
            }
            model.params().clip_grad_norm(rc.grad_clip);
            adam.step(model.params());
            if (max_adam_steps && adam.step_count() >= max_adam_steps) {
                stop = true;
                break;
            }
        }
        const double inv = scene_count ? 1.0 / static_cast<double>(scene_count) : 0.0;
        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = epoch_loss * inv;
        entry.nll = epoch_nll * inv;
        entry.kl = epoch_kl * inv;
        entry.ce = epoch_ce * inv;
        entry.val_loss = val_scenes.empty()
                             ? entry.train_loss
                             : dataset_loss(model, val_scenes, rc, rc.seed ^ 0x9e3779b97f4a7c15ULL);
        if (!std::isfinite(entry.train_loss) || !std::isfinite(entry.val_loss))
            throw TensorError("train: non-finite loss at epoch " + std::to_string(epoch));
        result.curve.push_back(entry);
        log << nlohmann::json({{"epoch", entry.epoch},
                               {"train_loss", entry.train_loss},
                               {"val_loss", entry.val_loss},
                               {"nll", entry.nll},
                               {"kl", entry.kl},
                               {"ce", entry.ce}})
                   .dump()
            << "\n";
        if (entry.val_loss < best_val) {
            best_val = entry.val_loss;
            save_checkpoint(model.params(), result.checkpoint_path, checkpoint_meta(model, rc));
        }
    }
    result.best_val_loss = best_val;
    // keep the final state available too (and guarantee a checkpoint exists)
    if (!std::filesystem::exists(result.checkpoint_path))
        save_checkpoint(model.params(), result.checkpoint_path, checkpoint_meta(model, rc));
    if (model_out) {
        Checkpoint best = load_checkpoint(result.checkpoint_path);
        restore_parameters(model_out->params(), best);
    }
    return result;
}

// ---- ablation runner ----

struct AblationRow {
    ModelVariant variant;
    bool agents_interactions = false;
    bool future_objectives = false;
    EvalReport report;
};

struct AblationTable {
    std::vector<AblationRow> rows;

    // delimiter-separated text mirroring the ablation layout:
    // variant, agents-interactions flag, future-objectives flag, ADE, FDE
    std::string to_tsv() const {
        std::ostringstream os;
        os << "model\tagents_interact\tfuture_object\tade\tfde\tn_scenes\tn_agents\n";
        os << std::fixed << std::setprecision(4);
        for (const auto& r : rows)
            os << variant_name(r.variant) << "\t" << (r.agents_interactions ? "yes" : "no") << "\t"
               << (r.future_objectives ? "yes" : "no") << "\t" << r.report.ade << "\t" << r.report.fde
               << "\t" << r.report.n_scenes << "\t" << r.report.n_agents << "\n";
        return os.str();
    }
};

// Trains and evaluates all three variants under identical seeds and data.
inline AblationTable run_ablation(const RunConfig& base, const std::vector<Scene>& train_scenes,
                                  const std::vector<Scene>& val_scenes,
                                  const std::vector<Scene>& test_scenes, const std::string& out_dir,
                                  const EvalConfig& ec_base) {
    AblationTable table;
    for (ModelVariant variant :
         {ModelVariant::VanillaVrnn, ModelVariant::AttentiveVrnn, ModelVariant::DagNet}) {
        RunConfig rc = base;
        rc.variant = variant;
        DagNet model(rc.model_config());
        train(rc, train_scenes, val_scenes, out_dir + "/" + variant_name(variant), &model);
        EvalConfig ec = ec_base;
        ec.variant = variant;
        AblationRow row;
        row.variant = variant;
        row.agents_interactions = variant != ModelVariant::VanillaVrnn;
        row.future_objectives = variant == ModelVariant::DagNet;
        row.report = evaluate(model, test_scenes, rc, ec);
        table.rows.push_back(std::move(row));
    }
    return table;
}

} // namespace dagnet
