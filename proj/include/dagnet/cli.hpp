#pragma once

// Command-line front end: train / eval / ablate / plot / synth / convert.

#include "dagnet/dagnet.hpp"

#include <iostream>

#include "CLI11.hpp"

namespace dagnet {

namespace cli_detail {

struct CommonArgs {
    std::string config_path;
    std::string dataset = "";
    std::string team = "atk";
    std::string variant = "";
    std::string data_path;
    std::string out_dir = "out";
    std::size_t obs = 0;
    std::size_t pred = 0;
    std::string splits;
    long long seed = -1;
    bool sample = false;
};

inline void add_common(CLI::App* cmd, CommonArgs& args, bool needs_data) {
    cmd->add_option("--config", args.config_path, "run configuration file (key value lines)");
    cmd->add_option("--dataset", args.dataset, "dataset kind: sdd|sports|synthetic");
    cmd->add_option("--team", args.team, "sports team: atk|def");
    cmd->add_option("--variant", args.variant, "model variant: vanilla|avrnn|dagnet");
    cmd->add_option("--obs", args.obs, "observation steps");
    cmd->add_option("--pred", args.pred, "prediction steps");
    cmd->add_option("--splits", args.splits, "long-term splits, e.g. 20-10,20-20,20-30");
    cmd->add_option("--seed", args.seed, "run seed");
    cmd->add_flag("--sample", args.sample, "sample displacements instead of taking the decoder mean");
    cmd->add_option("--out", args.out_dir, "output directory");
    auto* data = cmd->add_option("--data", args.data_path, "input data file");
    if (needs_data) data->check(CLI::ExistingFile);
}

inline RunConfig resolve_config(const CommonArgs& args) {
    RunConfig rc;
    if (!args.config_path.empty()) {
        rc = load_run_config(args.config_path);
    } else {
        DatasetKind kind = DatasetKind::Synthetic;
        if (!args.dataset.empty()) {
            RunConfig probe;
            probe.apply("dataset", args.dataset);
            kind = probe.dataset;
        }
        rc = RunConfig::defaults_for(kind);
    }
    if (!args.dataset.empty()) rc.apply("dataset", args.dataset);
    if (!args.variant.empty()) rc.apply("variant", args.variant);
    if (args.obs) rc.t_obs = args.obs;
    if (args.pred) rc.t_pred = args.pred;
    if (args.seed >= 0) rc.seed = static_cast<std::uint64_t>(args.seed);
    return rc;
}

inline std::vector<Scene> load_scenes(const CommonArgs& args, const RunConfig& rc) {
    switch (rc.dataset) {
        case DatasetKind::Synthetic:
            return generate_synthetic(rc.synthetic_config());
        case DatasetKind::Sdd: {
            if (args.data_path.empty()) throw TensorError("sdd dataset needs --data <trajnet file>");
            auto records = load_trajnet(args.data_path);
            const std::size_t stride = rc.sdd_stride ? rc.sdd_stride : rc.t_obs + rc.t_pred;
            auto scenes = assemble_scenes(records, rc.t_obs, rc.t_pred, stride, DatasetKind::Sdd, 2.5);
            if (scenes.empty()) throw TensorError("no usable scenes assembled from " + args.data_path);
            return scenes;
        }
        case DatasetKind::Sports: {
            if (args.data_path.empty()) throw TensorError("sports dataset needs --data <plays file>");
            auto plays = load_plays(args.data_path);
            if (plays.empty()) throw TensorError("no plays in " + args.data_path);
            normalize_plays(plays);
            return plays_to_scenes(plays, team_from_name(args.team));
        }
    }
    throw TensorError("unknown dataset kind");
}

inline DagNet load_model(const std::string& ckpt_path, const std::string& requested_variant,
                         RunConfig& rc) {
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    ModelConfig mc = model_config_from_meta(ckpt.meta);
    if (!requested_variant.empty() && variant_from_name(requested_variant) != mc.variant)
        throw TensorError("checkpoint holds a '" + std::string(variant_name(mc.variant)) +
                          "' model but --variant requested '" + requested_variant + "'");
    if (ckpt.meta.contains("grid_rows")) rc.grid_rows = ckpt.meta.at("grid_rows").get<std::size_t>();
    if (ckpt.meta.contains("grid_cols")) rc.grid_cols = ckpt.meta.at("grid_cols").get<std::size_t>();
    if (ckpt.meta.contains("goal_window")) rc.goal_window = ckpt.meta.at("goal_window").get<std::size_t>();
    if (ckpt.meta.contains("arena_min")) rc.synth_arena_min = ckpt.meta.at("arena_min").get<double>();
    if (ckpt.meta.contains("arena_max")) rc.synth_arena_max = ckpt.meta.at("arena_max").get<double>();
    rc.variant = mc.variant;
    DagNet model(mc);
    restore_parameters(model.params(), ckpt);
    return model;
}

inline void write_eval_record(const std::string& out_dir, const EvalReport& report,
                              const RunConfig& rc, const EvalConfig& ec) {
    std::filesystem::create_directories(out_dir);
    std::ofstream log(out_dir + "/eval_log.jsonl", std::ios::app);
    nlohmann::json rec{{"dataset", dataset_kind_name(rc.dataset)},
                       {"variant", variant_name(rc.variant)},
                       {"t_obs", ec.t_obs},
                       {"t_pred", ec.t_pred},
                       {"ade", report.ade},
                       {"fde", report.fde},
                       {"units", report.units},
                       {"n_scenes", report.n_scenes},
                       {"n_agents", report.n_agents}};
    nlohmann::json split_rows = nlohmann::json::array();
    for (const auto& s : report.splits)
        split_rows.push_back({{"t_obs", s.t_obs},
                              {"t_pred", s.t_pred},
                              {"ade", s.ade},
                              {"fde", s.fde},
                              {"n_scenes", s.n_scenes},
                              {"n_agents", s.n_agents}});
    rec["splits"] = split_rows;
    log << rec.dump() << "\n";
}

} // namespace cli_detail

inline int cli_main(int argc, const char* const* argv) {
    using cli_detail::CommonArgs;
    CLI::App app{"DAG-Net trajectory forecasting"};
    app.require_subcommand(1);

    CommonArgs train_args, eval_args, ablate_args, plot_args, synth_args, convert_args;
    std::string ckpt_path, plot_ckpt;
    std::size_t plot_scene = 0;
    std::string synth_format = "trajnet";

    auto* cmd_train = app.add_subcommand("train", "train a model and save the best checkpoint");
    cli_detail::add_common(cmd_train, train_args, false);

    auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint (ADE/FDE)");
    cli_detail::add_common(cmd_eval, eval_args, false);
    cmd_eval->add_option("--ckpt", ckpt_path, "checkpoint file")->required()->check(CLI::ExistingFile);

    auto* cmd_ablate = app.add_subcommand("ablate", "train and evaluate all three variants");
    cli_detail::add_common(cmd_ablate, ablate_args, false);

    auto* cmd_plot = app.add_subcommand("plot", "render SVG roll-outs");
    cli_detail::add_common(cmd_plot, plot_args, false);
    cmd_plot->add_option("--ckpt", plot_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
    cmd_plot->add_option("--scene", plot_scene, "scene index to plot");

    auto* cmd_synth = app.add_subcommand("synth", "generate synthetic trajectory data");
    cli_detail::add_common(cmd_synth, synth_args, false);
    cmd_synth->add_option("--format", synth_format, "output format: trajnet|plays");

    auto* cmd_convert = app.add_subcommand("convert", "convert SportVU JSON exports to play lines");
    cli_detail::add_common(cmd_convert, convert_args, true);

    try {
        app.parse(argc, argv);

        if (cmd_train->parsed()) {
            RunConfig rc = cli_detail::resolve_config(train_args);
            auto scenes = cli_detail::load_scenes(train_args, rc);
            SceneSplits splits = split_scenes(std::move(scenes), rc.seed, rc.train_fraction,
                                              rc.val_fraction);
            TrainResult result = train(rc, splits.train, splits.val, train_args.out_dir);
            std::cout << "trained " << result.curve.size() << " epochs on " << splits.train.size()
                      << " scenes (val " << splits.val.size() << ")\n"
                      << "best val loss " << result.best_val_loss << "\n"
                      << "checkpoint: " << result.checkpoint_path << "\n"
                      << "log: " << result.log_path << "\n";
            return 0;
        }

        if (cmd_eval->parsed()) {
            RunConfig rc = cli_detail::resolve_config(eval_args);
            DagNet model = cli_detail::load_model(ckpt_path, eval_args.variant, rc);
            auto scenes = cli_detail::load_scenes(eval_args, rc);
            EvalConfig ec;
            ec.t_obs = eval_args.obs ? eval_args.obs : rc.t_obs;
            ec.t_pred = eval_args.pred ? eval_args.pred : rc.t_pred;
            ec.variant = rc.variant;
            ec.seed = rc.seed;
            ec.sample_displacement = eval_args.sample;
            if (!eval_args.splits.empty()) ec.splits = parse_splits(eval_args.splits);
            EvalReport report = evaluate(model, scenes, rc, ec);
            std::cout << report.to_text();
            cli_detail::write_eval_record(eval_args.out_dir, report, rc, ec);
            return 0;
        }

        if (cmd_ablate->parsed()) {
            RunConfig rc = cli_detail::resolve_config(ablate_args);
            auto scenes = cli_detail::load_scenes(ablate_args, rc);
            SceneSplits splits = split_scenes(std::move(scenes), rc.seed, rc.train_fraction,
                                              rc.val_fraction);
            EvalConfig ec;
            ec.t_obs = ablate_args.obs ? ablate_args.obs : rc.t_obs;
            ec.t_pred = ablate_args.pred ? ablate_args.pred : rc.t_pred;
            ec.seed = rc.seed;
            ec.sample_displacement = ablate_args.sample;
            AblationTable table = run_ablation(rc, splits.train, splits.val, splits.test,
                                               ablate_args.out_dir, ec);
            const std::string text = table.to_tsv();
            std::cout << text;
            std::filesystem::create_directories(ablate_args.out_dir);
            std::ofstream out(ablate_args.out_dir + "/ablation.tsv");
            out << text;
            return 0;
        }

        if (cmd_plot->parsed()) {
            RunConfig rc = cli_detail::resolve_config(plot_args);
            DagNet model = cli_detail::load_model(plot_ckpt, plot_args.variant, rc);
            auto scenes = cli_detail::load_scenes(plot_args, rc);
            if (plot_scene >= scenes.size())
                throw TensorError("scene index " + std::to_string(plot_scene) + " out of range (" +
                                  std::to_string(scenes.size()) + " scenes)");
            const Scene& scene = scenes[plot_scene];
            const std::size_t t_obs = plot_args.obs ? plot_args.obs : rc.t_obs;
            const std::size_t t_pred = plot_args.pred ? plot_args.pred : rc.t_pred;
            SceneGrid grid = grid_for_scene(scene, rc);
            RolloutOptions opts;
            opts.sample_displacement = plot_args.sample;
            opts.seed = rc.seed;
            RolloutResult pred = model.rollout(scene, grid, t_obs, t_pred, opts);
            std::filesystem::create_directories(plot_args.out_dir);
            const std::string path =
                plot_args.out_dir + "/rollout_" + std::to_string(plot_scene) + ".svg";
            plot_rollout(scene, pred, t_obs, path, &grid);
            std::cout << "wrote " << path << "\n";
            return 0;
        }

        if (cmd_synth->parsed()) {
            RunConfig rc = cli_detail::resolve_config(synth_args);
            std::filesystem::create_directories(synth_args.out_dir);
            if (synth_format == "plays") {
                // synthetic plays: 10 agents, 50 steps, both teams drawn from
                // one generator pass on the court extent
                SyntheticConfig sc = rc.synthetic_config();
                sc.n_agents = kPlayersPerPlay;
                sc.n_steps = kPlaySteps;
                sc.arena_min = 2.0;
                sc.arena_max = 48.0; // inside the 94x50 court's short side
                auto scenes = generate_synthetic(sc);
                std::vector<PlayRecord> plays;
                for (std::size_t i = 0; i < scenes.size(); ++i) {
                    PlayRecord play = PlayRecord::empty(static_cast<long long>(i));
                    for (std::size_t t = 0; t < kPlaySteps; ++t)
                        for (std::size_t p = 0; p < kPlayersPerPlay; ++p) {
                            Vec2 v = scenes[i].position(p, t);
                            play.set_player(t, p, {v.x + 23.0, v.y + 1.0});
                        }
                    plays.push_back(std::move(play));
                }
                const std::string path = synth_args.out_dir + "/synthetic_plays.txt";
                save_plays(path, plays);
                std::cout << "wrote " << plays.size() << " plays to " << path << "\n";
            } else if (synth_format == "trajnet") {
                auto scenes = generate_synthetic(rc.synthetic_config());
                const std::string path = synth_args.out_dir + "/synthetic_trajnet.txt";
                save_trajnet(path, scenes_to_trajnet(scenes));
                std::cout << "wrote " << scenes.size() << " scenes to " << path << "\n";
            } else {
                throw TensorError("unknown synth format: " + synth_format);
            }
            return 0;
        }

        if (cmd_convert->parsed()) {
            auto plays = convert_sportvu_file(convert_args.data_path);
            if (plays.empty()) throw TensorError("no complete 50-step plays in " + convert_args.data_path);
            std::filesystem::create_directories(convert_args.out_dir);
            const std::string path = convert_args.out_dir + "/plays.txt";
            save_plays(path, plays);
            std::cout << "wrote " << plays.size() << " plays to " << path << "\n";
            return 0;
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

} // namespace dagnet
