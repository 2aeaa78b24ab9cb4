#pragma once

// The DAG-Net model: goal-conditioned prior/encoder/decoder around a GRU,
// a goal proposal network, and the two attentive graph refinement stages.
// Ablation variants: VanillaVrnn (no goals, no refiners), AttentiveVrnn
// (hidden-state refiner only), DagNet (everything).

#include "dagnet/gaussian.hpp"
#include "dagnet/graph.hpp"
#include "dagnet/nn.hpp"
#include "dagnet/scene.hpp"

#include <optional>

namespace dagnet {

enum class ModelVariant { VanillaVrnn, AttentiveVrnn, DagNet };

inline const char* variant_name(ModelVariant v) {
    switch (v) {
        case ModelVariant::VanillaVrnn: return "vanilla";
        case ModelVariant::AttentiveVrnn: return "avrnn";
        case ModelVariant::DagNet: return "dagnet";
    }
    return "?";
}

inline ModelVariant variant_from_name(const std::string& s) {
    if (s == "vanilla") return ModelVariant::VanillaVrnn;
    if (s == "avrnn") return ModelVariant::AttentiveVrnn;
    if (s == "dagnet") return ModelVariant::DagNet;
    throw TensorError("unknown model variant: " + s + " (expected vanilla|avrnn|dagnet)");
}

struct ModelConfig {
    ModelVariant variant = ModelVariant::DagNet;
    std::size_t goal_cells = 100;        // K
    std::size_t hidden_dim = 64;
    std::size_t latent_dim = 32;
    std::size_t input_feature_dim = 16;  // phi_x output width
    std::size_t latent_feature_dim = 16; // phi_z output width
    std::size_t head_hidden_dim = 64;    // hidden width inside the phi heads
    std::size_t graph_hidden_dim = 4;    // GAT hidden width per head
    std::size_t attention_heads = 4;
    double adjacency_threshold = 3.0;    // world units, hidden-state graph
    bool goal_graph_uses_distance = false; // default: complete graph over present agents
    Activation mlp_activation = Activation::Relu;
    std::uint64_t init_seed = 1;

    bool uses_goals() const { return variant == ModelVariant::DagNet; }
    bool uses_hidden_refiner() const { return variant != ModelVariant::VanillaVrnn; }
};

// constant [n, d] tensor whose row a is all-ones when flags[a] is set
inline Tensor row_mask_tensor(const std::vector<std::uint8_t>& flags, std::size_t d, bool invert = false) {
    Tensor t = Tensor::zeros({flags.size(), d});
    for (std::size_t r = 0; r < flags.size(); ++r) {
        const bool on = invert ? flags[r] == 0 : flags[r] != 0;
        if (on)
            for (std::size_t c = 0; c < d; ++c) t.data()[r * d + c] = 1.0;
    }
    return t;
}

inline Tensor vector_mask_tensor(const std::vector<std::uint8_t>& flags) {
    Tensor t = Tensor::zeros({flags.size()});
    for (std::size_t r = 0; r < flags.size(); ++r) t.data()[r] = flags[r] ? 1.0 : 0.0;
    return t;
}

// Per-agent pooled summary of the other agents' absolute positions:
// [mean_x, mean_y, max_x, max_y] over the present others, zeros when alone.
// The mean accumulates in value-sorted order so the summary is invariant to
// agent relabeling.
inline Tensor scene_disposition(const std::vector<Vec2>& positions,
                                const std::vector<std::uint8_t>& present) {
    const std::size_t n = positions.size();
    Tensor out = Tensor::zeros({n, 4});
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<Vec2> others;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && (present.empty() || present[j])) others.push_back(positions[j]);
        if (others.empty()) continue;
        std::sort(others.begin(), others.end(), [](const Vec2& a, const Vec2& b) {
            if (a.x != b.x) return a.x < b.x;
            return a.y < b.y;
        });
        double sx = 0.0, sy = 0.0, mx = others[0].x, my = others[0].y;
        for (const auto& p : others) {
            sx += p.x;
            sy += p.y;
            mx = std::max(mx, p.x);
            my = std::max(my, p.y);
        }
        const double inv = 1.0 / static_cast<double>(others.size());
        out.data()[i * 4 + 0] = sx * inv;
        out.data()[i * 4 + 1] = sy * inv;
        out.data()[i * 4 + 2] = mx;
        out.data()[i * 4 + 3] = my;
    }
    return out;
}

// Ground-truth goal one-hots for every agent and step. The window anchor
// snaps to the nearest present step at or before it (then after it) so
// partially-present agents still get well-formed one-hots; agents with no
// presence at all get cell 0 and are masked out of the loss by the caller.
inline std::vector<std::vector<std::size_t>> scene_goal_cells(const Scene& scene, const SceneGrid& grid,
                                                              std::size_t window) {
    if (window < 1) throw TensorError("scene_goal_cells: window size must be >= 1");
    const std::size_t T = scene.n_steps;
    std::vector<std::vector<std::size_t>> cells(T, std::vector<std::size_t>(scene.n_agents, 0));
    for (std::size_t a = 0; a < scene.n_agents; ++a) {
        for (std::size_t t = 0; t < T; ++t) {
            std::size_t anchor = std::min((t / window + 1) * window - 1, T - 1);
            if (!scene.present(a, anchor)) {
                std::size_t back = anchor;
                while (back > 0 && !scene.present(a, back)) --back;
                if (scene.present(a, back)) {
                    anchor = back;
                } else {
                    std::size_t fwd = anchor;
                    while (fwd + 1 < T && !scene.present(a, fwd)) ++fwd;
                    anchor = fwd;
                }
            }
            if (scene.present(a, anchor))
                cells[t][a] = position_to_cell(grid, scene.position(a, anchor));
        }
    }
    return cells;
}

struct TrainingMetrics {
    double loss = 0.0;
    double reconstruction_nll = 0.0;
    double kl = 0.0;
    double goal_ce = 0.0;
    std::size_t valid_agent_steps = 0;
};

struct RolloutOptions {
    // The generative path draws the latent from the prior; with the
    // deterministic flag set, every distribution is collapsed to its mean
    // instead (no randomness consumed at all). Displacements are emitted as
    // the decoder mean unless sample_displacement is set.
    bool deterministic = false;
    bool sample_displacement = false;
    std::uint64_t seed = 0;
};

struct RolloutResult {
    std::size_t n_agents = 0;
    std::size_t t_pred = 0;
    std::vector<double> positions; // [n_agents * t_pred * 2], absolute coordinates
    std::vector<std::uint8_t> tracked; // agents that had at least one observed step

    Vec2 position(std::size_t agent, std::size_t step) const {
        return {positions[(agent * t_pred + step) * 2], positions[(agent * t_pred + step) * 2 + 1]};
    }
};

class DagNet {
public:
    explicit DagNet(const ModelConfig& cfg) : cfg_(cfg) {
        if (cfg.goal_cells < 1) throw TensorError("DagNet: goal_cells must be >= 1");
        std::mt19937_64 rng(cfg.init_seed);
        const std::size_t goal_in = cfg.uses_goals() ? cfg.goal_cells : 0;
        phi_x_ = Mlp({2, cfg.input_feature_dim, cfg.input_feature_dim}, cfg.mlp_activation, rng);
        phi_z_ = Mlp({cfg.latent_dim, cfg.latent_feature_dim, cfg.latent_feature_dim},
                     cfg.mlp_activation, rng);
        phi_enc_ = Mlp({cfg.input_feature_dim + cfg.hidden_dim + goal_in, cfg.head_hidden_dim,
                        2 * cfg.latent_dim}, cfg.mlp_activation, rng);
        phi_prior_ = Mlp({cfg.hidden_dim + goal_in, cfg.head_hidden_dim, 2 * cfg.latent_dim},
                         cfg.mlp_activation, rng);
        phi_dec_ = Mlp({cfg.latent_feature_dim + cfg.hidden_dim + goal_in, cfg.head_hidden_dim, 4},
                       cfg.mlp_activation, rng);
        gru_ = GruCell(cfg.input_feature_dim + cfg.latent_feature_dim, cfg.hidden_dim, rng);
        if (cfg.uses_goals()) {
            phi_goal_ = Mlp({cfg.goal_cells + 4 + cfg.hidden_dim, cfg.head_hidden_dim, cfg.goal_cells},
                            cfg.mlp_activation, rng);
            goal_refiner_ = GraphRefiner(cfg.goal_cells, cfg.graph_hidden_dim, cfg.attention_heads, rng);
        }
        if (cfg.uses_hidden_refiner())
            hidden_refiner_ = GraphRefiner(cfg.hidden_dim, cfg.graph_hidden_dim, cfg.attention_heads, rng);

        phi_x_.register_params(params_, "phi_x");
        phi_z_.register_params(params_, "phi_z");
        phi_enc_.register_params(params_, "phi_enc");
        phi_prior_.register_params(params_, "phi_prior");
        phi_dec_.register_params(params_, "phi_dec");
        gru_.register_params(params_, "gru");
        if (cfg.uses_goals()) {
            phi_goal_.register_params(params_, "phi_goal");
            goal_refiner_.register_params(params_, "goal_refiner");
        }
        if (cfg.uses_hidden_refiner())
            hidden_refiner_.register_params(params_, "hidden_refiner");
    }

    const ModelConfig& config() const { return cfg_; }
    ParameterRegistry& params() { return params_; }
    const ParameterRegistry& params() const { return params_; }

    Mlp& phi_x() { return phi_x_; }
    Mlp& phi_goal() { return phi_goal_; }
    GruCell& gru() { return gru_; }
    GraphRefiner& goal_refiner() { return goal_refiner_; }
    GraphRefiner& hidden_refiner() { return hidden_refiner_; }

    // Eq-level building blocks. In VanillaVrnn and AttentiveVrnn modes the
    // goal argument is ignored entirely (it never enters the graph).
    GaussianParams prior_step(const Tensor& h_prev, const Tensor& goal) const {
        Tensor in = cfg_.uses_goals() ? concat({h_prev, goal}, 1) : h_prev;
        return GaussianParams::from_head(mlp_forward(phi_prior_, in));
    }

    GaussianParams encode_step(const Tensor& x, const Tensor& h_prev, const Tensor& goal) const {
        return encode_from_features(mlp_forward(phi_x_, x), h_prev, goal);
    }

    GaussianParams decode_step(const Tensor& z, const Tensor& h_prev, const Tensor& goal) const {
        return decode_from_features(mlp_forward(phi_z_, z), h_prev, goal);
    }

    // softmax head over the K goal cells, Eq-style inputs: previous predicted
    // goal, pooled disposition of the other agents, previous hidden state
    Tensor propose_goal(const Tensor& prev_goal, const Tensor& disposition, const Tensor& h_prev) const {
        if (!cfg_.uses_goals())
            throw TensorError("propose_goal: model variant has no goal network");
        return softmax(mlp_forward(phi_goal_, concat({prev_goal, disposition, h_prev}, 1)), 1);
    }

    nlohmann::json model_meta() const {
        return {{"variant", variant_name(cfg_.variant)},
                {"goal_cells", cfg_.goal_cells},
                {"hidden_dim", cfg_.hidden_dim},
                {"latent_dim", cfg_.latent_dim},
                {"input_feature_dim", cfg_.input_feature_dim},
                {"latent_feature_dim", cfg_.latent_feature_dim},
                {"head_hidden_dim", cfg_.head_hidden_dim},
                {"graph_hidden_dim", cfg_.graph_hidden_dim},
                {"attention_heads", cfg_.attention_heads}};
    }

    // Full-sequence training pass: accumulates -ELBO plus the weighted goal
    // cross-entropy over all T-1 displacement steps and returns the scalar
    // loss (normalized by agent count) ready for backward().
    Tensor training_step(const Scene& scene, const SceneGrid& grid, std::size_t goal_window,
                         double ce_weight, std::mt19937_64& rng,
                         TrainingMetrics* metrics = nullptr) const {
        const std::size_t n = scene.n_agents, T = scene.n_steps;
        if (T < 2) throw TensorError("training_step: scene needs at least 2 steps");
        if (cfg_.uses_goals() && grid.cell_count() != cfg_.goal_cells)
            throw TensorError("training_step: grid has " + std::to_string(grid.cell_count()) +
                              " cells, model expects " + std::to_string(cfg_.goal_cells));

        std::vector<std::vector<std::size_t>> goal_cells;
        if (cfg_.uses_goals()) goal_cells = scene_goal_cells(scene, grid, goal_window);

        Tensor h = Tensor::zeros({n, cfg_.hidden_dim});
        Tensor g_prev = Tensor::full({n, cfg_.goal_cells}, 1.0 / static_cast<double>(cfg_.goal_cells));

        std::normal_distribution<double> normal(0.0, 1.0);
        Tensor total_nll, total_kl, total_ce;
        bool have_total = false;
        std::size_t valid_steps = 0;

        for (std::size_t t = 1; t < T; ++t) {
            std::vector<std::uint8_t> step_valid(n, 0);
            std::vector<std::size_t> active;
            for (std::size_t a = 0; a < n; ++a)
                if (scene.present(a, t - 1) && scene.present(a, t)) {
                    step_valid[a] = 1;
                    active.push_back(a);
                }
            // latent noise is drawn every step so the stream is independent
            // of the presence pattern
            Tensor noise = Tensor::zeros({n, cfg_.latent_dim});
            for (auto& v : noise.data()) v = normal(rng);
            if (active.empty()) continue;
            valid_steps += active.size();

            Tensor step_mask = vector_mask_tensor(step_valid);

            Tensor x_t = Tensor::zeros({n, 2});
            for (std::size_t a : active) {
                const Vec2 prev = scene.position(a, t - 1), cur = scene.position(a, t);
                x_t.data()[a * 2] = cur.x - prev.x;
                x_t.data()[a * 2 + 1] = cur.y - prev.y;
            }

            Tensor cond_goal, ce_t;
            if (cfg_.uses_goals()) {
                const auto prev_present = scene.mask_at(t - 1);
                Tensor disposition = scene_disposition(scene.positions_at(t - 1), prev_present);
                Tensor g_raw = propose_goal(g_prev, disposition, h);
                std::vector<std::size_t> goal_active;
                for (std::size_t a = 0; a < n; ++a)
                    if (prev_present[a]) goal_active.push_back(a);
                Tensor g_hat = refine_goals(g_raw, goal_active, scene.positions_at(t - 1));
                Tensor targets = one_hot_rows(goal_cells[t], cfg_.goal_cells);
                ce_t = sum(mul(cross_entropy_rows(targets, g_hat), step_mask));
                g_prev = g_raw; // Eq-level recurrence feeds the raw proposal
                cond_goal = targets; // teacher forcing during training
            }

            Tensor fx = mlp_forward(phi_x_, x_t);
            GaussianParams posterior = encode_from_features(fx, h, cond_goal);
            GaussianParams prior = prior_step(h, cond_goal);
            Tensor z = sample_reparameterized(posterior, noise);
            Tensor fz = mlp_forward(phi_z_, z);
            GaussianParams dec = decode_from_features(fz, h, cond_goal);

            Tensor nll_t = sum(mul(neg(log_prob_rows(dec, x_t)), step_mask));
            Tensor kl_t = sum(mul(kl_divergence_rows(posterior, prior), step_mask));

            if (!std::isfinite(nll_t.value()) || !std::isfinite(kl_t.value()) ||
                (cfg_.uses_goals() && !std::isfinite(ce_t.value())))
                throw TensorError("training_step: non-finite loss at time-step " + std::to_string(t));

            if (!have_total) {
                total_nll = nll_t;
                total_kl = kl_t;
                if (cfg_.uses_goals()) total_ce = ce_t;
                have_total = true;
            } else {
                total_nll = add(total_nll, nll_t);
                total_kl = add(total_kl, kl_t);
                if (cfg_.uses_goals()) total_ce = add(total_ce, ce_t);
            }

            Tensor h_new = gru_step(gru_, concat({fx, fz}, 1), h);
            if (active.size() == n) {
                h = h_new;
            } else {
                Tensor keep = row_mask_tensor(step_valid, cfg_.hidden_dim, true);
                Tensor take = row_mask_tensor(step_valid, cfg_.hidden_dim, false);
                h = add(mul(h_new, take), mul(h, keep));
            }

            if (cfg_.uses_hidden_refiner()) {
                const auto now_present = scene.mask_at(t);
                std::vector<std::size_t> refine_active;
                for (std::size_t a = 0; a < n; ++a)
                    if (now_present[a]) refine_active.push_back(a);
                h = refine_hidden(h, refine_active, scene.positions_at(t));
            }
        }

        if (!have_total) throw TensorError("training_step: no valid displacement steps in scene");

        Tensor loss = add(total_nll, total_kl);
        if (cfg_.uses_goals()) loss = add(loss, mul_scalar(total_ce, ce_weight));
        loss = mul_scalar(loss, 1.0 / static_cast<double>(n));

        if (metrics) {
            metrics->loss = loss.value();
            metrics->reconstruction_nll = total_nll.value() / static_cast<double>(n);
            metrics->kl = total_kl.value() / static_cast<double>(n);
            metrics->goal_ce = cfg_.uses_goals() ? total_ce.value() / static_cast<double>(n) : 0.0;
            metrics->valid_agent_steps = valid_steps;
        }
        return loss;
    }

    // Observe the first t_obs steps, then generate t_pred future positions.
    RolloutResult rollout(const Scene& scene, const SceneGrid& grid, std::size_t t_obs,
                          std::size_t t_pred, const RolloutOptions& opts) const {
        const std::size_t n = scene.n_agents;
        if (scene.n_steps < t_obs)
            throw TensorError("rollout: scene has " + std::to_string(scene.n_steps) +
                              " steps, observation needs " + std::to_string(t_obs));
        if (t_obs < 1) throw TensorError("rollout: t_obs must be >= 1");
        if (cfg_.uses_goals() && grid.cell_count() != cfg_.goal_cells)
            throw TensorError("rollout: grid has " + std::to_string(grid.cell_count()) +
                              " cells, model expects " + std::to_string(cfg_.goal_cells));

        std::mt19937_64 rng(opts.seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        auto draw_noise = [&](std::size_t rows, std::size_t cols) {
            Tensor t = Tensor::zeros({rows, cols});
            for (auto& v : t.data()) v = normal(rng);
            return t;
        };

        RolloutResult result;
        result.n_agents = n;
        result.t_pred = t_pred;
        result.positions.assign(n * t_pred * 2, 0.0);
        result.tracked.assign(n, 0);

        // anchor each agent at its last observed position
        std::vector<Vec2> cur_pos(n);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t t = 0; t < t_obs; ++t)
                if (scene.present(a, t)) {
                    result.tracked[a] = 1;
                    cur_pos[a] = scene.position(a, t);
                }

        Tensor h = Tensor::zeros({n, cfg_.hidden_dim});
        Tensor g_prev = Tensor::full({n, cfg_.goal_cells}, 1.0 / static_cast<double>(cfg_.goal_cells));

        // burn-in over observed displacements via the encoder
        for (std::size_t t = 1; t < t_obs; ++t) {
            std::vector<std::uint8_t> step_valid(n, 0);
            std::vector<std::size_t> active;
            for (std::size_t a = 0; a < n; ++a)
                if (scene.present(a, t - 1) && scene.present(a, t)) {
                    step_valid[a] = 1;
                    active.push_back(a);
                }
            if (active.empty()) continue;

            Tensor x_t = Tensor::zeros({n, 2});
            for (std::size_t a : active) {
                const Vec2 prev = scene.position(a, t - 1), cur = scene.position(a, t);
                x_t.data()[a * 2] = cur.x - prev.x;
                x_t.data()[a * 2 + 1] = cur.y - prev.y;
            }

            Tensor cond_goal;
            if (cfg_.uses_goals()) {
                const auto prev_present = scene.mask_at(t - 1);
                Tensor disposition = scene_disposition(scene.positions_at(t - 1), prev_present);
                Tensor g_raw = propose_goal(g_prev, disposition, h);
                std::vector<std::size_t> goal_active;
                for (std::size_t a = 0; a < n; ++a)
                    if (prev_present[a]) goal_active.push_back(a);
                cond_goal = refine_goals(g_raw, goal_active, scene.positions_at(t - 1));
                g_prev = g_raw;
            }

            Tensor fx = mlp_forward(phi_x_, x_t);
            GaussianParams posterior = encode_from_features(fx, h, cond_goal);
            Tensor z = opts.deterministic ? posterior.mean
                                          : sample_reparameterized(posterior, draw_noise(n, cfg_.latent_dim));
            Tensor fz = mlp_forward(phi_z_, z);

            Tensor h_new = gru_step(gru_, concat({fx, fz}, 1), h);
            if (active.size() == n) {
                h = h_new;
            } else {
                h = add(mul(h_new, row_mask_tensor(step_valid, cfg_.hidden_dim, false)),
                        mul(h, row_mask_tensor(step_valid, cfg_.hidden_dim, true)));
            }
            if (cfg_.uses_hidden_refiner()) {
                const auto now_present = scene.mask_at(t);
                std::vector<std::size_t> refine_active;
                for (std::size_t a = 0; a < n; ++a)
                    if (now_present[a]) refine_active.push_back(a);
                h = refine_hidden(h, refine_active, scene.positions_at(t));
            }
        }

        // autoregressive prediction via the prior
        std::vector<std::size_t> tracked_idx;
        for (std::size_t a = 0; a < n; ++a)
            if (result.tracked[a]) tracked_idx.push_back(a);
        if (tracked_idx.empty())
            throw TensorError("rollout: no observed agents in the prefix");

        for (std::size_t k = 0; k < t_pred; ++k) {
            Tensor cond_goal;
            if (cfg_.uses_goals()) {
                Tensor disposition = scene_disposition(cur_pos, result.tracked);
                Tensor g_raw = propose_goal(g_prev, disposition, h);
                cond_goal = refine_goals(g_raw, tracked_idx, cur_pos);
                g_prev = g_raw;
            }

            GaussianParams prior = prior_step(h, cond_goal);
            Tensor z = opts.deterministic ? prior.mean
                                          : sample_reparameterized(prior, draw_noise(n, cfg_.latent_dim));
            Tensor fz = mlp_forward(phi_z_, z);
            GaussianParams dec = decode_from_features(fz, h, cond_goal);
            Tensor x_hat = dec.mean;
            if (!opts.deterministic && opts.sample_displacement)
                x_hat = sample_reparameterized(dec, draw_noise(n, 2));

            for (std::size_t a : tracked_idx) {
                cur_pos[a].x += x_hat.data()[a * 2];
                cur_pos[a].y += x_hat.data()[a * 2 + 1];
                result.positions[(a * t_pred + k) * 2] = cur_pos[a].x;
                result.positions[(a * t_pred + k) * 2 + 1] = cur_pos[a].y;
            }

            Tensor fx = mlp_forward(phi_x_, x_hat);
            Tensor h_new = gru_step(gru_, concat({fx, fz}, 1), h);
            if (tracked_idx.size() == n) {
                h = h_new;
            } else {
                h = add(mul(h_new, row_mask_tensor(result.tracked, cfg_.hidden_dim, false)),
                        mul(h, row_mask_tensor(result.tracked, cfg_.hidden_dim, true)));
            }
            if (cfg_.uses_hidden_refiner()) h = refine_hidden(h, tracked_idx, cur_pos);
        }
        return result;
    }

private:
    GaussianParams encode_from_features(const Tensor& fx, const Tensor& h_prev, const Tensor& goal) const {
        Tensor in = cfg_.uses_goals() ? concat({fx, h_prev, goal}, 1) : concat({fx, h_prev}, 1);
        return GaussianParams::from_head(mlp_forward(phi_enc_, in));
    }

    GaussianParams decode_from_features(const Tensor& fz, const Tensor& h_prev, const Tensor& goal) const {
        Tensor in = cfg_.uses_goals() ? concat({fz, h_prev, goal}, 1) : concat({fz, h_prev}, 1);
        return GaussianParams::from_head(mlp_forward(phi_dec_, in));
    }

    // Goal refinement (Eq-level: distill over the goal graph, project the
    // concatenation, renormalize onto the simplex). Rows outside the active
    // set pass through unchanged.
    Tensor refine_goals(const Tensor& g_raw, const std::vector<std::size_t>& active,
                        const std::vector<Vec2>& positions) const {
        if (active.empty()) return g_raw;
        std::vector<Vec2> sub_pos;
        for (std::size_t a : active) sub_pos.push_back(positions[a]);
        GraphTopology topo = cfg_.goal_graph_uses_distance
                                 ? build_topology(sub_pos, cfg_.adjacency_threshold)
                                 : complete_topology(sub_pos);
        const std::size_t n = g_raw.dim(0);
        if (active.size() == n)
            return softmax(refine(goal_refiner_, g_raw, topo), 1);
        Tensor sub = gather_rows(g_raw, active);
        Tensor refined = softmax(refine(goal_refiner_, sub, topo), 1);
        std::vector<std::uint8_t> flags(n, 0);
        for (std::size_t a : active) flags[a] = 1;
        return add(scatter_rows(refined, active, n),
                   mul(g_raw, row_mask_tensor(flags, cfg_.goal_cells, true)));
    }

    Tensor refine_hidden(const Tensor& h, const std::vector<std::size_t>& active,
                         const std::vector<Vec2>& positions) const {
        if (active.empty()) return h;
        std::vector<Vec2> sub_pos;
        for (std::size_t a : active) sub_pos.push_back(positions[a]);
        GraphTopology topo = build_topology(sub_pos, cfg_.adjacency_threshold);
        const std::size_t n = h.dim(0);
        if (active.size() == n) return refine(hidden_refiner_, h, topo);
        Tensor sub = gather_rows(h, active);
        Tensor refined = refine(hidden_refiner_, sub, topo);
        std::vector<std::uint8_t> flags(n, 0);
        for (std::size_t a : active) flags[a] = 1;
        return add(scatter_rows(refined, active, n),
                   mul(h, row_mask_tensor(flags, cfg_.hidden_dim, true)));
    }

    ModelConfig cfg_;
    ParameterRegistry params_;
    Mlp phi_x_, phi_z_, phi_enc_, phi_prior_, phi_dec_, phi_goal_;
    GruCell gru_;
    GraphRefiner goal_refiner_, hidden_refiner_;
};

} // namespace dagnet
