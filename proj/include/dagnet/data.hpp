#pragma once

// Dataset ingestion: TrajNet-style annotation text, SportVU-style play
// lines, scene assembly with presence masks, deterministic splits, and a
// synthetic coordinated-agents generator for desk-scale experiments.

#include "dagnet/scene.hpp"
#include "dagnet/tensor.hpp"

#include <array>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace dagnet {

struct TrackRecord {
    long long frame = 0;
    long long agent = 0;
    double x = 0.0;
    double y = 0.0;
};

// whitespace-separated "frame agent x y" lines; (frame, agent) must be unique
inline std::vector<TrackRecord> parse_trajnet(std::istream& in, const std::string& origin) {
    std::vector<TrackRecord> records;
    std::set<std::pair<long long, long long>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream ls(line);
        TrackRecord rec;
        std::string extra;
        if (!(ls >> rec.frame >> rec.agent >> rec.x >> rec.y))
            throw TensorError(origin + ":" + std::to_string(line_no) + ": malformed record \"" + line + "\"");
        if (ls >> extra)
            throw TensorError(origin + ":" + std::to_string(line_no) + ": trailing field \"" + extra + "\"");
        if (!seen.insert({rec.frame, rec.agent}).second)
            throw TensorError(origin + ":" + std::to_string(line_no) + ": duplicate (frame, agent) pair (" +
                              std::to_string(rec.frame) + ", " + std::to_string(rec.agent) + ")");
        records.push_back(rec);
    }
    return records;
}

inline std::vector<TrackRecord> load_trajnet(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TensorError("load_trajnet: cannot open " + path);
    return parse_trajnet(in, path);
}

inline void save_trajnet(const std::string& path, const std::vector<TrackRecord>& records) {
    std::ofstream out(path);
    if (!out) throw TensorError("save_trajnet: cannot open " + path);
    out.precision(17);
    for (const auto& r : records)
        out << r.frame << " " << r.agent << " " << r.x << " " << r.y << "\n";
    if (!out) throw TensorError("save_trajnet: write failed for " + path);
}

// Sliding-window segmentation of a record stream into fixed [T_obs + T_pred]
// scenes. Frames must tick at a constant rate; gaps show up as absence.
// Agents partially present inside a window are masked per step; windows with
// no fully-present agent are dropped.
inline std::vector<Scene> assemble_scenes(const std::vector<TrackRecord>& records, std::size_t t_obs,
                                          std::size_t t_pred, std::size_t stride,
                                          DatasetKind kind = DatasetKind::Sdd,
                                          double frame_rate_hz = 2.5) {
    const std::size_t T = t_obs + t_pred;
    if (T < 2) throw TensorError("assemble_scenes: window must be >= 2 steps");
    if (stride < 1) throw TensorError("assemble_scenes: stride must be >= 1");
    if (records.empty()) return {};

    std::vector<long long> frames;
    for (const auto& r : records) frames.push_back(r.frame);
    std::sort(frames.begin(), frames.end());
    frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
    long long step = 0;
    for (std::size_t i = 1; i < frames.size(); ++i) {
        const long long d = frames[i] - frames[i - 1];
        step = step == 0 ? d : std::min(step, d);
    }
    if (step == 0) step = 1;
    const long long f0 = frames.front();
    for (long long f : frames)
        if ((f - f0) % step != 0)
            throw TensorError("assemble_scenes: frame " + std::to_string(f) +
                              " is off the detected rate (step " + std::to_string(step) + ")");
    const std::size_t total_steps = static_cast<std::size_t>((frames.back() - f0) / step) + 1;

    // (time index, agent) -> position
    std::map<std::pair<std::size_t, long long>, Vec2> table;
    std::vector<long long> agents;
    for (const auto& r : records) {
        table[{static_cast<std::size_t>((r.frame - f0) / step), r.agent}] = {r.x, r.y};
        agents.push_back(r.agent);
    }
    std::sort(agents.begin(), agents.end());
    agents.erase(std::unique(agents.begin(), agents.end()), agents.end());

    std::vector<Scene> scenes;
    for (std::size_t start = 0; start + T <= total_steps; start += stride) {
        // keep agents that appear at least once inside the window
        std::vector<long long> window_agents;
        for (long long a : agents)
            for (std::size_t t = 0; t < T; ++t)
                if (table.count({start + t, a})) {
                    window_agents.push_back(a);
                    break;
                }
        if (window_agents.empty()) continue;
        Scene scene = Scene::empty(window_agents.size(), T, kind, frame_rate_hz);
        for (std::size_t ai = 0; ai < window_agents.size(); ++ai)
            for (std::size_t t = 0; t < T; ++t) {
                auto it = table.find({start + t, window_agents[ai]});
                if (it != table.end()) scene.set_position(ai, t, it->second);
            }
        if (scene.fully_present_count() == 0) continue;
        scenes.push_back(std::move(scene));
    }
    return scenes;
}

// ---- SportVU-style plays ----

inline constexpr std::size_t kPlaySteps = 50;
inline constexpr std::size_t kPlayersPerPlay = 10; // 5 attackers then 5 defenders
inline constexpr double kCourtLengthFt = 94.0;
inline constexpr double kCourtWidthFt = 50.0;
inline constexpr double kPlayRateHz = 5.0;

// One play: 50 steps x (10 players + ball) x (x, y, z). The ball track is
// parsed for format compatibility but never modeled.
struct PlayRecord {
    long long play_id = 0;
    std::vector<double> players; // [50 * 10 * 2]
    std::vector<double> ball;    // [50 * 2]

    Vec2 player(std::size_t step, std::size_t p) const {
        return {players[(step * kPlayersPerPlay + p) * 2], players[(step * kPlayersPerPlay + p) * 2 + 1]};
    }
    void set_player(std::size_t step, std::size_t p, Vec2 v) {
        players[(step * kPlayersPerPlay + p) * 2] = v.x;
        players[(step * kPlayersPerPlay + p) * 2 + 1] = v.y;
    }

    static PlayRecord empty(long long id) {
        PlayRecord pr;
        pr.play_id = id;
        pr.players.assign(kPlaySteps * kPlayersPerPlay * 2, 0.0);
        pr.ball.assign(kPlaySteps * 2, 0.0);
        return pr;
    }
};

// Text schema, one play per line:
//   play_id  then 50 blocks of 11 entities x (x y z)
// entity order per block: 5 attackers, 5 defenders, ball.
inline std::vector<PlayRecord> parse_plays(std::istream& in, const std::string& origin) {
    std::vector<PlayRecord> plays;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream ls(line);
        PlayRecord play = PlayRecord::empty(0);
        if (!(ls >> play.play_id))
            throw TensorError(origin + ":" + std::to_string(line_no) + ": missing play id");
        for (std::size_t t = 0; t < kPlaySteps; ++t)
            for (std::size_t e = 0; e < kPlayersPerPlay + 1; ++e) {
                double x, y, z;
                if (!(ls >> x >> y >> z))
                    throw TensorError(origin + ":" + std::to_string(line_no) + ": truncated play at step " +
                                      std::to_string(t) + ", entity " + std::to_string(e));
                if (e < kPlayersPerPlay) {
                    play.set_player(t, e, {x, y});
                } else {
                    play.ball[t * 2] = x;
                    play.ball[t * 2 + 1] = y;
                }
            }
        std::string extra;
        if (ls >> extra)
            throw TensorError(origin + ":" + std::to_string(line_no) + ": trailing data \"" + extra + "\"");
        plays.push_back(std::move(play));
    }
    return plays;
}

inline std::vector<PlayRecord> load_plays(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TensorError("load_plays: cannot open " + path);
    return parse_plays(in, path);
}

inline void save_plays(const std::string& path, const std::vector<PlayRecord>& plays) {
    std::ofstream out(path);
    if (!out) throw TensorError("save_plays: cannot open " + path);
    out.precision(17);
    for (const auto& play : plays) {
        out << play.play_id;
        for (std::size_t t = 0; t < kPlaySteps; ++t)
            for (std::size_t e = 0; e < kPlayersPerPlay + 1; ++e) {
                if (e < kPlayersPerPlay) {
                    const Vec2 p = play.player(t, e);
                    out << " " << p.x << " " << p.y << " " << 0.0;
                } else {
                    out << " " << play.ball[t * 2] << " " << play.ball[t * 2 + 1] << " " << 0.0;
                }
            }
        out << "\n";
    }
    if (!out) throw TensorError("save_plays: write failed for " + path);
}

// Centers every play on the court middle and reflects plays that develop
// leftward so the attack always moves toward +x. Reflection is an isometry:
// pairwise distances are untouched.
inline void normalize_plays(std::vector<PlayRecord>& plays, double court_length = kCourtLengthFt,
                            double court_width = kCourtWidthFt) {
    const double cx = court_length / 2.0, cy = court_width / 2.0;
    for (auto& play : plays) {
        for (std::size_t t = 0; t < kPlaySteps; ++t) {
            for (std::size_t p = 0; p < kPlayersPerPlay; ++p) {
                Vec2 v = play.player(t, p);
                play.set_player(t, p, {v.x - cx, v.y - cy});
            }
            play.ball[t * 2] -= cx;
            play.ball[t * 2 + 1] -= cy;
        }
        // attack direction from the attackers' net x displacement
        double net = 0.0;
        for (std::size_t p = 0; p < 5; ++p)
            net += play.player(kPlaySteps - 1, p).x - play.player(0, p).x;
        if (net < 0.0) {
            for (std::size_t t = 0; t < kPlaySteps; ++t) {
                for (std::size_t p = 0; p < kPlayersPerPlay; ++p) {
                    Vec2 v = play.player(t, p);
                    play.set_player(t, p, {-v.x, v.y});
                }
                play.ball[t * 2] = -play.ball[t * 2];
            }
        }
    }
}

enum class Team { Attack, Defense };

inline Team team_from_name(const std::string& s) {
    if (s == "atk" || s == "attack") return Team::Attack;
    if (s == "def" || s == "defense") return Team::Defense;
    throw TensorError("unknown team: " + s + " (expected atk|def)");
}

// 5-agent scene holding one team of a play
inline Scene split_team(const PlayRecord& play, Team team) {
    Scene scene = Scene::empty(5, kPlaySteps, DatasetKind::Sports, kPlayRateHz);
    const std::size_t base = team == Team::Attack ? 0 : 5;
    for (std::size_t p = 0; p < 5; ++p)
        for (std::size_t t = 0; t < kPlaySteps; ++t)
            scene.set_position(p, t, play.player(t, base + p));
    return scene;
}

inline std::vector<Scene> plays_to_scenes(const std::vector<PlayRecord>& plays, Team team) {
    std::vector<Scene> scenes;
    scenes.reserve(plays.size());
    for (const auto& play : plays) scenes.push_back(split_team(play, team));
    return scenes;
}

// ---- synthetic coordinated-agents generator ----

struct SyntheticConfig {
    std::uint64_t seed = 7;
    std::size_t n_scenes = 20;
    std::size_t n_agents = 5;
    std::size_t n_steps = 20;
    double coordination = 1.0;   // probability an agent adopts the shared team goal
    double noise_level = 0.05;   // amplitude of the smooth mid-path detour
    double arena_min = 0.0;
    double arena_max = 10.0;
    std::size_t grid_rows = 5;
    std::size_t grid_cols = 5;
};

inline SceneGrid synthetic_grid(const SyntheticConfig& cfg) {
    return SceneGrid(cfg.arena_min, cfg.arena_min, cfg.arena_max, cfg.arena_max, cfg.grid_rows,
                     cfg.grid_cols);
}

// Agents start at random positions and move smoothly toward a goal cell
// (shared across the team with probability `coordination`). The detour is a
// sine-windowed offset that vanishes at both endpoints, so the final
// position always lands inside the chosen goal cell regardless of noise.
inline std::vector<Scene> generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.n_agents == 0 || cfg.n_steps < 2 || cfg.n_scenes == 0)
        throw TensorError("generate_synthetic: parameters must be positive");
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const SceneGrid grid = synthetic_grid(cfg);
    const double cw = (grid.x_max - grid.x_min) / static_cast<double>(grid.cols);
    const double ch = (grid.y_max - grid.y_min) / static_cast<double>(grid.rows);

    auto point_in_cell = [&](std::size_t cell) {
        const std::size_t row = cell / grid.cols, col = cell % grid.cols;
        // keep clear of the cell border so noise in the last displacement
        // cannot push the landing out of the cell
        const double fx = 0.25 + 0.5 * unit(rng);
        const double fy = 0.25 + 0.5 * unit(rng);
        return Vec2{grid.x_min + (static_cast<double>(col) + fx) * cw,
                    grid.y_min + (static_cast<double>(row) + fy) * ch};
    };

    std::vector<Scene> scenes;
    for (std::size_t s = 0; s < cfg.n_scenes; ++s) {
        Scene scene = Scene::empty(cfg.n_agents, cfg.n_steps, DatasetKind::Synthetic, kPlayRateHz);
        std::uniform_int_distribution<std::size_t> cell_dist(0, grid.cell_count() - 1);
        const std::size_t team_cell = cell_dist(rng);
        for (std::size_t a = 0; a < cfg.n_agents; ++a) {
            const bool shared = unit(rng) < cfg.coordination;
            const std::size_t goal_cell = shared ? team_cell : cell_dist(rng);
            const Vec2 start{grid.x_min + unit(rng) * (grid.x_max - grid.x_min),
                             grid.y_min + unit(rng) * (grid.y_max - grid.y_min)};
            const Vec2 target = point_in_cell(goal_cell);
            const double angle = 2.0 * 3.141592653589793 * unit(rng);
            const Vec2 detour{std::cos(angle) * cfg.noise_level, std::sin(angle) * cfg.noise_level};
            const double Tm1 = static_cast<double>(cfg.n_steps - 1);
            for (std::size_t t = 0; t < cfg.n_steps; ++t) {
                const double u = static_cast<double>(t) / Tm1;
                const double window = std::sin(3.141592653589793 * u);
                scene.set_position(a, t,
                                   {start.x + (target.x - start.x) * u + detour.x * window,
                                    start.y + (target.y - start.y) * u + detour.y * window});
            }
        }
        scenes.push_back(std::move(scene));
    }
    return scenes;
}

// ---- deterministic splits ----

struct SceneSplits {
    std::vector<Scene> train, val, test;
};

// disjoint-by-scene 70/10/20 split, shuffled by the seed
inline SceneSplits split_scenes(std::vector<Scene> scenes, std::uint64_t seed,
                                double train_frac = 0.7, double val_frac = 0.1) {
    std::vector<std::size_t> order(scenes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n = scenes.size();
    std::size_t n_train = static_cast<std::size_t>(train_frac * static_cast<double>(n));
    std::size_t n_val = static_cast<std::size_t>(val_frac * static_cast<double>(n));
    if (n >= 3) {
        n_train = std::max<std::size_t>(n_train, 1);
        n_val = std::max<std::size_t>(n_val, 1);
        if (n_train + n_val >= n) n_train = n - n_val - 1;
    }
    SceneSplits splits;
    for (std::size_t i = 0; i < n; ++i) {
        Scene& sc = scenes[order[i]];
        if (i < n_train) splits.train.push_back(std::move(sc));
        else if (i < n_train + n_val) splits.val.push_back(std::move(sc));
        else splits.test.push_back(std::move(sc));
    }
    return splits;
}

// ---- SportVU JSON conversion ----

// Ingests the common SportVU export layout:
//   {"events": [{"moments": [[q, ts, clock, shot_clock, null,
//       [[team_id, player_id, x, y, z], ... 11 entries]], ...]}]}
// Moments are cut into consecutive 50-step plays; the ball row (team_id -1)
// is kept separate; the team listed first is treated as the attack.
inline std::vector<PlayRecord> convert_sportvu_json(const nlohmann::json& doc) {
    std::vector<PlayRecord> plays;
    long long next_id = 0;
    if (!doc.contains("events")) throw TensorError("convert_sportvu_json: missing \"events\" array");
    for (const auto& event : doc.at("events")) {
        const auto& moments = event.at("moments");
        for (std::size_t start = 0; start + kPlaySteps <= moments.size(); start += kPlaySteps) {
            PlayRecord play = PlayRecord::empty(next_id);
            bool ok = true;
            long long attack_team = -2;
            for (std::size_t t = 0; t < kPlaySteps && ok; ++t) {
                const auto& entities = moments.at(start + t).at(5);
                std::vector<std::array<double, 2>> attackers, defenders;
                for (const auto& ent : entities) {
                    const long long team = ent.at(0).get<long long>();
                    const double x = ent.at(2).get<double>(), y = ent.at(3).get<double>();
                    if (team < 0) {
                        play.ball[t * 2] = x;
                        play.ball[t * 2 + 1] = y;
                        continue;
                    }
                    if (attack_team == -2) attack_team = team;
                    if (team == attack_team) attackers.push_back({x, y});
                    else defenders.push_back({x, y});
                }
                if (attackers.size() != 5 || defenders.size() != 5) {
                    ok = false;
                    break;
                }
                for (std::size_t p = 0; p < 5; ++p) {
                    play.set_player(t, p, {attackers[p][0], attackers[p][1]});
                    play.set_player(t, 5 + p, {defenders[p][0], defenders[p][1]});
                }
            }
            if (ok) {
                play.play_id = next_id++;
                plays.push_back(std::move(play));
            }
        }
    }
    return plays;
}

inline std::vector<PlayRecord> convert_sportvu_file(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw TensorError("convert_sportvu_file: cannot open " + json_path);
    nlohmann::json doc;
    in >> doc;
    return convert_sportvu_json(doc);
}

// Serializes synthetic scenes as TrajNet text: scenes laid back to back on
// the frame axis with globally unique agent ids, so assembling with
// stride == n_steps reproduces the scene boundaries.
inline std::vector<TrackRecord> scenes_to_trajnet(const std::vector<Scene>& scenes) {
    std::vector<TrackRecord> records;
    long long frame_base = 0, agent_base = 0;
    for (const auto& scene : scenes) {
        for (std::size_t a = 0; a < scene.n_agents; ++a)
            for (std::size_t t = 0; t < scene.n_steps; ++t)
                if (scene.present(a, t)) {
                    const Vec2 p = scene.position(a, t);
                    records.push_back({frame_base + static_cast<long long>(t),
                                       agent_base + static_cast<long long>(a), p.x, p.y});
                }
        frame_base += static_cast<long long>(scene.n_steps);
        agent_base += static_cast<long long>(scene.n_agents);
    }
    return records;
}

} // namespace dagnet
