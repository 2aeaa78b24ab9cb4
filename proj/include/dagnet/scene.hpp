#pragma once

// Fixed-length multi-agent trajectory block with per-step presence masks.

#include "dagnet/goal_grid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dagnet {

enum class DatasetKind { Sdd, Sports, Synthetic };

inline const char* dataset_kind_name(DatasetKind k) {
    switch (k) {
        case DatasetKind::Sdd: return "sdd";
        case DatasetKind::Sports: return "sports";
        case DatasetKind::Synthetic: return "synthetic";
    }
    return "?";
}

inline const char* dataset_units(DatasetKind k) {
    return k == DatasetKind::Sports ? "feet" : "meters";
}

struct Scene {
    std::size_t n_agents = 0;
    std::size_t n_steps = 0;
    std::vector<double> positions;    // [n_agents * n_steps * 2], zeros where masked
    std::vector<std::uint8_t> mask;   // [n_agents * n_steps], 1 = present
    DatasetKind kind = DatasetKind::Synthetic;
    double frame_rate_hz = 5.0;

    static Scene empty(std::size_t n, std::size_t T, DatasetKind kind, double rate) {
        Scene s;
        s.n_agents = n;
        s.n_steps = T;
        s.positions.assign(n * T * 2, 0.0);
        s.mask.assign(n * T, 0);
        s.kind = kind;
        s.frame_rate_hz = rate;
        return s;
    }

    Vec2 position(std::size_t agent, std::size_t step) const {
        return {positions[(agent * n_steps + step) * 2],
                positions[(agent * n_steps + step) * 2 + 1]};
    }

    void set_position(std::size_t agent, std::size_t step, Vec2 p) {
        positions[(agent * n_steps + step) * 2] = p.x;
        positions[(agent * n_steps + step) * 2 + 1] = p.y;
        mask[agent * n_steps + step] = 1;
    }

    bool present(std::size_t agent, std::size_t step) const {
        return mask[agent * n_steps + step] != 0;
    }

    bool fully_present(std::size_t agent) const {
        for (std::size_t t = 0; t < n_steps; ++t)
            if (!present(agent, t)) return false;
        return true;
    }

    std::size_t fully_present_count() const {
        std::size_t c = 0;
        for (std::size_t a = 0; a < n_agents; ++a)
            if (fully_present(a)) ++c;
        return c;
    }

    std::vector<Vec2> agent_trajectory(std::size_t agent) const {
        std::vector<Vec2> out(n_steps);
        for (std::size_t t = 0; t < n_steps; ++t) out[t] = position(agent, t);
        return out;
    }

    std::vector<Vec2> positions_at(std::size_t step) const {
        std::vector<Vec2> out(n_agents);
        for (std::size_t a = 0; a < n_agents; ++a) out[a] = position(a, step);
        return out;
    }

    std::vector<std::uint8_t> mask_at(std::size_t step) const {
        std::vector<std::uint8_t> out(n_agents);
        for (std::size_t a = 0; a < n_agents; ++a) out[a] = mask[a * n_steps + step];
        return out;
    }

    std::vector<Vec2> all_present_points() const {
        std::vector<Vec2> pts;
        for (std::size_t a = 0; a < n_agents; ++a)
            for (std::size_t t = 0; t < n_steps; ++t)
                if (present(a, t)) pts.push_back(position(a, t));
        return pts;
    }
};

} // namespace dagnet
