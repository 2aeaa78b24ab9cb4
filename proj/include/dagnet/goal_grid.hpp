#pragma once

// Scene discretization into goal cells, one-hot goal encodings, sliding
// window goal extraction and relative/absolute coordinate transforms.

#include "dagnet/tensor.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace dagnet {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double euclidean(const Vec2& a, const Vec2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

// Rectangular grid of K = rows * cols cells over world bounds. Cells are
// half-open with the global max edge closed; cell index = row * cols + col
// with row 0 at y_min. Out-of-bounds positions clamp to the border cells.
struct SceneGrid {
    double x_min = 0.0, y_min = 0.0, x_max = 1.0, y_max = 1.0;
    std::size_t rows = 1, cols = 1;

    SceneGrid() = default;
    SceneGrid(double x0, double y0, double x1, double y1, std::size_t r, std::size_t c)
        : x_min(x0), y_min(y0), x_max(x1), y_max(y1), rows(r), cols(c) {
        if (!(x_max > x_min) || !(y_max > y_min))
            throw TensorError("SceneGrid: degenerate bounds");
        if (rows == 0 || cols == 0) throw TensorError("SceneGrid: zero cells");
    }

    std::size_t cell_count() const { return rows * cols; }

    Vec2 cell_center(std::size_t cell) const {
        const std::size_t row = cell / cols, col = cell % cols;
        const double cw = (x_max - x_min) / static_cast<double>(cols);
        const double ch = (y_max - y_min) / static_cast<double>(rows);
        return {x_min + (static_cast<double>(col) + 0.5) * cw,
                y_min + (static_cast<double>(row) + 0.5) * ch};
    }

    // bounding box of the given points expanded by a small margin so the
    // grid never degenerates for stationary trajectories
    static SceneGrid fit(const std::vector<Vec2>& points, std::size_t rows, std::size_t cols,
                         double margin_fraction = 0.05) {
        if (points.empty()) throw TensorError("SceneGrid::fit: no points");
        double x0 = points[0].x, x1 = points[0].x, y0 = points[0].y, y1 = points[0].y;
        for (const auto& p : points) {
            x0 = std::min(x0, p.x);
            x1 = std::max(x1, p.x);
            y0 = std::min(y0, p.y);
            y1 = std::max(y1, p.y);
        }
        const double mx = std::max((x1 - x0) * margin_fraction, 1e-6);
        const double my = std::max((y1 - y0) * margin_fraction, 1e-6);
        return SceneGrid(x0 - mx, y0 - my, x1 + mx, y1 + my, rows, cols);
    }
};

inline std::size_t position_to_cell(const SceneGrid& grid, const Vec2& position) {
    const double cw = (grid.x_max - grid.x_min) / static_cast<double>(grid.cols);
    const double ch = (grid.y_max - grid.y_min) / static_cast<double>(grid.rows);
    auto bucket = [](double v, double lo, double step, std::size_t count) {
        double raw = std::floor((v - lo) / step);
        if (raw < 0.0) return std::size_t{0};
        if (raw >= static_cast<double>(count)) return count - 1;
        return static_cast<std::size_t>(raw);
    };
    const std::size_t col = bucket(position.x, grid.x_min, cw, grid.cols);
    const std::size_t row = bucket(position.y, grid.y_min, ch, grid.rows);
    return row * grid.cols + col;
}

struct DisplacementSequence {
    Vec2 initial_position;
    std::vector<Vec2> displacements; // [T-1]
};

inline DisplacementSequence to_relative(const std::vector<Vec2>& trajectory) {
    if (trajectory.size() < 2)
        throw TensorError("to_relative: trajectory needs at least 2 positions, got " +
                          std::to_string(trajectory.size()));
    DisplacementSequence seq;
    seq.initial_position = trajectory[0];
    seq.displacements.reserve(trajectory.size() - 1);
    for (std::size_t t = 0; t + 1 < trajectory.size(); ++t)
        seq.displacements.push_back({trajectory[t + 1].x - trajectory[t].x,
                                     trajectory[t + 1].y - trajectory[t].y});
    return seq;
}

inline std::vector<Vec2> to_absolute(const DisplacementSequence& seq) {
    std::vector<Vec2> out;
    out.reserve(seq.displacements.size() + 1);
    out.push_back(seq.initial_position);
    for (const auto& d : seq.displacements)
        out.push_back({out.back().x + d.x, out.back().y + d.y});
    return out;
}

// Sliding-window ground-truth goals: the goal of every step inside window
// j = floor(t/w) is the cell of the position at step min((j+1)*w - 1, T-1).
inline std::vector<std::size_t> extract_goal_cells(const SceneGrid& grid,
                                                   const std::vector<Vec2>& trajectory,
                                                   std::size_t w) {
    if (w < 1) throw TensorError("extract_goals: window size must be >= 1");
    if (trajectory.empty()) throw TensorError("extract_goals: empty trajectory");
    const std::size_t T = trajectory.size();
    std::vector<std::size_t> cells(T);
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t anchor = std::min((t / w + 1) * w - 1, T - 1);
        cells[t] = position_to_cell(grid, trajectory[anchor]);
    }
    return cells;
}

inline Tensor one_hot(std::size_t index, std::size_t K) {
    if (index >= K) throw TensorError("one_hot: index out of range");
    Tensor t = Tensor::zeros({K});
    t.data()[index] = 1.0;
    return t;
}

inline Tensor one_hot_rows(const std::vector<std::size_t>& indices, std::size_t K) {
    Tensor t = Tensor::zeros({indices.size(), K});
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] >= K) throw TensorError("one_hot_rows: index out of range");
        t.data()[r * K + indices[r]] = 1.0;
    }
    return t;
}

// [T, K] one-hot matrix of sliding-window goals
inline Tensor extract_goals(const SceneGrid& grid, const std::vector<Vec2>& trajectory, std::size_t w) {
    return one_hot_rows(extract_goal_cells(grid, trajectory, w), grid.cell_count());
}

} // namespace dagnet
