#pragma once

// SVG roll-out plots: observed prefix in black, ground-truth future in
// blue, model prediction in red, with an optional goal-grid overlay.

#include "dagnet/model.hpp"
#include "dagnet/scene.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace dagnet {

inline constexpr const char* kObservedColor = "#000000";
inline constexpr const char* kTruthColor = "#0000ff";
inline constexpr const char* kPredictionColor = "#ff0000";

namespace detail {

struct SvgMapper {
    double x0, y0, x1, y1;
    double width, height, pad;

    double sx(double x) const { return pad + (x - x0) / (x1 - x0) * width; }
    // SVG y axis points down; world y up
    double sy(double y) const { return pad + (y1 - y) / (y1 - y0) * height; }
};

inline void append_polyline(std::ostringstream& os, const SvgMapper& m,
                            const std::vector<Vec2>& points, const char* color) {
    if (points.empty()) return;
    os << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i) os << " ";
        os << m.sx(points[i].x) << "," << m.sy(points[i].y);
    }
    os << "\"/>\n";
}

} // namespace detail

inline std::string render_rollout_svg(const Scene& scene, const RolloutResult& pred,
                                      std::size_t t_obs, const SceneGrid* grid = nullptr) {
    if (pred.n_agents != scene.n_agents)
        throw TensorError("render_rollout_svg: prediction does not match scene");
    const std::size_t t_pred = pred.t_pred;

    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    bool first = true;
    auto grow = [&](Vec2 p) {
        if (first) {
            x0 = x1 = p.x;
            y0 = y1 = p.y;
            first = false;
        } else {
            x0 = std::min(x0, p.x);
            x1 = std::max(x1, p.x);
            y0 = std::min(y0, p.y);
            y1 = std::max(y1, p.y);
        }
    };
    for (std::size_t a = 0; a < scene.n_agents; ++a) {
        for (std::size_t t = 0; t < scene.n_steps; ++t)
            if (scene.present(a, t)) grow(scene.position(a, t));
        if (pred.tracked.empty() || pred.tracked[a])
            for (std::size_t k = 0; k < t_pred; ++k) grow(pred.position(a, k));
    }
    if (grid) {
        grow({grid->x_min, grid->y_min});
        grow({grid->x_max, grid->y_max});
    }
    if (x1 - x0 < 1e-9) x1 = x0 + 1.0;
    if (y1 - y0 < 1e-9) y1 = y0 + 1.0;

    detail::SvgMapper m{x0, y0, x1, y1, 560.0, 560.0 * (y1 - y0) / (x1 - x0), 20.0};
    const double total_w = m.width + 2 * m.pad, total_h = m.height + 2 * m.pad;

    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total_w << "\" height=\"" << total_h
       << "\" viewBox=\"0 0 " << total_w << " " << total_h << "\">\n";
    os << "  <rect x=\"0\" y=\"0\" width=\"" << total_w << "\" height=\"" << total_h
       << "\" fill=\"#ffffff\"/>\n";

    if (grid) {
        os << "  <g stroke=\"#cccccc\" stroke-width=\"0.5\">\n";
        for (std::size_t c = 0; c <= grid->cols; ++c) {
            const double gx = grid->x_min + (grid->x_max - grid->x_min) * static_cast<double>(c) /
                                                static_cast<double>(grid->cols);
            os << "    <line x1=\"" << m.sx(gx) << "\" y1=\"" << m.sy(grid->y_min) << "\" x2=\""
               << m.sx(gx) << "\" y2=\"" << m.sy(grid->y_max) << "\"/>\n";
        }
        for (std::size_t r = 0; r <= grid->rows; ++r) {
            const double gy = grid->y_min + (grid->y_max - grid->y_min) * static_cast<double>(r) /
                                                static_cast<double>(grid->rows);
            os << "    <line x1=\"" << m.sx(grid->x_min) << "\" y1=\"" << m.sy(gy) << "\" x2=\""
               << m.sx(grid->x_max) << "\" y2=\"" << m.sy(gy) << "\"/>\n";
        }
        os << "  </g>\n";
    }

    for (std::size_t a = 0; a < scene.n_agents; ++a) {
        std::vector<Vec2> observed, truth, predicted;
        for (std::size_t t = 0; t < t_obs && t < scene.n_steps; ++t)
            if (scene.present(a, t)) observed.push_back(scene.position(a, t));
        for (std::size_t k = 0; k < t_pred && t_obs + k < scene.n_steps; ++k)
            if (scene.present(a, t_obs + k)) truth.push_back(scene.position(a, t_obs + k));
        if (pred.tracked.empty() || pred.tracked[a])
            for (std::size_t k = 0; k < t_pred; ++k) predicted.push_back(pred.position(a, k));
        detail::append_polyline(os, m, observed, kObservedColor);
        detail::append_polyline(os, m, truth, kTruthColor);
        detail::append_polyline(os, m, predicted, kPredictionColor);
    }
    os << "</svg>\n";
    return os.str();
}

inline void plot_rollout(const Scene& scene, const RolloutResult& pred, std::size_t t_obs,
                         const std::string& path, const SceneGrid* grid = nullptr) {
    std::ofstream out(path);
    if (!out) throw TensorError("plot_rollout: cannot open " + path);
    out << render_rollout_svg(scene, pred, t_obs, grid);
    if (!out) throw TensorError("plot_rollout: write failed for " + path);
}

} // namespace dagnet
