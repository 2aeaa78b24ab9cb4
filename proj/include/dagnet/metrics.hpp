#pragma once

// ADE/FDE displacement metrics and the evaluation report structure.

#include "dagnet/scene.hpp"
#include "dagnet/tensor.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace dagnet {

// Average Euclidean distance over all valid (agent, step) pairs.
// predicted/truth are [n * T * 2]; mask is [n * T] (empty = all valid).
inline double ade(const std::vector<double>& predicted, const std::vector<double>& truth,
                  std::size_t n, std::size_t T, const std::vector<std::uint8_t>& mask = {}) {
    if (predicted.size() != n * T * 2 || truth.size() != n * T * 2)
        throw TensorError("ade: buffer sizes do not match n=" + std::to_string(n) +
                          ", T=" + std::to_string(T));
    if (!mask.empty() && mask.size() != n * T) throw TensorError("ade: mask size mismatch");
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t t = 0; t < T; ++t) {
            if (!mask.empty() && !mask[a * T + t]) continue;
            const std::size_t i = (a * T + t) * 2;
            total += std::hypot(predicted[i] - truth[i], predicted[i + 1] - truth[i + 1]);
            ++count;
        }
    if (count == 0) throw TensorError("ade: no valid (agent, step) pairs");
    return total / static_cast<double>(count);
}

// Mean final-step Euclidean distance over agents with a valid final step.
inline double fde(const std::vector<double>& predicted, const std::vector<double>& truth,
                  std::size_t n, std::size_t T, const std::vector<std::uint8_t>& mask = {}) {
    if (predicted.size() != n * T * 2 || truth.size() != n * T * 2)
        throw TensorError("fde: buffer sizes do not match n=" + std::to_string(n) +
                          ", T=" + std::to_string(T));
    if (!mask.empty() && mask.size() != n * T) throw TensorError("fde: mask size mismatch");
    double total = 0.0;
    std::size_t count = 0;
    const std::size_t last = T - 1;
    for (std::size_t a = 0; a < n; ++a) {
        if (!mask.empty() && !mask[a * T + last]) continue;
        const std::size_t i = (a * T + last) * 2;
        total += std::hypot(predicted[i] - truth[i], predicted[i + 1] - truth[i + 1]);
        ++count;
    }
    if (count == 0) throw TensorError("fde: no valid final entries");
    return total / static_cast<double>(count);
}

struct SplitReport {
    std::size_t t_obs = 0;
    std::size_t t_pred = 0;
    double ade = 0.0;
    double fde = 0.0;
    std::size_t n_scenes = 0;
    std::size_t n_agents = 0;
};

struct EvalReport {
    double ade = 0.0;
    double fde = 0.0;
    std::size_t n_scenes = 0;
    std::size_t n_agents = 0;
    std::string units = "meters";
    std::vector<SplitReport> splits; // long-term mode, keyed by (t_obs, t_pred)

    std::string to_text() const {
        std::ostringstream os;
        os << std::fixed << std::setprecision(4);
        os << "ADE " << ade << " " << units << " | FDE " << fde << " " << units << " | scenes "
           << n_scenes << " | agents " << n_agents << "\n";
        for (const auto& s : splits)
            os << "  split " << s.t_obs << "-" << s.t_pred << ": ADE " << s.ade << " FDE " << s.fde
               << " (scenes " << s.n_scenes << ", agents " << s.n_agents << ")\n";
        return os.str();
    }
};

} // namespace dagnet
