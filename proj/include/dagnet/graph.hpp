#pragma once

// Multi-head graph attention and the two distillation stages: goal
// refinement and hidden-state refinement over the agents graph.
//
// Neighbor reductions (score max, softmax normalizer, weighted feature sum)
// accumulate in an order keyed on the node feature values rather than node
// indices, so relabeling the nodes permutes every output bitwise.

#include "dagnet/goal_grid.hpp"
#include "dagnet/nn.hpp"
#include "dagnet/tensor.hpp"

#include <limits>

namespace dagnet {

struct GraphTopology {
    std::size_t num_nodes = 0;
    std::vector<std::uint8_t> adjacency; // [n*n], symmetric, self-loops on present nodes
    std::vector<double> distances;       // [n*n], pairwise Euclidean

    bool edge(std::size_t i, std::size_t j) const { return adjacency[i * num_nodes + j] != 0; }
    double distance(std::size_t i, std::size_t j) const { return distances[i * num_nodes + j]; }
};

// Edge (i,j) present iff distance <= threshold or i == j; masked agents get
// no edges at all (their rows must not enter the attention pass).
inline GraphTopology build_topology(const std::vector<Vec2>& positions, double threshold,
                                    const std::vector<std::uint8_t>& mask = {}) {
    const std::size_t n = positions.size();
    if (n == 0) throw TensorError("build_topology: no agents");
    if (threshold < 0.0) throw TensorError("build_topology: negative threshold");
    if (!mask.empty() && mask.size() != n)
        throw TensorError("build_topology: mask size mismatch");
    GraphTopology topo;
    topo.num_nodes = n;
    topo.adjacency.assign(n * n, 0);
    topo.distances.assign(n * n, 0.0);
    auto present = [&](std::size_t i) { return mask.empty() || mask[i] != 0; };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double d = euclidean(positions[i], positions[j]);
            topo.distances[i * n + j] = d;
            if (!present(i) || !present(j)) continue;
            if (i == j || d <= threshold) topo.adjacency[i * n + j] = 1;
        }
    return topo;
}

inline GraphTopology complete_topology(const std::vector<Vec2>& positions,
                                       const std::vector<std::uint8_t>& mask = {}) {
    return build_topology(positions, std::numeric_limits<double>::infinity(), mask);
}

namespace detail {

// canonical neighbor order: lexicographic on the projected feature rows.
// Ties can stay in index order; tied rows are bitwise identical, so any
// order yields the same sums.
inline std::vector<std::size_t> canonical_neighbors(const std::vector<double>& rows, std::size_t d,
                                                    const GraphTopology& topo, std::size_t i) {
    std::vector<std::size_t> nbrs;
    for (std::size_t j = 0; j < topo.num_nodes; ++j)
        if (topo.edge(i, j)) nbrs.push_back(j);
    std::sort(nbrs.begin(), nbrs.end(), [&](std::size_t a, std::size_t b) {
        for (std::size_t c = 0; c < d; ++c) {
            const double va = rows[a * d + c], vb = rows[b * d + c];
            if (va != vb) return va < vb;
        }
        return false;
    });
    return nbrs;
}

} // namespace detail

// Single-head attention aggregation: out_i = sum_j alpha_ij proj_j with
// alpha = softmax over i's neighborhood of leakyReLU(a . [proj_i || proj_j]).
// Non-neighbors get exactly zero attention. Optionally reports the dense
// attention matrix.
inline Tensor attention_aggregate(const Tensor& proj, const Tensor& attn_vec,
                                  const GraphTopology& topo, double slope,
                                  std::vector<double>* attention_out = nullptr) {
    if (proj.rank() != 2 || proj.dim(0) != topo.num_nodes)
        throw TensorError("attention_aggregate: features " + shape_str(proj.shape()) +
                          " do not match " + std::to_string(topo.num_nodes) + " nodes");
    const std::size_t n = proj.dim(0), d = proj.dim(1);
    if (attn_vec.rank() != 1 || attn_vec.dim(0) != 2 * d)
        throw TensorError("attention_aggregate: attention vector " + shape_str(attn_vec.shape()) +
                          " does not match feature dim " + std::to_string(d));

    const auto& P = proj.data();
    const auto& a = attn_vec.data();

    std::vector<std::vector<std::size_t>> nbrs(n);
    std::vector<std::vector<double>> alpha(n), lrelu_factor(n);
    if (attention_out) attention_out->assign(n * n, 0.0);

    Tensor out = Tensor::zeros({n, d});
    for (std::size_t i = 0; i < n; ++i) {
        nbrs[i] = detail::canonical_neighbors(P, d, topo, i);
        if (nbrs[i].empty())
            throw std::logic_error("attention_aggregate: empty neighborhood for node " +
                                   std::to_string(i) + " (self-loop missing)");
        double self_score = 0.0;
        for (std::size_t c = 0; c < d; ++c) self_score += a[c] * P[i * d + c];

        const std::size_t deg = nbrs[i].size();
        std::vector<double> s(deg);
        lrelu_factor[i].resize(deg);
        for (std::size_t k = 0; k < deg; ++k) {
            const std::size_t j = nbrs[i][k];
            double u = self_score;
            for (std::size_t c = 0; c < d; ++c) u += a[d + c] * P[j * d + c];
            s[k] = u > 0.0 ? u : slope * u;
            lrelu_factor[i][k] = u > 0.0 ? 1.0 : slope;
        }
        double mx = s[0];
        for (std::size_t k = 1; k < deg; ++k) mx = std::max(mx, s[k]);
        double z = 0.0;
        for (std::size_t k = 0; k < deg; ++k) z += std::exp(s[k] - mx);
        alpha[i].resize(deg);
        for (std::size_t k = 0; k < deg; ++k) {
            alpha[i][k] = std::exp(s[k] - mx) / z;
            if (attention_out) (*attention_out)[i * n + nbrs[i][k]] = alpha[i][k];
        }
        for (std::size_t k = 0; k < deg; ++k) {
            const std::size_t j = nbrs[i][k];
            for (std::size_t c = 0; c < d; ++c) out.data()[i * d + c] += alpha[i][k] * P[j * d + c];
        }
    }

    auto pi = proj.impl(), ai = attn_vec.impl(), oi = out.impl();
    detail::finalize(out, {proj, attn_vec}, [pi, ai, oi, nbrs, alpha, lrelu_factor, n, d]() {
        const auto& P = pi->data;
        const auto& a = ai->data;
        const auto& G = oi->grad;
        const bool want_p = pi->requires_grad, want_a = ai->requires_grad;
        if (want_p) pi->ensure_grad();
        if (want_a) ai->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t deg = nbrs[i].size();
            // d(loss)/d(alpha_ik) and softmax backward to scores
            std::vector<double> dalpha(deg), du(deg);
            double inner = 0.0;
            for (std::size_t k = 0; k < deg; ++k) {
                const std::size_t j = nbrs[i][k];
                double acc = 0.0;
                for (std::size_t c = 0; c < d; ++c) acc += G[i * d + c] * P[j * d + c];
                dalpha[k] = acc;
                inner += alpha[i][k] * acc;
            }
            double du_sum = 0.0;
            for (std::size_t k = 0; k < deg; ++k) {
                du[k] = alpha[i][k] * (dalpha[k] - inner) * lrelu_factor[i][k];
                du_sum += du[k];
            }
            if (want_p) {
                for (std::size_t k = 0; k < deg; ++k) {
                    const std::size_t j = nbrs[i][k];
                    for (std::size_t c = 0; c < d; ++c) {
                        // value path + neighbor half of the score
                        pi->grad[j * d + c] += alpha[i][k] * G[i * d + c] + du[k] * a[d + c];
                    }
                }
                // self half of the score, summed over the neighborhood
                for (std::size_t c = 0; c < d; ++c) pi->grad[i * d + c] += du_sum * a[c];
            }
            if (want_a) {
                for (std::size_t c = 0; c < d; ++c) ai->grad[c] += du_sum * P[i * d + c];
                for (std::size_t k = 0; k < deg; ++k) {
                    const std::size_t j = nbrs[i][k];
                    for (std::size_t c = 0; c < d; ++c) ai->grad[d + c] += du[k] * P[j * d + c];
                }
            }
        }
    }, "attention_aggregate");
    return out;
}

enum class HeadMerge { Concat, Average };

struct GatLayer {
    std::vector<Tensor> head_weight; // [heads] of [out, in]
    std::vector<Tensor> head_attn;   // [heads] of [2*out]
    double slope = 0.2;
    HeadMerge merge = HeadMerge::Concat;
    Activation activation = Activation::Tanh;

    GatLayer() = default;
    GatLayer(std::size_t out, std::size_t in, std::size_t heads, HeadMerge m, Activation act,
             std::mt19937_64& rng)
        : merge(m), activation(act) {
        for (std::size_t h = 0; h < heads; ++h) {
            head_weight.push_back(xavier_uniform(out, in, rng));
            Tensor a = Tensor::zeros({2 * out});
            const double bound = std::sqrt(6.0 / static_cast<double>(2 * out + 1));
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (auto& v : a.data()) v = dist(rng);
            head_attn.push_back(a);
        }
    }

    std::size_t heads() const { return head_weight.size(); }
    std::size_t in_dim() const { return head_weight.at(0).dim(1); }
    std::size_t out_dim() const { return head_weight.at(0).dim(0); }

    void register_params(ParameterRegistry& reg, const std::string& prefix) {
        for (std::size_t h = 0; h < heads(); ++h) {
            head_weight[h] = reg.add(prefix + ".h" + std::to_string(h) + ".weight", head_weight[h]);
            head_attn[h] = reg.add(prefix + ".h" + std::to_string(h) + ".attn", head_attn[h]);
        }
    }
};

// Per head: project, attend over the neighborhood, aggregate. Heads are
// concatenated (hidden layer) or averaged (output layer), then the layer
// activation is applied. Optionally reports per-head attention matrices.
inline Tensor gat_forward(const GatLayer& layer, const Tensor& features, const GraphTopology& topo,
                          std::vector<std::vector<double>>* attention_out = nullptr) {
    if (features.rank() != 2 || features.dim(1) != layer.in_dim())
        throw TensorError("gat_forward: features " + shape_str(features.shape()) +
                          " do not match layer input " + std::to_string(layer.in_dim()));
    if (attention_out) attention_out->assign(layer.heads(), {});
    std::vector<Tensor> head_outputs;
    for (std::size_t h = 0; h < layer.heads(); ++h) {
        Tensor proj = matmul(features, transpose(layer.head_weight[h]));
        head_outputs.push_back(attention_aggregate(proj, layer.head_attn[h], topo, layer.slope,
                                                   attention_out ? &(*attention_out)[h] : nullptr));
    }
    Tensor merged;
    if (layer.merge == HeadMerge::Concat) {
        merged = concat(head_outputs, 1);
    } else {
        merged = head_outputs[0];
        for (std::size_t h = 1; h < head_outputs.size(); ++h) merged = add(merged, head_outputs[h]);
        merged = mul_scalar(merged, 1.0 / static_cast<double>(head_outputs.size()));
    }
    return apply_activation(merged, layer.activation, layer.slope);
}

// Two GAT layers distill the node features; the result is concatenated with
// the original features and linearly projected back to the input dimension.
struct GraphRefiner {
    GatLayer layer1; // d -> graph_hidden per head, heads concatenated
    GatLayer layer2; // heads*graph_hidden -> d, heads averaged
    LinearLayer projection; // [d, 2d]

    GraphRefiner() = default;
    GraphRefiner(std::size_t d, std::size_t graph_hidden, std::size_t heads, std::mt19937_64& rng)
        : layer1(graph_hidden, d, heads, HeadMerge::Concat, Activation::Tanh, rng),
          layer2(d, graph_hidden * heads, heads, HeadMerge::Average, Activation::Identity, rng),
          projection(d, 2 * d, rng) {}

    std::size_t dim() const { return projection.out_dim(); }

    void register_params(ParameterRegistry& reg, const std::string& prefix) {
        layer1.register_params(reg, prefix + ".gat1");
        layer2.register_params(reg, prefix + ".gat2");
        projection.register_params(reg, prefix + ".proj");
    }
};

inline Tensor refine(const GraphRefiner& refiner, const Tensor& features, const GraphTopology& topo) {
    if (features.rank() != 2 || features.dim(1) != refiner.dim())
        throw TensorError("refine: features " + shape_str(features.shape()) +
                          " do not match refiner dim " + std::to_string(refiner.dim()));
    Tensor distilled = gat_forward(refiner.layer2, gat_forward(refiner.layer1, features, topo), topo);
    return linear_forward(refiner.projection, concat({features, distilled}, 1));
}

} // namespace dagnet
