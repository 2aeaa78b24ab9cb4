#pragma once

// Parameterized layers (linear, MLP, GRU cell), the Adam optimizer, the
// named-parameter registry and the binary checkpoint format.

#include "dagnet/tensor.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <utility>

#include "json.hpp"

namespace dagnet {

enum class Activation { Identity, Relu, Tanh, Sigmoid, LeakyRelu };

inline Tensor apply_activation(const Tensor& x, Activation act, double slope = 0.2) {
    switch (act) {
        case Activation::Identity: return x;
        case Activation::Relu: return relu(x);
        case Activation::Tanh: return tanh(x);
        case Activation::Sigmoid: return sigmoid(x);
        case Activation::LeakyRelu: return leaky_relu(x, slope);
    }
    throw TensorError("apply_activation: unknown activation");
}

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::LeakyRelu: return "leaky_relu";
    }
    return "?";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "identity") return Activation::Identity;
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "leaky_relu") return Activation::LeakyRelu;
    throw TensorError("unknown activation name: " + s);
}

// Xavier-uniform fan-based init; biases start at zero.
inline Tensor xavier_uniform(std::size_t fan_out, std::size_t fan_in, std::mt19937_64& rng) {
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor w = Tensor::zeros({fan_out, fan_in});
    for (auto& v : w.data()) v = dist(rng);
    return w;
}

// Ordered map of named trainable tensors. Registration order is the
// canonical iteration order for the optimizer and the checkpoint writer.
class ParameterRegistry {
public:
    Tensor& add(const std::string& name, Tensor t) {
        if (index_.count(name))
            throw TensorError("duplicate parameter name: " + name);
        t.set_requires_grad(true);
        index_[name] = params_.size();
        params_.emplace_back(name, std::move(t));
        return params_.back().second;
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    Tensor& get(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw TensorError("unknown parameter: " + name);
        return params_[it->second].second;
    }

    const std::vector<std::pair<std::string, Tensor>>& items() const { return params_; }
    std::size_t size() const { return params_.size(); }

    void zero_grads() {
        for (auto& [name, t] : params_) t.zero_grad();
    }

    double grad_global_norm() const {
        double acc = 0.0;
        for (const auto& [name, t] : params_)
            for (double g : t.grad()) acc += g * g;
        return std::sqrt(acc);
    }

    // scales all gradients so the global norm does not exceed max_norm
    void clip_grad_norm(double max_norm) {
        double norm = grad_global_norm();
        if (norm <= max_norm || norm == 0.0) return;
        double scale = max_norm / norm;
        for (auto& [name, t] : params_)
            for (double& g : t.grad()) g *= scale;
    }

private:
    std::vector<std::pair<std::string, Tensor>> params_;
    std::map<std::string, std::size_t> index_;
};

// ---- layers ----

struct LinearLayer {
    Tensor weight; // [out, in]
    Tensor bias;   // [out]

    LinearLayer() = default;
    LinearLayer(std::size_t out, std::size_t in, std::mt19937_64& rng)
        : weight(xavier_uniform(out, in, rng)), bias(Tensor::zeros({out})) {}

    std::size_t in_dim() const { return weight.dim(1); }
    std::size_t out_dim() const { return weight.dim(0); }

    void register_params(ParameterRegistry& reg, const std::string& prefix) {
        weight = reg.add(prefix + ".weight", weight);
        bias = reg.add(prefix + ".bias", bias);
    }
};

// x [batch, in] -> x * weight^T + bias
inline Tensor linear_forward(const LinearLayer& layer, const Tensor& x) {
    if (x.rank() != 2 || x.dim(1) != layer.in_dim())
        throw TensorError("linear_forward: input " + shape_str(x.shape()) + " does not match weight " +
                          shape_str(layer.weight.shape()));
    return add(matmul(x, transpose(layer.weight)), layer.bias);
}

struct Mlp {
    std::vector<LinearLayer> layers;
    Activation activation = Activation::Relu;

    Mlp() = default;
    Mlp(const std::vector<std::size_t>& dims, Activation act, std::mt19937_64& rng) : activation(act) {
        for (std::size_t i = 0; i + 1 < dims.size(); ++i)
            layers.emplace_back(dims[i + 1], dims[i], rng);
    }

    void register_params(ParameterRegistry& reg, const std::string& prefix) {
        for (std::size_t i = 0; i < layers.size(); ++i)
            layers[i].register_params(reg, prefix + ".l" + std::to_string(i));
    }
};

// alternating linear/activation; the activation is not applied after the
// last layer. A zero-layer MLP is the identity.
inline Tensor mlp_forward(const Mlp& mlp, const Tensor& x) {
    Tensor h = x;
    for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
        h = linear_forward(mlp.layers[i], h);
        if (i + 1 < mlp.layers.size()) h = apply_activation(h, mlp.activation);
    }
    return h;
}

// Standard GRU cell:
//   r = sigmoid(x Wr^T + h Ur^T + br)
//   u = sigmoid(x Wu^T + h Uu^T + bu)
//   c = tanh(x Wc^T + (r . h) Uc^T + bc)
//   h' = u . h + (1 - u) . c
struct GruCell {
    std::size_t input_size = 0;
    std::size_t hidden_size = 0;
    Tensor w_reset, u_reset, b_reset;
    Tensor w_update, u_update, b_update;
    Tensor w_cand, u_cand, b_cand;

    GruCell() = default;
    GruCell(std::size_t in, std::size_t hidden, std::mt19937_64& rng)
        : input_size(in), hidden_size(hidden),
          w_reset(xavier_uniform(hidden, in, rng)), u_reset(xavier_uniform(hidden, hidden, rng)),
          b_reset(Tensor::zeros({hidden})),
          w_update(xavier_uniform(hidden, in, rng)), u_update(xavier_uniform(hidden, hidden, rng)),
          b_update(Tensor::zeros({hidden})),
          w_cand(xavier_uniform(hidden, in, rng)), u_cand(xavier_uniform(hidden, hidden, rng)),
          b_cand(Tensor::zeros({hidden})) {}

    void register_params(ParameterRegistry& reg, const std::string& prefix) {
        w_reset = reg.add(prefix + ".w_reset", w_reset);
        u_reset = reg.add(prefix + ".u_reset", u_reset);
        b_reset = reg.add(prefix + ".b_reset", b_reset);
        w_update = reg.add(prefix + ".w_update", w_update);
        u_update = reg.add(prefix + ".u_update", u_update);
        b_update = reg.add(prefix + ".b_update", b_update);
        w_cand = reg.add(prefix + ".w_cand", w_cand);
        u_cand = reg.add(prefix + ".u_cand", u_cand);
        b_cand = reg.add(prefix + ".b_cand", b_cand);
    }
};

inline Tensor gru_step(const GruCell& cell, const Tensor& x, const Tensor& h_prev) {
    if (x.rank() != 2 || x.dim(1) != cell.input_size)
        throw TensorError("gru_step: input " + shape_str(x.shape()) + " does not match input size " +
                          std::to_string(cell.input_size));
    if (h_prev.rank() != 2 || h_prev.dim(1) != cell.hidden_size || h_prev.dim(0) != x.dim(0))
        throw TensorError("gru_step: hidden " + shape_str(h_prev.shape()) + " does not match input " +
                          shape_str(x.shape()));
    Tensor r = sigmoid(add(add(matmul(x, transpose(cell.w_reset)),
                               matmul(h_prev, transpose(cell.u_reset))), cell.b_reset));
    Tensor u = sigmoid(add(add(matmul(x, transpose(cell.w_update)),
                               matmul(h_prev, transpose(cell.u_update))), cell.b_update));
    Tensor c = tanh(add(add(matmul(x, transpose(cell.w_cand)),
                            matmul(mul(r, h_prev), transpose(cell.u_cand))), cell.b_cand));
    return add(mul(u, h_prev), mul(rsub_scalar(1.0, u), c));
}

// ---- Adam ----

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class AdamState {
public:
    explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

    const AdamConfig& config() const { return cfg_; }
    void set_learning_rate(double lr) { cfg_.learning_rate = lr; }
    std::uint64_t step_count() const { return t_; }

    // bias-corrected in-place update of every registered parameter
    void step(ParameterRegistry& params) {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (const auto& [name, param] : params.items()) {
            Tensor p = param; // shared handle, mutates the registered storage
            if (!p.has_grad())
                throw TensorError("adam_step: missing gradient for parameter " + name);
            auto& mv = moments_[name];
            if (mv.m.empty()) {
                mv.m.assign(p.numel(), 0.0);
                mv.v.assign(p.numel(), 0.0);
            }
            auto& data = p.data();
            const auto& grad = p.grad();
            for (std::size_t i = 0; i < data.size(); ++i) {
                const double g = grad[i];
                mv.m[i] = cfg_.beta1 * mv.m[i] + (1.0 - cfg_.beta1) * g;
                mv.v[i] = cfg_.beta2 * mv.v[i] + (1.0 - cfg_.beta2) * g * g;
                const double m_hat = mv.m[i] / bc1;
                const double v_hat = mv.v[i] / bc2;
                data[i] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
            }
        }
    }

private:
    struct Moments {
        std::vector<double> m, v;
    };
    AdamConfig cfg_;
    std::uint64_t t_ = 0;
    std::map<std::string, Moments> moments_;
};

// ---- checkpoint format ----
//
// Layout:  "DAGNET-CKPT-v1\n"
//          <one-line JSON manifest>\n
//          <flat little-endian float64 payload>
// The manifest lists (name, shape, byte-offset) per parameter, offsets
// relative to the payload start, plus a free-form "meta" object.

inline constexpr const char* kCheckpointMagic = "DAGNET-CKPT-v1";

namespace detail {

inline void write_f64_le(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline double read_f64_le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

} // namespace detail

inline void save_checkpoint(const ParameterRegistry& params, const std::string& path,
                            const nlohmann::json& meta = nlohmann::json::object()) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TensorError("save_checkpoint: cannot open " + path);
    nlohmann::json manifest;
    manifest["meta"] = meta;
    manifest["params"] = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& [name, t] : params.items()) {
        manifest["params"].push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
        offset += t.numel() * 8;
    }
    out << kCheckpointMagic << "\n" << manifest.dump() << "\n";
    for (const auto& [name, t] : params.items())
        for (double v : t.data()) detail::write_f64_le(out, v);
    if (!out) throw TensorError("save_checkpoint: write failed for " + path);
}

struct Checkpoint {
    nlohmann::json meta;
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor* find(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return &t;
        return nullptr;
    }
};

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TensorError("load_checkpoint: cannot open " + path);
    std::string magic, manifest_line;
    std::getline(in, magic);
    if (magic != kCheckpointMagic)
        throw TensorError("load_checkpoint: bad magic in " + path + " (got \"" + magic + "\")");
    std::getline(in, manifest_line);
    nlohmann::json manifest = nlohmann::json::parse(manifest_line);

    Checkpoint ckpt;
    ckpt.meta = manifest.value("meta", nlohmann::json::object());
    std::streampos payload_start = in.tellg();
    for (const auto& entry : manifest.at("params")) {
        Shape shape = entry.at("shape").get<Shape>();
        std::size_t offset = entry.at("offset").get<std::size_t>();
        in.seekg(payload_start + static_cast<std::streamoff>(offset));
        std::vector<double> values(shape_numel(shape));
        for (auto& v : values) v = detail::read_f64_le(in);
        if (!in) throw TensorError("load_checkpoint: truncated payload in " + path);
        ckpt.tensors.emplace_back(entry.at("name").get<std::string>(),
                                  Tensor::from(shape, std::move(values)));
    }
    return ckpt;
}

// Copies checkpoint values into an existing registry. Every registry entry
// must be present with a matching shape and vice versa.
inline void restore_parameters(ParameterRegistry& params, const Checkpoint& ckpt) {
    if (ckpt.tensors.size() != params.size())
        throw TensorError("restore_parameters: checkpoint has " + std::to_string(ckpt.tensors.size()) +
                          " tensors, model has " + std::to_string(params.size()));
    for (const auto& [name, src] : ckpt.tensors) {
        if (!params.contains(name))
            throw TensorError("restore_parameters: checkpoint tensor \"" + name +
                              "\" has no matching model parameter");
        Tensor& dst = params.get(name);
        if (dst.shape() != src.shape())
            throw TensorError("restore_parameters: shape mismatch for \"" + name + "\": model " +
                              shape_str(dst.shape()) + " vs checkpoint " + shape_str(src.shape()));
        dst.data() = src.data();
    }
}

} // namespace dagnet
