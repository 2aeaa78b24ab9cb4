#pragma once

// Dense 64-bit float tensors with reverse-mode automatic differentiation.
// Operations executed while a Tape is active record backward closures in
// forward order; Tape::backward replays them in exact reverse order.
// Tensors are shared handles: copies alias the same storage.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dagnet {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

class TensorError : public std::runtime_error {
public:
    explicit TensorError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;   // allocated on demand, same length as data
    bool requires_grad = false;

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
};

} // namespace detail

// Finite-output checking is active unless NDEBUG is set; release builds
// propagate non-finite values and leave detection to the training loop.
// Define DAGNET_CHECK_FINITE to 0/1 to force either mode.
#ifndef DAGNET_CHECK_FINITE
#ifndef NDEBUG
#define DAGNET_CHECK_FINITE 1
#else
#define DAGNET_CHECK_FINITE 0
#endif
#endif

class Tensor {
public:
    Tensor() : impl_(std::make_shared<detail::TensorImpl>()) {}

    static Tensor zeros(Shape shape) {
        Tensor t;
        t.impl_->shape = std::move(shape);
        t.impl_->data.assign(shape_numel(t.impl_->shape), 0.0);
        return t;
    }

    static Tensor full(Shape shape, double value) {
        Tensor t = zeros(std::move(shape));
        std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
        return t;
    }

    static Tensor from(Shape shape, std::vector<double> values) {
        if (shape_numel(shape) != values.size())
            throw TensorError("Tensor::from: shape " + shape_str(shape) + " does not match " +
                              std::to_string(values.size()) + " values");
        Tensor t;
        t.impl_->shape = std::move(shape);
        t.impl_->data = std::move(values);
        return t;
    }

    static Tensor scalar(double v) { return from({1}, {v}); }

    static Tensor row(std::initializer_list<double> values) {
        return from({values.size()}, std::vector<double>(values));
    }

    Tensor& set_requires_grad(bool flag = true) {
        impl_->requires_grad = flag;
        return *this;
    }

    const Shape& shape() const { return impl_->shape; }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t numel() const { return impl_->data.size(); }
    std::size_t dim(std::size_t i) const { return impl_->shape.at(i); }

    std::vector<double>& data() { return impl_->data; }
    const std::vector<double>& data() const { return impl_->data; }

    bool requires_grad() const { return impl_->requires_grad; }

    // true once a gradient buffer exists (allocated by backward or zero_grad)
    bool has_grad() const { return impl_->grad.size() == impl_->data.size(); }

    std::vector<double>& grad() {
        impl_->ensure_grad();
        return impl_->grad;
    }
    const std::vector<double>& grad() const {
        impl_->ensure_grad();
        return impl_->grad;
    }

    void zero_grad() {
        impl_->ensure_grad();
        std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
    }

    bool is_scalar() const { return numel() == 1; }

    double value() const {
        if (!is_scalar()) throw TensorError("value(): tensor " + shape_str(shape()) + " is not scalar");
        return impl_->data[0];
    }

    double at(std::size_t i) const { return impl_->data.at(i); }
    double at(std::size_t r, std::size_t c) const {
        if (rank() != 2) throw TensorError("at(r,c): tensor is not 2-D");
        return impl_->data.at(r * dim(1) + c);
    }

    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

    std::shared_ptr<detail::TensorImpl> impl() const { return impl_; }

private:
    std::shared_ptr<detail::TensorImpl> impl_;
};

// Tape of recorded operations. Constructing a Tape makes it the active tape
// for the current thread; destruction restores the previous one. Single
// threaded per tape: ops on one tape must come from one thread.
class Tape {
public:
    Tape() : previous_(current_ptr()) { current_ptr() = this; }
    ~Tape() { current_ptr() = previous_; }

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* current() { return current_ptr(); }

    void record(Tensor output, std::function<void()> backward_fn) {
        nodes_.push_back(Node{output.impl(), std::move(backward_fn)});
    }

    std::size_t size() const { return nodes_.size(); }

    void clear() { nodes_.clear(); }

    // Seeds d(loss)/d(loss) = 1 and replays the tape in reverse recording
    // order. Leaf gradients accumulate across repeated calls; gradients of
    // recorded intermediates are reset on every call.
    void backward(const Tensor& loss) {
        if (!loss.is_scalar())
            throw TensorError("backward: loss must be scalar, got " + shape_str(loss.shape()));
        if (nodes_.empty() && !loss.requires_grad())
            throw TensorError("backward: tape is empty");
        for (auto& n : nodes_) {
            n.output->ensure_grad();
            std::fill(n.output->grad.begin(), n.output->grad.end(), 0.0);
        }
        loss.impl()->ensure_grad();
        loss.impl()->grad[0] += 1.0;
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
            if (it->backward_fn) it->backward_fn();
    }

private:
    struct Node {
        std::shared_ptr<detail::TensorImpl> output;
        std::function<void()> backward_fn;
    };

    static Tape*& current_ptr() {
        static thread_local Tape* cur = nullptr;
        return cur;
    }

    std::vector<Node> nodes_;
    Tape* previous_ = nullptr;
};

namespace detail {

inline bool grad_enabled(std::initializer_list<Tensor> inputs) {
    if (!Tape::current()) return false;
    for (const auto& t : inputs)
        if (t.requires_grad()) return true;
    return false;
}

inline void finalize(Tensor& out, std::initializer_list<Tensor> inputs,
                     std::function<void()> backward_fn, const char* opname) {
#if DAGNET_CHECK_FINITE
    for (double v : out.data())
        if (!std::isfinite(v))
            throw TensorError(std::string(opname) + ": non-finite value in output");
#else
    (void)opname;
#endif
    if (grad_enabled(inputs)) {
        out.set_requires_grad(true);
        Tape::current()->record(out, std::move(backward_fn));
    }
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* opname) {
    if (a.shape() != b.shape())
        throw TensorError(std::string(opname) + ": shape mismatch " + shape_str(a.shape()) +
                          " vs " + shape_str(b.shape()));
}

inline void accumulate(const std::shared_ptr<TensorImpl>& t, const std::vector<double>& g) {
    if (!t->requires_grad) return;
    t->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) t->grad[i] += g[i];
}

} // namespace detail

// ---- binary elementwise ----

inline Tensor add(const Tensor& a, const Tensor& b) {
    // trailing-vector broadcast: [m,n] + [n] adds b to every row of a
    if (a.rank() == 2 && b.rank() == 1 && a.dim(1) == b.dim(0)) {
        const std::size_t m = a.dim(0), n = a.dim(1);
        Tensor out = Tensor::zeros({m, n});
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < n; ++c)
                out.data()[r * n + c] = a.data()[r * n + c] + b.data()[c];
        auto ai = a.impl(), bi = b.impl(), oi = out.impl();
        detail::finalize(out, {a, b}, [ai, bi, oi, m, n]() {
            if (ai->requires_grad) {
                ai->ensure_grad();
                for (std::size_t i = 0; i < m * n; ++i) ai->grad[i] += oi->grad[i];
            }
            if (bi->requires_grad) {
                bi->ensure_grad();
                for (std::size_t r = 0; r < m; ++r)
                    for (std::size_t c = 0; c < n; ++c)
                        bi->grad[c] += oi->grad[r * n + c];
            }
        }, "add");
        return out;
    }
    detail::require_same_shape(a, b, "add");
    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    detail::finalize(out, {a, b}, [ai, bi, oi]() {
        detail::accumulate(ai, oi->grad);
        detail::accumulate(bi, oi->grad);
    }, "add");
    return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "sub");
    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    detail::finalize(out, {a, b}, [ai, bi, oi]() {
        detail::accumulate(ai, oi->grad);
        if (bi->requires_grad) {
            bi->ensure_grad();
            for (std::size_t i = 0; i < oi->grad.size(); ++i) bi->grad[i] -= oi->grad[i];
        }
    }, "sub");
    return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "mul");
    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    detail::finalize(out, {a, b}, [ai, bi, oi]() {
        if (ai->requires_grad) {
            ai->ensure_grad();
            for (std::size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i] * bi->data[i];
        }
        if (bi->requires_grad) {
            bi->ensure_grad();
            for (std::size_t i = 0; i < oi->grad.size(); ++i) bi->grad[i] += oi->grad[i] * ai->data[i];
        }
    }, "mul");
    return out;
}

// ---- scalar forms ----

inline Tensor mul_scalar(const Tensor& a, double c) {
    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] * c;
    auto ai = a.impl(), oi = out.impl();
    detail::finalize(out, {a}, [ai, oi, c]() {
        if (!ai->requires_grad) return;
        ai->ensure_grad();
        for (std::size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i] * c;
    }, "mul_scalar");
    return out;
}

inline Tensor add_scalar(const Tensor& a, double c) {
    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] + c;
    auto ai = a.impl(), oi = out.impl();
    detail::finalize(out, {a}, [ai, oi]() { detail::accumulate(ai, oi->grad); }, "add_scalar");
    return out;
}

// c - a, elementwise
inline Tensor rsub_scalar(double c, const Tensor& a) {
    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = c - a.data()[i];
    auto ai = a.impl(), oi = out.impl();
    detail::finalize(out, {a}, [ai, oi]() {
        if (!ai->requires_grad) return;
        ai->ensure_grad();
        for (std::size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] -= oi->grad[i];
    }, "rsub_scalar");
    return out;
}

inline Tensor neg(const Tensor& a) { return mul_scalar(a, -1.0); }

// ---- unary elementwise ----

namespace detail {

template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& a, Fwd fwd, Bwd dfd, const char* opname) {
    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = fwd(a.data()[i]);
    auto ai = a.impl(), oi = out.impl();
    finalize(out, {a}, [ai, oi, dfd]() {
        if (!ai->requires_grad) return;
        ai->ensure_grad();
        for (std::size_t i = 0; i < oi->grad.size(); ++i)
            ai->grad[i] += oi->grad[i] * dfd(ai->data[i], oi->data[i]);
    }, opname);
    return out;
}

} // namespace detail

inline Tensor exp(const Tensor& a) {
    return detail::unary_op(a, [](double x) { return std::exp(x); },
                            [](double, double y) { return y; }, "exp");
}

inline Tensor log(const Tensor& a) {
    for (double v : a.data())
        if (v <= 0.0) throw TensorError("log: non-positive input " + std::to_string(v));
    return detail::unary_op(a, [](double x) { return std::log(x); },
                            [](double x, double) { return 1.0 / x; }, "log");
}

inline Tensor tanh(const Tensor& a) {
    return detail::unary_op(a, [](double x) { return std::tanh(x); },
                            [](double, double y) { return 1.0 - y * y; }, "tanh");
}

inline Tensor sigmoid(const Tensor& a) {
    return detail::unary_op(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                            [](double, double y) { return y * (1.0 - y); }, "sigmoid");
}

inline Tensor relu(const Tensor& a) {
    return detail::unary_op(a, [](double x) { return x > 0.0 ? x : 0.0; },
                            [](double x, double) { return x > 0.0 ? 1.0 : 0.0; }, "relu");
}

inline Tensor leaky_relu(const Tensor& a, double slope) {
    return detail::unary_op(a, [slope](double x) { return x > 0.0 ? x : slope * x; },
                            [slope](double x, double) { return x > 0.0 ? 1.0 : slope; }, "leaky_relu");
}

// hardtanh-style clamp; gradient passes through strictly inside [lo, hi]
inline Tensor clamp(const Tensor& a, double lo, double hi) {
    if (lo > hi) throw TensorError("clamp: lo > hi");
    return detail::unary_op(a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
                            [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; },
                            "clamp");
}

inline Tensor clamp_min(const Tensor& a, double lo) {
    return detail::unary_op(a, [lo](double x) { return std::max(x, lo); },
                            [lo](double x, double) { return x >= lo ? 1.0 : 0.0; }, "clamp_min");
}

// ---- matrix product ----

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw TensorError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                          shape_str(b.shape()));
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += a.data()[i * k + t] * b.data()[t * n + j];
            out.data()[i * n + j] = acc;
        }
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    detail::finalize(out, {a, b}, [ai, bi, oi, m, k, n]() {
        if (ai->requires_grad) {
            ai->ensure_grad();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t t = 0; t < k; ++t) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += oi->grad[i * n + j] * bi->data[t * n + j];
                    ai->grad[i * k + t] += acc;
                }
        }
        if (bi->requires_grad) {
            bi->ensure_grad();
            for (std::size_t t = 0; t < k; ++t)
                for (std::size_t j = 0; j < n; ++j) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < m; ++i) acc += ai->data[i * k + t] * oi->grad[i * n + j];
                    bi->grad[t * n + j] += acc;
                }
        }
    }, "matmul");
    return out;
}

inline Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw TensorError("transpose: tensor " + shape_str(a.shape()) + " is not 2-D");
    const std::size_t m = a.dim(0), n = a.dim(1);
    Tensor out = Tensor::zeros({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.data()[j * m + i] = a.data()[i * n + j];
    auto ai = a.impl(), oi = out.impl();
    detail::finalize(out, {a}, [ai, oi, m, n]() {
        if (!ai->requires_grad) return;
        ai->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) ai->grad[i * n + j] += oi->grad[j * m + i];
    }, "transpose");
    return out;
}

// ---- reductions ----

inline Tensor sum(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.data()) acc += v;
    Tensor out = Tensor::scalar(acc);
    auto ai = a.impl(), oi = out.impl();
    detail::finalize(out, {a}, [ai, oi]() {
        if (!ai->requires_grad) return;
        ai->ensure_grad();
        for (std::size_t i = 0; i < ai->grad.size(); ++i) ai->grad[i] += oi->grad[0];
    }, "sum");
    return out;
}

// sum of a 2-D tensor along one axis; axis=0 -> [cols], axis=1 -> [rows]
inline Tensor sum_axis(const Tensor& a, std::size_t axis) {
    if (a.rank() != 2) throw TensorError("sum_axis: tensor " + shape_str(a.shape()) + " is not 2-D");
    if (axis > 1) throw TensorError("sum_axis: axis out of range");
    const std::size_t m = a.dim(0), n = a.dim(1);
    Tensor out = Tensor::zeros({axis == 0 ? n : m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out.data()[axis == 0 ? j : i] += a.data()[i * n + j];
    auto ai = a.impl(), oi = out.impl();
    detail::finalize(out, {a}, [ai, oi, m, n, axis]() {
        if (!ai->requires_grad) return;
        ai->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                ai->grad[i * n + j] += oi->grad[axis == 0 ? j : i];
    }, "sum_axis");
    return out;
}

inline Tensor mean(const Tensor& a) {
    if (a.numel() == 0) throw TensorError("mean: empty tensor");
    return mul_scalar(sum(a), 1.0 / static_cast<double>(a.numel()));
}

// ---- softmax ----

// Numerically stabilized softmax along the given axis. Rank 1 or 2.
inline Tensor softmax(const Tensor& a, std::size_t axis = 0) {
    if (a.rank() != 1 && a.rank() != 2)
        throw TensorError("softmax: rank must be 1 or 2, got " + shape_str(a.shape()));
    if (axis >= a.rank()) throw TensorError("softmax: axis out of range");

    const std::size_t lines = a.rank() == 1 ? 1 : a.dim(1 - axis);
    const std::size_t len = a.rank() == 1 ? a.dim(0) : a.dim(axis);
    const bool along_rows = (a.rank() == 1) || axis == 1;
    // stride layout for walking a "line" along the softmax axis
    auto index = [lines, len, along_rows](std::size_t line, std::size_t k) {
        return along_rows ? line * len + k : k * lines + line;
    };

    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t l = 0; l < lines; ++l) {
        double mx = a.data()[index(l, 0)];
        for (std::size_t k = 1; k < len; ++k) mx = std::max(mx, a.data()[index(l, k)]);
        double z = 0.0;
        for (std::size_t k = 0; k < len; ++k) z += std::exp(a.data()[index(l, k)] - mx);
        for (std::size_t k = 0; k < len; ++k)
            out.data()[index(l, k)] = std::exp(a.data()[index(l, k)] - mx) / z;
    }
    auto ai = a.impl(), oi = out.impl();
    detail::finalize(out, {a}, [ai, oi, lines, len, index]() {
        if (!ai->requires_grad) return;
        ai->ensure_grad();
        for (std::size_t l = 0; l < lines; ++l) {
            double dot = 0.0;
            for (std::size_t k = 0; k < len; ++k) {
                std::size_t idx = index(l, k);
                dot += oi->grad[idx] * oi->data[idx];
            }
            for (std::size_t k = 0; k < len; ++k) {
                std::size_t idx = index(l, k);
                ai->grad[idx] += oi->data[idx] * (oi->grad[idx] - dot);
            }
        }
    }, "softmax");
    return out;
}

// ---- concatenation ----

inline Tensor concat(const std::vector<Tensor>& tensors, std::size_t axis) {
    if (tensors.empty()) throw TensorError("concat: no tensors");
    const std::size_t rank = tensors[0].rank();
    if (axis >= rank) throw TensorError("concat: axis out of range");
    for (const auto& t : tensors) {
        if (t.rank() != rank) throw TensorError("concat: rank mismatch");
        for (std::size_t d = 0; d < rank; ++d)
            if (d != axis && t.dim(d) != tensors[0].dim(d))
                throw TensorError("concat: dimension mismatch " + shape_str(t.shape()) + " vs " +
                                  shape_str(tensors[0].shape()));
    }
    Shape out_shape = tensors[0].shape();
    out_shape[axis] = 0;
    for (const auto& t : tensors) out_shape[axis] += t.dim(axis);

    // outer = product of dims before axis, inner = product after
    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= out_shape[d];
    for (std::size_t d = axis + 1; d < rank; ++d) inner *= out_shape[d];

    Tensor out = Tensor::zeros(out_shape);
    std::size_t offset = 0;
    for (const auto& t : tensors) {
        const std::size_t ext = t.dim(axis);
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t e = 0; e < ext; ++e)
                for (std::size_t i = 0; i < inner; ++i)
                    out.data()[(o * out_shape[axis] + offset + e) * inner + i] =
                        t.data()[(o * ext + e) * inner + i];
        offset += ext;
    }

    std::vector<std::shared_ptr<detail::TensorImpl>> impls;
    for (const auto& t : tensors) impls.push_back(t.impl());
    auto oi = out.impl();
    std::size_t total_ext = out_shape[axis];
    bool any_grad = false;
    for (const auto& t : tensors) any_grad = any_grad || t.requires_grad();
    if (Tape::current() && any_grad) {
        out.set_requires_grad(true);
        Tape::current()->record(out, [impls, oi, outer, inner, total_ext, axis]() {
            std::size_t offset = 0;
            for (const auto& ti : impls) {
                const std::size_t ext = ti->shape[axis];
                if (ti->requires_grad) {
                    ti->ensure_grad();
                    for (std::size_t o = 0; o < outer; ++o)
                        for (std::size_t e = 0; e < ext; ++e)
                            for (std::size_t i = 0; i < inner; ++i)
                                ti->grad[(o * ext + e) * inner + i] +=
                                    oi->grad[(o * total_ext + offset + e) * inner + i];
                }
                offset += ext;
            }
        });
    }
#if DAGNET_CHECK_FINITE
    for (double v : out.data())
        if (!std::isfinite(v)) throw TensorError("concat: non-finite value in output");
#endif
    return out;
}

// ---- row gather / scatter (2-D) ----

inline Tensor gather_rows(const Tensor& a, const std::vector<std::size_t>& rows) {
    if (a.rank() != 2) throw TensorError("gather_rows: tensor is not 2-D");
    const std::size_t n = a.dim(1);
    Tensor out = Tensor::zeros({rows.size(), n});
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= a.dim(0)) throw TensorError("gather_rows: row index out of range");
        for (std::size_t c = 0; c < n; ++c) out.data()[r * n + c] = a.data()[rows[r] * n + c];
    }
    auto ai = a.impl(), oi = out.impl();
    detail::finalize(out, {a}, [ai, oi, rows, n]() {
        if (!ai->requires_grad) return;
        ai->ensure_grad();
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < n; ++c) ai->grad[rows[r] * n + c] += oi->grad[r * n + c];
    }, "gather_rows");
    return out;
}

// contiguous column slice of a 2-D tensor: columns [start, start+len)
inline Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t len) {
    if (a.rank() != 2) throw TensorError("slice_cols: tensor is not 2-D");
    if (start + len > a.dim(1)) throw TensorError("slice_cols: range out of bounds");
    const std::size_t m = a.dim(0), n = a.dim(1);
    Tensor out = Tensor::zeros({m, len});
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < len; ++c) out.data()[r * len + c] = a.data()[r * n + start + c];
    auto ai = a.impl(), oi = out.impl();
    detail::finalize(out, {a}, [ai, oi, m, n, start, len]() {
        if (!ai->requires_grad) return;
        ai->ensure_grad();
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < len; ++c) ai->grad[r * n + start + c] += oi->grad[r * len + c];
    }, "slice_cols");
    return out;
}

// places row r of a at row rows[r] of an otherwise-zero [n_rows, cols] tensor
inline Tensor scatter_rows(const Tensor& a, const std::vector<std::size_t>& rows, std::size_t n_rows) {
    if (a.rank() != 2) throw TensorError("scatter_rows: tensor is not 2-D");
    if (rows.size() != a.dim(0)) throw TensorError("scatter_rows: row count mismatch");
    const std::size_t n = a.dim(1);
    Tensor out = Tensor::zeros({n_rows, n});
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= n_rows) throw TensorError("scatter_rows: row index out of range");
        for (std::size_t c = 0; c < n; ++c) out.data()[rows[r] * n + c] = a.data()[r * n + c];
    }
    auto ai = a.impl(), oi = out.impl();
    detail::finalize(out, {a}, [ai, oi, rows, n]() {
        if (!ai->requires_grad) return;
        ai->ensure_grad();
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < n; ++c) ai->grad[r * n + c] += oi->grad[rows[r] * n + c];
    }, "scatter_rows");
    return out;
}

// ---- operators ----

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double c) { return mul_scalar(a, c); }
inline Tensor operator*(double c, const Tensor& a) { return mul_scalar(a, c); }

} // namespace dagnet
