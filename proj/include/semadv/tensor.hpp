#ifndef SEMADV_TENSOR_HPP
#define SEMADV_TENSOR_HPP

// Dense N-d tensors with tape-based reverse-mode autodiff.
// Templated on the scalar type: float for training/attacks, double for
// gradient-check oracles.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace semadv {

using Shape = std::vector<int>;

inline int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int d : s) {
        if (d <= 0) throw std::invalid_argument("tensor: non-positive extent in shape");
        n *= d;
    }
    return n;
}

inline bool same_shape(const Shape& a, const Shape& b) { return a == b; }

inline std::string shape_str(const Shape& s) {
    std::string out = "(";
    for (size_t i = 0; i < s.size(); ++i) {
        out += std::to_string(s[i]);
        if (i + 1 < s.size()) out += ",";
    }
    return out + ")";
}

namespace detail {

template <typename T>
struct TensorNode {
    Shape shape;
    std::vector<T> values;
    std::vector<T> grad;   // allocated on first accumulation
    bool requires_grad = false;
    uint64_t tape_id = 0;  // id of the tape that recorded this node as a result

    int64_t numel() const { return static_cast<int64_t>(values.size()); }

    std::vector<T>& grad_buffer() {
        if (grad.size() != values.size()) grad.assign(values.size(), T(0));
        return grad;
    }
};

}  // namespace detail

template <typename T>
class TapeT;

template <typename T>
class TensorT {
  public:
    using Node = detail::TensorNode<T>;

    TensorT() = default;

    static TensorT zeros(Shape shape) { return full(std::move(shape), T(0)); }

    static TensorT full(Shape shape, T v) {
        TensorT t;
        t.node_ = std::make_shared<Node>();
        t.node_->values.assign(static_cast<size_t>(shape_numel(shape)), v);
        t.node_->shape = std::move(shape);
        return t;
    }

    static TensorT from(Shape shape, std::vector<T> values) {
        if (static_cast<int64_t>(values.size()) != shape_numel(shape))
            throw std::invalid_argument("tensor: values length does not match shape " + shape_str(shape));
        TensorT t;
        t.node_ = std::make_shared<Node>();
        t.node_->shape = std::move(shape);
        t.node_->values = std::move(values);
        return t;
    }

    static TensorT scalar(T v) { return from({1}, {v}); }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int64_t numel() const { return node_->numel(); }
    std::vector<T>& values() { return node_->values; }
    const std::vector<T>& values() const { return node_->values; }
    T* data() { return node_->values.data(); }
    const T* data() const { return node_->values.data(); }

    T item() const {
        if (numel() != 1) throw std::invalid_argument("tensor: item() on non-scalar of shape " + shape_str(shape()));
        return node_->values[0];
    }

    bool requires_grad() const { return node_->requires_grad; }
    TensorT& set_requires_grad(bool f) {
        node_->requires_grad = f;
        return *this;
    }

    std::vector<T>& grad() { return node_->grad_buffer(); }
    const std::vector<T>& grad() const { return node_->grad; }
    bool has_grad() const { return node_->grad.size() == node_->values.size(); }
    void zero_grad() { node_->grad.assign(node_->values.size(), T(0)); }

    // Copy of values/shape only; drops grad state and tape association.
    TensorT detached_clone() const {
        TensorT t = from(node_->shape, node_->values);
        return t;
    }

    std::shared_ptr<Node> node() const { return node_; }

  private:
    std::shared_ptr<Node> node_;
    friend class TapeT<T>;
};

// Ordered record of executed primitives; replaying backward visits them in
// exact reverse execution order. One tape per thread at a time.
template <typename T>
class TapeT {
  public:
    struct Op {
        const char* kind;
        std::function<void()> backward;
    };

    TapeT() : id_(next_id()) {}
    TapeT(const TapeT&) = delete;
    TapeT& operator=(const TapeT&) = delete;

    static TapeT*& current() {
        thread_local TapeT* cur = nullptr;
        return cur;
    }

    size_t size() const { return ops_.size(); }
    bool empty() const { return ops_.empty(); }
    void clear() { ops_.clear(); }

    void record(const char* kind, TensorT<T>& result, std::function<void()> backward) {
        result.node_->tape_id = id_;
        ops_.push_back(Op{kind, std::move(backward)});
    }

    // Accumulates d(loss)/d(tensor) into every requires_grad tensor reachable
    // from loss; consumes the tape.
    void backward_from(TensorT<T>& loss) {
        if (loss.numel() != 1) throw std::invalid_argument("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
        if (ops_.empty()) throw std::runtime_error("backward: tape is empty");
        if (loss.node()->tape_id != id_) throw std::runtime_error("backward: loss is detached from this tape");
        loss.grad();  // ensure allocated
        loss.node()->grad[0] += T(1);
        for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) it->backward();
        ops_.clear();
    }

  private:
    static uint64_t next_id() {
        static std::atomic<uint64_t> counter{1};
        return counter.fetch_add(1);
    }

    uint64_t id_;
    std::vector<Op> ops_;
};

// RAII activation of a tape for the current thread.
template <typename T>
class TapeScope {
  public:
    explicit TapeScope(TapeT<T>& tape) : prev_(TapeT<T>::current()) { TapeT<T>::current() = &tape; }
    ~TapeScope() { TapeT<T>::current() = prev_; }
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

  private:
    TapeT<T>* prev_;
};

// Suppresses recording inside a scope (pure forward evaluation).
template <typename T>
class NoTapeScope {
  public:
    NoTapeScope() : prev_(TapeT<T>::current()) { TapeT<T>::current() = nullptr; }
    ~NoTapeScope() { TapeT<T>::current() = prev_; }
    NoTapeScope(const NoTapeScope&) = delete;
    NoTapeScope& operator=(const NoTapeScope&) = delete;

  private:
    TapeT<T>* prev_;
};

namespace detail {

template <typename T>
inline void check_finite(const TensorT<T>& t, const char* op_kind) {
    for (T v : t.values()) {
        if (!std::isfinite(v)) throw std::runtime_error(std::string("non-finite output produced by op '") + op_kind + "'");
    }
}

template <typename T>
inline bool grad_wanted(const TensorT<T>& t) {
    return t.requires_grad();
}

// Shared post-op bookkeeping: finite scan, requires_grad propagation, taping.
template <typename T>
inline void finish_op(const char* kind, TensorT<T>& result, bool any_grad, std::function<void()> backward) {
    check_finite(result, kind);
    TapeT<T>* tape = TapeT<T>::current();
    if (tape && any_grad) {
        result.set_requires_grad(true);
        tape->record(kind, result, std::move(backward));
    }
}

template <typename T>
inline void accumulate(TensorT<T>& t, const std::vector<T>& delta) {
    auto& g = t.grad();
    for (size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise primitives
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> add(TensorT<T> a, TensorT<T> b) {
    if (!same_shape(a.shape(), b.shape()))
        throw std::invalid_argument("add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    TensorT<T> out = TensorT<T>::zeros(a.shape());
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
    bool ag = a.requires_grad(), bg = b.requires_grad();
    detail::finish_op<T>("add", out, ag || bg, [a, b, out, ag, bg]() mutable {
        const auto& g = out.node()->grad;
        if (g.empty()) return;  // no gradient reached this result
        if (ag) detail::accumulate(a, g);
        if (bg) detail::accumulate(b, g);
    });
    return out;
}

template <typename T>
TensorT<T> sub(TensorT<T> a, TensorT<T> b) {
    if (!same_shape(a.shape(), b.shape()))
        throw std::invalid_argument("sub: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    TensorT<T> out = TensorT<T>::zeros(a.shape());
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
    bool ag = a.requires_grad(), bg = b.requires_grad();
    detail::finish_op<T>("sub", out, ag || bg, [a, b, out, ag, bg]() mutable {
        const auto& g = out.node()->grad;
        if (g.empty()) return;  // no gradient reached this result
        if (ag) detail::accumulate(a, g);
        if (bg) {
            auto& gb = b.grad();
            for (size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i];
        }
    });
    return out;
}

// Elementwise product; b may also be a 1-element tensor broadcast over a.
template <typename T>
TensorT<T> mul(TensorT<T> a, TensorT<T> b) {
    const bool b_scalar = b.numel() == 1 && a.numel() != 1;
    if (!b_scalar && !same_shape(a.shape(), b.shape()))
        throw std::invalid_argument("mul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    TensorT<T> out = TensorT<T>::zeros(a.shape());
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    const int64_t n = out.numel();
    if (b_scalar) {
        const T s = pb[0];
        for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * s;
    } else {
        for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
    }
    bool ag = a.requires_grad(), bg = b.requires_grad();
    detail::finish_op<T>("mul", out, ag || bg, [a, b, out, ag, bg, b_scalar]() mutable {
        const auto& g = out.node()->grad;
        if (g.empty()) return;  // no gradient reached this result
        const T* pa = a.data();
        const T* pb = b.data();
        if (b_scalar) {
            if (ag) {
                auto& ga = a.grad();
                for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * pb[0];
            }
            if (bg) {
                T acc = 0;
                for (size_t i = 0; i < g.size(); ++i) acc += g[i] * pa[i];
                b.grad()[0] += acc;
            }
        } else {
            if (ag) {
                auto& ga = a.grad();
                for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * pb[i];
            }
            if (bg) {
                auto& gb = b.grad();
                for (size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * pa[i];
            }
        }
    });
    return out;
}

// Elementwise quotient; b may be a 1-element tensor broadcast over a.
template <typename T>
TensorT<T> div(TensorT<T> a, TensorT<T> b) {
    const bool b_scalar = b.numel() == 1 && a.numel() != 1;
    if (!b_scalar && !same_shape(a.shape(), b.shape()))
        throw std::invalid_argument("div: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    TensorT<T> out = TensorT<T>::zeros(a.shape());
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    const int64_t n = out.numel();
    if (b_scalar) {
        const T s = pb[0];
        for (int64_t i = 0; i < n; ++i) po[i] = pa[i] / s;
    } else {
        for (int64_t i = 0; i < n; ++i) po[i] = pa[i] / pb[i];
    }
    bool ag = a.requires_grad(), bg = b.requires_grad();
    detail::finish_op<T>("div", out, ag || bg, [a, b, out, ag, bg, b_scalar]() mutable {
        const auto& g = out.node()->grad;
        if (g.empty()) return;  // no gradient reached this result
        const T* pa = a.data();
        const T* pb = b.data();
        if (b_scalar) {
            const T s = pb[0];
            if (ag) {
                auto& ga = a.grad();
                for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] / s;
            }
            if (bg) {
                T acc = 0;
                for (size_t i = 0; i < g.size(); ++i) acc -= g[i] * pa[i] / (s * s);
                b.grad()[0] += acc;
            }
        } else {
            if (ag) {
                auto& ga = a.grad();
                for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] / pb[i];
            }
            if (bg) {
                auto& gb = b.grad();
                for (size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i] * pa[i] / (pb[i] * pb[i]);
            }
        }
    });
    return out;
}

template <typename T>
TensorT<T> scalar_mul(TensorT<T> a, T c) {
    TensorT<T> out = TensorT<T>::zeros(a.shape());
    const T* pa = a.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * c;
    bool ag = a.requires_grad();
    detail::finish_op<T>("scalar_mul", out, ag, [a, out, c]() mutable {
        const auto& g = out.node()->grad;
        if (g.empty()) return;  // no gradient reached this result
        auto& ga = a.grad();
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * c;
    });
    return out;
}

template <typename T>
TensorT<T> relu(TensorT<T> a) {
    TensorT<T> out = TensorT<T>::zeros(a.shape());
    const T* pa = a.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] > T(0) ? pa[i] : T(0);
    bool ag = a.requires_grad();
    // subgradient at 0 is 0
    detail::finish_op<T>("relu", out, ag, [a, out]() mutable {
        const auto& g = out.node()->grad;
        if (g.empty()) return;  // no gradient reached this result
        const T* pa = a.data();
        auto& ga = a.grad();
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += pa[i] > T(0) ? g[i] : T(0);
    });
    return out;
}

template <typename T>
TensorT<T> silu(TensorT<T> a) {
    TensorT<T> out = TensorT<T>::zeros(a.shape());
    const T* pa = a.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) {
        const T s = T(1) / (T(1) + std::exp(-pa[i]));
        po[i] = pa[i] * s;
    }
    bool ag = a.requires_grad();
    detail::finish_op<T>("silu", out, ag, [a, out]() mutable {
        const auto& g = out.node()->grad;
        if (g.empty()) return;  // no gradient reached this result
        const T* pa = a.data();
        auto& ga = a.grad();
        for (size_t i = 0; i < ga.size(); ++i) {
            const T s = T(1) / (T(1) + std::exp(-pa[i]));
            ga[i] += g[i] * s * (T(1) + pa[i] * (T(1) - s));
        }
    });
    return out;
}

template <typename T>
TensorT<T> square(TensorT<T> a) {
    TensorT<T> out = TensorT<T>::zeros(a.shape());
    const T* pa = a.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * pa[i];
    bool ag = a.requires_grad();
    detail::finish_op<T>("square", out, ag, [a, out]() mutable {
        const auto& g = out.node()->grad;
        if (g.empty()) return;  // no gradient reached this result
        const T* pa = a.data();
        auto& ga = a.grad();
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * T(2) * pa[i];
    });
    return out;
}

template <typename T>
TensorT<T> sqrt_op(TensorT<T> a) {
    TensorT<T> out = TensorT<T>::zeros(a.shape());
    const T* pa = a.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = std::sqrt(pa[i]);
    bool ag = a.requires_grad();
    detail::finish_op<T>("sqrt", out, ag, [a, out]() mutable {
        const auto& g = out.node()->grad;
        if (g.empty()) return;  // no gradient reached this result
        const T* po = out.data();
        auto& ga = a.grad();
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] / (T(2) * po[i]);
    });
    return out;
}

template <typename T>
TensorT<T> log_op(TensorT<T> a) {
    TensorT<T> out = TensorT<T>::zeros(a.shape());
    const T* pa = a.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = std::log(pa[i]);
    bool ag = a.requires_grad();
    detail::finish_op<T>("log", out, ag, [a, out]() mutable {
        const auto& g = out.node()->grad;
        if (g.empty()) return;  // no gradient reached this result
        const T* pa = a.data();
        auto& ga = a.grad();
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] / pa[i];
    });
    return out;
}

template <typename T>
TensorT<T> exp_op(TensorT<T> a) {
    TensorT<T> out = TensorT<T>::zeros(a.shape());
    const T* pa = a.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = std::exp(pa[i]);
    bool ag = a.requires_grad();
    detail::finish_op<T>("exp", out, ag, [a, out]() mutable {
        const auto& g = out.node()->grad;
        if (g.empty()) return;  // no gradient reached this result
        const T* po = out.data();
        auto& ga = a.grad();
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * po[i];
    });
    return out;
}

// Gradient passes where lo <= v <= hi (boundary included), zero outside.
template <typename T>
TensorT<T> clamp(TensorT<T> a, T lo, T hi) {
    if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
    TensorT<T> out = TensorT<T>::zeros(a.shape());
    const T* pa = a.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = std::min(hi, std::max(lo, pa[i]));
    bool ag = a.requires_grad();
    detail::finish_op<T>("clamp", out, ag, [a, out, lo, hi]() mutable {
        const auto& g = out.node()->grad;
        if (g.empty()) return;  // no gradient reached this result
        const T* pa = a.data();
        auto& ga = a.grad();
        for (size_t i = 0; i < ga.size(); ++i)
            if (pa[i] >= lo && pa[i] <= hi) ga[i] += g[i];
    });
    return out;
}

// ---------------------------------------------------------------------------
// Reductions and shape ops
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> sum(TensorT<T> a) {
    T acc = 0;
    for (T v : a.values()) acc += v;
    TensorT<T> out = TensorT<T>::scalar(acc);
    bool ag = a.requires_grad();
    detail::finish_op<T>("sum", out, ag, [a, out]() mutable {
        if (out.node()->grad.empty()) return;  // no gradient reached this result
        const T g = out.node()->grad[0];
        auto& ga = a.grad();
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
    return out;
}

template <typename T>
TensorT<T> mean(TensorT<T> a) {
    T acc = 0;
    for (T v : a.values()) acc += v;
    const T inv_n = T(1) / T(a.numel());
    TensorT<T> out = TensorT<T>::scalar(acc * inv_n);
    bool ag = a.requires_grad();
    detail::finish_op<T>("mean", out, ag, [a, out, inv_n]() mutable {
        if (out.node()->grad.empty()) return;  // no gradient reached this result
        const T g = out.node()->grad[0] * inv_n;
        auto& ga = a.grad();
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
    return out;
}

template <typename T>
TensorT<T> reshape(TensorT<T> a, Shape shape) {
    if (shape_numel(shape) != a.numel())
        throw std::invalid_argument("reshape: element count mismatch " + shape_str(a.shape()) + " -> " + shape_str(shape));
    TensorT<T> out = TensorT<T>::from(shape, a.values());
    bool ag = a.requires_grad();
    detail::finish_op<T>("reshape", out, ag, [a, out]() mutable {
        if (out.node()->grad.empty()) return;  // no gradient reached this result
        detail::accumulate(a, out.node()->grad);
    });
    return out;
}

template <typename T>
TensorT<T> concat(TensorT<T> a, TensorT<T> b, int axis) {
    if (a.shape().size() != b.shape().size())
        throw std::invalid_argument("concat: rank mismatch");
    const int rank = static_cast<int>(a.shape().size());
    if (axis < 0 || axis >= rank) throw std::invalid_argument("concat: axis out of range");
    for (int d = 0; d < rank; ++d)
        if (d != axis && a.shape()[d] != b.shape()[d])
            throw std::invalid_argument("concat: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));

    Shape out_shape = a.shape();
    out_shape[axis] += b.shape()[axis];
    TensorT<T> out = TensorT<T>::zeros(out_shape);

    int64_t outer = 1, inner = 1;
    for (int d = 0; d < axis; ++d) outer *= a.shape()[d];
    for (int d = axis + 1; d < rank; ++d) inner *= a.shape()[d];
    const int64_t a_block = a.shape()[axis] * inner;
    const int64_t b_block = b.shape()[axis] * inner;

    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    for (int64_t o = 0; o < outer; ++o) {
        std::copy(pa + o * a_block, pa + (o + 1) * a_block, po + o * (a_block + b_block));
        std::copy(pb + o * b_block, pb + (o + 1) * b_block, po + o * (a_block + b_block) + a_block);
    }
    bool ag = a.requires_grad(), bg = b.requires_grad();
    detail::finish_op<T>("concat", out, ag || bg, [a, b, out, ag, bg, outer, a_block, b_block]() mutable {
        const auto& g = out.node()->grad;
        if (g.empty()) return;  // no gradient reached this result
        if (ag) {
            auto& ga = a.grad();
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t i = 0; i < a_block; ++i) ga[o * a_block + i] += g[o * (a_block + b_block) + i];
        }
        if (bg) {
            auto& gb = b.grad();
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t i = 0; i < b_block; ++i) gb[o * b_block + i] += g[o * (a_block + b_block) + a_block + i];
        }
    });
    return out;
}

template <typename T>
TensorT<T> softmax(TensorT<T> a, int axis) {
    const int rank = static_cast<int>(a.shape().size());
    if (axis < 0 || axis >= rank) throw std::invalid_argument("softmax: axis out of range");
    TensorT<T> out = TensorT<T>::zeros(a.shape());

    int64_t outer = 1, inner = 1;
    for (int d = 0; d < axis; ++d) outer *= a.shape()[d];
    for (int d = axis + 1; d < rank; ++d) inner *= a.shape()[d];
    const int64_t len = a.shape()[axis];

    const T* pa = a.data();
    T* po = out.data();
    for (int64_t o = 0; o < outer; ++o) {
        for (int64_t in = 0; in < inner; ++in) {
            const int64_t base = o * len * inner + in;
            T mx = pa[base];
            for (int64_t k = 1; k < len; ++k) mx = std::max(mx, pa[base + k * inner]);
            T denom = 0;
            for (int64_t k = 0; k < len; ++k) denom += std::exp(pa[base + k * inner] - mx);
            for (int64_t k = 0; k < len; ++k) po[base + k * inner] = std::exp(pa[base + k * inner] - mx) / denom;
        }
    }
    bool ag = a.requires_grad();
    detail::finish_op<T>("softmax", out, ag, [a, out, outer, inner, len]() mutable {
        const auto& g = out.node()->grad;
        if (g.empty()) return;  // no gradient reached this result
        const T* po = out.data();
        auto& ga = a.grad();
        for (int64_t o = 0; o < outer; ++o) {
            for (int64_t in = 0; in < inner; ++in) {
                const int64_t base = o * len * inner + in;
                T dot = 0;
                for (int64_t k = 0; k < len; ++k) dot += g[base + k * inner] * po[base + k * inner];
                for (int64_t k = 0; k < len; ++k)
                    ga[base + k * inner] += po[base + k * inner] * (g[base + k * inner] - dot);
            }
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Linear algebra and spatial primitives
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> matmul(TensorT<T> a, TensorT<T> b) {
    if (a.shape().size() != 2 || b.shape().size() != 2)
        throw std::invalid_argument("matmul: both operands must be rank 2");
    const int m = a.shape()[0], k = a.shape()[1];
    const int k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2) throw std::invalid_argument("matmul: inner dimension mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    TensorT<T> out = TensorT<T>::zeros({m, n});
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    for (int i = 0; i < m; ++i)
        for (int kk = 0; kk < k; ++kk) {
            const T av = pa[i * k + kk];
            for (int j = 0; j < n; ++j) po[i * n + j] += av * pb[kk * n + j];
        }
    bool ag = a.requires_grad(), bg = b.requires_grad();
    detail::finish_op<T>("matmul", out, ag || bg, [a, b, out, ag, bg, m, k, n]() mutable {
        const auto& g = out.node()->grad;
        if (g.empty()) return;  // no gradient reached this result
        const T* pa = a.data();
        const T* pb = b.data();
        if (ag) {
            auto& ga = a.grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    const T gv = g[i * n + j];
                    for (int kk = 0; kk < k; ++kk) ga[i * k + kk] += gv * pb[kk * n + j];
                }
        }
        if (bg) {
            auto& gb = b.grad();
            for (int i = 0; i < m; ++i)
                for (int kk = 0; kk < k; ++kk) {
                    const T av = pa[i * k + kk];
                    for (int j = 0; j < n; ++j) gb[kk * n + j] += av * g[i * n + j];
                }
        }
    });
    return out;
}

namespace detail {

// input copied into a zero-padded buffer once so the MAC loops are branch-free
template <typename T>
std::vector<T> pad_channels(const T* src, int c, int h, int w, int pad) {
    const int hp = h + 2 * pad, wp = w + 2 * pad;
    std::vector<T> out(static_cast<size_t>(c) * hp * wp, T(0));
    for (int cc = 0; cc < c; ++cc)
        for (int y = 0; y < h; ++y)
            std::copy(src + (cc * h + y) * w, src + (cc * h + y) * w + w,
                      out.data() + (static_cast<size_t>(cc) * hp + y + pad) * wp + pad);
    return out;
}

}  // namespace detail

// 2-d cross-correlation over a CxHxW input with a Co x Ci x Kh x Kw kernel,
// zero padding, optional per-output-channel bias of shape (Co).
template <typename T>
TensorT<T> conv2d(TensorT<T> x, TensorT<T> w, TensorT<T> bias, int stride, int pad) {
    if (x.shape().size() != 3 || w.shape().size() != 4)
        throw std::invalid_argument("conv2d: expected CxHxW input and CoxCixKhxKw kernel");
    if (stride < 1 || pad < 0) throw std::invalid_argument("conv2d: bad stride/pad");
    const int ci = x.shape()[0], h = x.shape()[1], wd = x.shape()[2];
    const int co = w.shape()[0], wci = w.shape()[1], kh = w.shape()[2], kw = w.shape()[3];
    if (ci != wci) throw std::invalid_argument("conv2d: channel mismatch " + shape_str(x.shape()) + " vs " + shape_str(w.shape()));
    const bool has_bias = bias.defined();
    if (has_bias && (bias.shape().size() != 1 || bias.shape()[0] != co))
        throw std::invalid_argument("conv2d: bias must have shape (Co)");
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (wd + 2 * pad - kw) / stride + 1;
    if (ho < 1 || wo < 1) throw std::invalid_argument("conv2d: kernel larger than padded input");
    const int hp = h + 2 * pad, wp = wd + 2 * pad;

    TensorT<T> out = TensorT<T>::zeros({co, ho, wo});
    const std::vector<T> padded = detail::pad_channels(x.data(), ci, h, wd, pad);
    const T* pw = w.data();
    T* po = out.data();

    constexpr int kRowBlock = 64;
    if (stride == 1 && wo <= kRowBlock) {
        // row-blocked path: one output row accumulates in a local buffer across
        // all input channels and taps, then stores once
        T acc[kRowBlock];
        for (int oc = 0; oc < co; ++oc) {
            T* out_map = po + oc * ho * wo;
            const T bv = has_bias ? bias.data()[oc] : T(0);
            for (int oy = 0; oy < ho; ++oy) {
                for (int ox = 0; ox < wo; ++ox) acc[ox] = bv;
                const T* ker_base = pw + static_cast<size_t>(oc) * ci * kh * kw;
                for (int icn = 0; icn < ci; ++icn) {
                    const T* in_map = padded.data() + (static_cast<size_t>(icn) * hp + oy) * wp;
                    const T* ker = ker_base + icn * kh * kw;
                    for (int ky = 0; ky < kh; ++ky) {
                        const T* in_row = in_map + ky * wp;
                        for (int kx = 0; kx < kw; ++kx) {
                            const T kv = ker[ky * kw + kx];
                            for (int ox = 0; ox < wo; ++ox) acc[ox] += kv * in_row[ox + kx];
                        }
                    }
                }
                T* out_row = out_map + oy * wo;
                for (int ox = 0; ox < wo; ++ox) out_row[ox] = acc[ox];
            }
        }
    } else {
        for (int oc = 0; oc < co; ++oc) {
            T* out_map = po + oc * ho * wo;
            if (has_bias) {
                const T bv = bias.data()[oc];
                for (int i = 0; i < ho * wo; ++i) out_map[i] = bv;
            }
            for (int icn = 0; icn < ci; ++icn) {
                const T* in_map = padded.data() + static_cast<size_t>(icn) * hp * wp;
                const T* ker = pw + (oc * ci + icn) * kh * kw;
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        const T kv = ker[ky * kw + kx];
                        if (kv == T(0)) continue;
                        for (int oy = 0; oy < ho; ++oy) {
                            const T* in_row = in_map + (oy * stride + ky) * wp + kx;
                            T* out_row = out_map + oy * wo;
                            for (int ox = 0; ox < wo; ++ox) out_row[ox] += kv * in_row[ox * stride];
                        }
                    }
                }
            }
        }
    }

    bool xg = x.requires_grad(), wg = w.requires_grad();
    bool bgr = has_bias && bias.requires_grad();
    detail::finish_op<T>("conv2d", out, xg || wg || bgr,
                         [x, w, bias, out, xg, wg, bgr, ci, h, wd, co, kh, kw, ho, wo, stride, pad, hp, wp]() mutable {
        const auto& g = out.node()->grad;
        if (g.empty()) return;  // no gradient reached this result
        const T* pw = w.data();
        if (bgr) {
            auto& gb = bias.grad();
            for (int oc = 0; oc < co; ++oc) {
                T acc = 0;
                const T* gm = g.data() + oc * ho * wo;
                for (int i = 0; i < ho * wo; ++i) acc += gm[i];
                gb[oc] += acc;
            }
        }
        if (wg) {
            const std::vector<T> padded = detail::pad_channels(x.data(), ci, h, wd, pad);
            auto& gw = w.grad();
            for (int oc = 0; oc < co; ++oc) {
                const T* gm = g.data() + oc * ho * wo;
                for (int icn = 0; icn < ci; ++icn) {
                    const T* in_map = padded.data() + static_cast<size_t>(icn) * hp * wp;
                    T* gker = gw.data() + (oc * ci + icn) * kh * kw;
                    for (int ky = 0; ky < kh; ++ky) {
                        for (int kx = 0; kx < kw; ++kx) {
                            T acc = 0;
                            for (int oy = 0; oy < ho; ++oy) {
                                const T* in_row = in_map + (oy * stride + ky) * wp + kx;
                                const T* g_row = gm + oy * wo;
                                if (stride == 1) {
                                    for (int ox = 0; ox < wo; ++ox) acc += g_row[ox] * in_row[ox];
                                } else {
                                    for (int ox = 0; ox < wo; ++ox) acc += g_row[ox] * in_row[ox * stride];
                                }
                            }
                            gker[ky * kw + kx] += acc;
                        }
                    }
                }
            }
        }
        if (xg) {
            // accumulate into a padded scratch buffer, then fold the interior back
            std::vector<T> gpad(static_cast<size_t>(ci) * hp * wp, T(0));
            for (int oc = 0; oc < co; ++oc) {
                const T* gm = g.data() + oc * ho * wo;
                for (int icn = 0; icn < ci; ++icn) {
                    T* gx_map = gpad.data() + static_cast<size_t>(icn) * hp * wp;
                    const T* ker = pw + (oc * ci + icn) * kh * kw;
                    for (int ky = 0; ky < kh; ++ky) {
                        for (int kx = 0; kx < kw; ++kx) {
                            const T kv = ker[ky * kw + kx];
                            if (kv == T(0)) continue;
                            for (int oy = 0; oy < ho; ++oy) {
                                T* gx_row = gx_map + (oy * stride + ky) * wp + kx;
                                const T* g_row = gm + oy * wo;
                                if (stride == 1) {
                                    for (int ox = 0; ox < wo; ++ox) gx_row[ox] += kv * g_row[ox];
                                } else {
                                    for (int ox = 0; ox < wo; ++ox) gx_row[ox * stride] += kv * g_row[ox];
                                }
                            }
                        }
                    }
                }
            }
            auto& gx = x.grad();
            for (int icn = 0; icn < ci; ++icn)
                for (int y = 0; y < h; ++y) {
                    const T* src = gpad.data() + (static_cast<size_t>(icn) * hp + y + pad) * wp + pad;
                    T* dst = gx.data() + (icn * h + y) * wd;
                    for (int xx = 0; xx < wd; ++xx) dst[xx] += src[xx];
                }
        }
    });
    return out;
}

template <typename T>
TensorT<T> conv2d(TensorT<T> x, TensorT<T> w, int stride, int pad) {
    return conv2d(x, w, TensorT<T>{}, stride, pad);
}

// Non-overlapping average pooling with window k (spatial dims must divide k).
template <typename T>
TensorT<T> avg_pool2d(TensorT<T> x, int k) {
    if (x.shape().size() != 3) throw std::invalid_argument("avg_pool2d: expected CxHxW input");
    if (k < 1) throw std::invalid_argument("avg_pool2d: window must be >= 1");
    const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    if (h % k != 0 || w % k != 0) throw std::invalid_argument("avg_pool2d: spatial size not divisible by window");
    const int ho = h / k, wo = w / k;
    TensorT<T> out = TensorT<T>::zeros({c, ho, wo});
    const T inv = T(1) / T(k * k);
    const T* px = x.data();
    T* po = out.data();
    for (int cc = 0; cc < c; ++cc)
        for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox) {
                T acc = 0;
                for (int dy = 0; dy < k; ++dy)
                    for (int dx = 0; dx < k; ++dx) acc += px[(cc * h + oy * k + dy) * w + ox * k + dx];
                po[(cc * ho + oy) * wo + ox] = acc * inv;
            }
    bool xg = x.requires_grad();
    detail::finish_op<T>("avg_pool2d", out, xg, [x, out, c, h, w, ho, wo, k, inv]() mutable {
        const auto& g = out.node()->grad;
        if (g.empty()) return;  // no gradient reached this result
        auto& gx = x.grad();
        for (int cc = 0; cc < c; ++cc)
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox) {
                    const T gv = g[(cc * ho + oy) * wo + ox] * inv;
                    for (int dy = 0; dy < k; ++dy)
                        for (int dx = 0; dx < k; ++dx) gx[(cc * h + oy * k + dy) * w + ox * k + dx] += gv;
                }
    });
    return out;
}

template <typename T>
TensorT<T> upsample_nearest(TensorT<T> x, int f) {
    if (x.shape().size() != 3) throw std::invalid_argument("upsample_nearest: expected CxHxW input");
    if (f < 1) throw std::invalid_argument("upsample_nearest: factor must be >= 1");
    const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    const int ho = h * f, wo = w * f;
    TensorT<T> out = TensorT<T>::zeros({c, ho, wo});
    const T* px = x.data();
    T* po = out.data();
    for (int cc = 0; cc < c; ++cc)
        for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox)
                po[(cc * ho + oy) * wo + ox] = px[(cc * h + oy / f) * w + ox / f];
    bool xg = x.requires_grad();
    detail::finish_op<T>("upsample_nearest", out, xg, [x, out, c, h, w, ho, wo, f]() mutable {
        const auto& g = out.node()->grad;
        if (g.empty()) return;  // no gradient reached this result
        auto& gx = x.grad();
        for (int cc = 0; cc < c; ++cc)
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox)
                    gx[(cc * h + oy / f) * w + ox / f] += g[(cc * ho + oy) * wo + ox];
    });
    return out;
}

// ---------------------------------------------------------------------------
// Gradient-check oracle
// ---------------------------------------------------------------------------

// Max over coordinates of |analytic - central difference| / (|analytic| + eps_denom).
// fn must map x to a scalar tensor and be evaluable without side effects.
template <typename T>
T finite_diff_check(const std::function<TensorT<T>(TensorT<T>&)>& fn, TensorT<T>& x, T h,
                    T eps_denom = T(1e-6)) {
    if (h <= T(0)) throw std::invalid_argument("finite_diff_check: h must be positive");

    x.set_requires_grad(true);
    x.zero_grad();
    std::vector<T> analytic;
    {
        TapeT<T> tape;
        TapeScope<T> scope(tape);
        TensorT<T> loss = fn(x);
        if (loss.numel() != 1) throw std::invalid_argument("finite_diff_check: fn must return a scalar");
        tape.backward_from(loss);
        analytic = x.grad();
    }

    T max_err = 0;
    {
        NoTapeScope<T> no_tape;
        auto& xs = x.values();
        for (size_t i = 0; i < xs.size(); ++i) {
            const T orig = xs[i];
            xs[i] = orig + h;
            const T fp = fn(x).item();
            xs[i] = orig - h;
            const T fm = fn(x).item();
            xs[i] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw std::runtime_error("finite_diff_check: fn produced non-finite value");
            const T fd = (fp - fm) / (T(2) * h);
            const T err = std::abs(analytic[i] - fd) / (std::abs(analytic[i]) + eps_denom);
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

using Tensor = TensorT<float>;
using Tape = TapeT<float>;

}  // namespace semadv

#endif  // SEMADV_TENSOR_HPP
