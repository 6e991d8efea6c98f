#ifndef SEMADV_PARAMS_HPP
#define SEMADV_PARAMS_HPP

// Named parameter collection shared by the trainable models.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "semadv/rng.hpp"
#include "semadv/tensor.hpp"

namespace semadv {

template <typename T>
class ParamStoreT {
  public:
    TensorT<T>& create(const std::string& name, Shape shape) {
        for (auto& p : params_)
            if (p.first == name) throw std::invalid_argument("param '" + name + "' already exists");
        params_.emplace_back(name, TensorT<T>::zeros(std::move(shape)));
        params_.back().second.set_requires_grad(true);
        return params_.back().second;
    }

    TensorT<T>& create_normal(const std::string& name, Shape shape, Rng& rng, double std_dev) {
        TensorT<T>& t = create(name, std::move(shape));
        rng.fill_normal(t.values(), std_dev);
        return t;
    }

    TensorT<T>& at(const std::string& name) {
        for (auto& p : params_)
            if (p.first == name) return p.second;
        throw std::invalid_argument("unknown parameter '" + name + "'");
    }

    std::vector<std::pair<std::string, TensorT<T>>>& entries() { return params_; }
    const std::vector<std::pair<std::string, TensorT<T>>>& entries() const { return params_; }
    size_t size() const { return params_.size(); }

    void zero_grad() {
        for (auto& p : params_) p.second.zero_grad();
    }

    // Deep copy of values; clones keep requires_grad set.
    void clone_into(ParamStoreT& dst) const {
        dst.params_.clear();
        for (const auto& p : params_) {
            dst.params_.emplace_back(p.first, p.second.detached_clone());
            dst.params_.back().second.set_requires_grad(true);
        }
    }

    uint64_t fingerprint() const {
        uint64_t h = 1469598103934665603ull;
        for (const auto& p : params_) {
            h = fnv1a(p.first.data(), p.first.size(), h);
            h = fnv1a(p.second.values().data(), p.second.values().size() * sizeof(T), h);
        }
        return h;
    }

    bool bit_identical(const ParamStoreT& other) const {
        if (params_.size() != other.params_.size()) return false;
        for (size_t i = 0; i < params_.size(); ++i) {
            if (params_[i].first != other.params_[i].first) return false;
            if (params_[i].second.values() != other.params_[i].second.values()) return false;
        }
        return true;
    }

  private:
    std::vector<std::pair<std::string, TensorT<T>>> params_;
};

inline double conv_init_std(int fan_in) { return std::sqrt(2.0 / fan_in); }

}  // namespace semadv

#endif  // SEMADV_PARAMS_HPP
