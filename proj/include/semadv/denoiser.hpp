#ifndef SEMADV_DENOISER_HPP
#define SEMADV_DENOISER_HPP

// Noise-prediction network: 3-level convolutional encoder/decoder with skip
// connections and a learned per-level projection of a sinusoidal time
// embedding. Input and output share the CxHxW shape.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "semadv/params.hpp"
#include "semadv/tensor.hpp"

namespace semadv {

template <typename T>
struct DenoiserConfigT {
    int channels = 3;
    int height = 16;
    int width = 16;
    int base_width = 32;
    int emb_dim = 32;
    uint64_t init_seed = 1;
};

template <typename T>
class DenoiserT {
  public:
    using Config = DenoiserConfigT<T>;

    DenoiserT() = default;

    explicit DenoiserT(const Config& cfg) : cfg_(cfg) {
        if (cfg.height % 4 != 0 || cfg.width % 4 != 0)
            throw std::invalid_argument("denoiser: spatial size must be divisible by 4");
        Rng rng(cfg.init_seed);
        const int w0 = cfg.base_width, w1 = 2 * cfg.base_width, w2 = 4 * cfg.base_width;
        add_block("enc1", cfg.channels, w0, rng);
        add_block("enc2", w0, w1, rng);
        add_block("mid", w1, w2, rng);
        add_block("dec2", w2 + w1, w1, rng);
        add_block("dec1", w1 + w0, w0, rng);
        // zero-initialized output projection: the untrained model predicts zero noise
        params_.create("out.w", {cfg.channels, w0, 3, 3});
        params_.create("out.b", {cfg.channels});
    }

    const Config& config() const { return cfg_; }
    ParamStoreT<T>& params() { return params_; }
    const ParamStoreT<T>& params() const { return params_; }

    DenoiserT clone() const {
        DenoiserT copy;
        copy.cfg_ = cfg_;
        params_.clone_into(copy.params_);
        return copy;
    }

    TensorT<T> forward(TensorT<T> x, int t) {
        if (x.shape() != Shape{cfg_.channels, cfg_.height, cfg_.width})
            throw std::invalid_argument("denoiser: input shape " + shape_str(x.shape()) + " does not match configured " +
                                        shape_str({cfg_.channels, cfg_.height, cfg_.width}));
        TensorT<T> emb = time_embedding(t);
        TensorT<T> h1 = block("enc1", x, emb, cfg_.height);
        TensorT<T> h2 = block("enc2", avg_pool2d(h1, 2), emb, cfg_.height / 2);
        TensorT<T> hm = block("mid", avg_pool2d(h2, 2), emb, cfg_.height / 4);
        TensorT<T> d2 = block("dec2", concat(upsample_nearest(hm, 2), h2, 0), emb, cfg_.height / 2);
        TensorT<T> d1 = block("dec1", concat(upsample_nearest(d2, 2), h1, 0), emb, cfg_.height);
        return conv2d(d1, params_.at("out.w"), params_.at("out.b"), 1, 1);
    }

    // Sinusoidal embedding of the integer timestep, shape (emb_dim, 1).
    TensorT<T> time_embedding(int t) const {
        const int d = cfg_.emb_dim;
        const int half = d / 2;
        std::vector<T> v(static_cast<size_t>(d));
        for (int i = 0; i < half; ++i) {
            const double freq = std::exp(-std::log(10000.0) * i / std::max(1, half - 1));
            v[i] = static_cast<T>(std::sin(t * freq));
            v[half + i] = static_cast<T>(std::cos(t * freq));
        }
        return TensorT<T>::from({d, 1}, std::move(v));
    }

  private:
    void add_block(const std::string& name, int cin, int cout, Rng& rng) {
        params_.create_normal(name + ".wa", {cout, cin, 3, 3}, rng, conv_init_std(cin * 9));
        params_.create(name + ".ba", {cout});
        params_.create_normal(name + ".tw", {cout, cfg_.emb_dim}, rng, std::sqrt(1.0 / cfg_.emb_dim));
        params_.create(name + ".tb", {cout, 1});
        params_.create_normal(name + ".wb", {cout, cout, 3, 3}, rng, conv_init_std(cout * 9));
        params_.create(name + ".bb", {cout});
    }

    TensorT<T> block(const std::string& name, TensorT<T> x, TensorT<T> emb, int spatial) {
        TensorT<T> h = conv2d(x, params_.at(name + ".wa"), params_.at(name + ".ba"), 1, 1);
        TensorT<T> shift = add(matmul(params_.at(name + ".tw"), emb), params_.at(name + ".tb"));
        const int c = h.shape()[0];
        h = add(h, upsample_nearest(reshape(shift, {c, 1, 1}), spatial));
        h = silu(h);
        h = conv2d(h, params_.at(name + ".wb"), params_.at(name + ".bb"), 1, 1);
        return silu(h);
    }

    Config cfg_;
    ParamStoreT<T> params_;
};

using Denoiser = DenoiserT<float>;
using DenoiserConfig = DenoiserConfigT<float>;

}  // namespace semadv

#endif  // SEMADV_DENOISER_HPP
