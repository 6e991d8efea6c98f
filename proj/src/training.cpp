#include "semadv/training.hpp"

#include <cmath>
#include <stdexcept>

#include "semadv/diffusion.hpp"
#include "semadv/losses.hpp"
#include "semadv/rng.hpp"

namespace semadv {

Optimizer::Optimizer(ParamStoreT<float>& params, const TrainConfig& cfg)
    : params_(&params), lr_(cfg.lr), adam_(cfg.optimizer == "adam") {
    if (cfg.optimizer != "sgd" && cfg.optimizer != "adam")
        throw std::invalid_argument("optimizer must be 'sgd' or 'adam', got '" + cfg.optimizer + "'");
    if (adam_) {
        for (auto& p : params_->entries()) {
            m_.emplace_back(p.second.values().size(), 0.0f);
            v_.emplace_back(p.second.values().size(), 0.0f);
        }
    }
}

void Optimizer::step() {
    ++t_;
    size_t idx = 0;
    for (auto& p : params_->entries()) {
        auto& vals = p.second.values();
        auto& grad = p.second.grad();
        if (adam_) {
            const float b1 = 0.9f, b2 = 0.999f, eps = 1e-8f;
            const float bc1 = 1.0f - std::pow(b1, static_cast<float>(t_));
            const float bc2 = 1.0f - std::pow(b2, static_cast<float>(t_));
            auto& m = m_[idx];
            auto& v = v_[idx];
            for (size_t i = 0; i < vals.size(); ++i) {
                m[i] = b1 * m[i] + (1.0f - b1) * grad[i];
                v[i] = b2 * v[i] + (1.0f - b2) * grad[i] * grad[i];
                vals[i] -= static_cast<float>(lr_) * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
            }
        } else {
            for (size_t i = 0; i < vals.size(); ++i) vals[i] -= static_cast<float>(lr_) * grad[i];
        }
        ++idx;
    }
}

namespace {

Tensor one_hot(int label, int num_classes) {
    Tensor t = Tensor::zeros({num_classes});
    t.values()[static_cast<size_t>(label)] = 1.0f;
    return t;
}

Tensor cross_entropy(Tensor logits, int label) {
    return scalar_mul(sum(mul(log_softmax(logits), one_hot(label, logits.shape()[0]))), -1.0f);
}

}  // namespace

double classifier_accuracy(Classifier& model, const ToyDataset& ds, const std::vector<int>& indices) {
    if (indices.empty()) return 0.0;
    int correct = 0;
    for (int i : indices)
        if (model.predict(ds.images[static_cast<size_t>(i)]) == ds.labels[static_cast<size_t>(i)]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(indices.size());
}

ClassifierTrainResult train_classifier(const ToyDataset& ds, const DatasetSplit& split, const ClassifierConfig& arch,
                                       const TrainConfig& cfg) {
    if (split.train_indices.empty()) throw std::invalid_argument("train_classifier: empty training split");
    for (int label : ds.labels)
        if (label < 0 || label >= arch.num_classes) throw std::invalid_argument("train_classifier: label out of range");

    ClassifierTrainResult result{Classifier(arch), 0.0, 0.0, {}};
    Classifier& model = result.model;
    Optimizer opt(model.params(), cfg);
    Rng rng(cfg.seed);

    std::vector<int> order = split.train_indices;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        double epoch_loss = 0.0;
        int batches = 0;
        try {
            for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch)) {
                const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch));
                Tape tape;
                TapeScope<float> scope(tape);
                Tensor loss = Tensor::scalar(0.0f);
                for (size_t k = start; k < end; ++k) {
                    const int i = order[k];
                    loss = add(loss, cross_entropy(model.forward(ds.images[static_cast<size_t>(i)]).logits,
                                                   ds.labels[static_cast<size_t>(i)]));
                }
                loss = scalar_mul(loss, 1.0f / static_cast<float>(end - start));
                epoch_loss += loss.item();
                ++batches;
                model.params().zero_grad();
                tape.backward_from(loss);
                opt.step();
            }
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("train_classifier: diverged at epoch " + std::to_string(epoch) + ": " + e.what());
        }
        result.loss_per_epoch.push_back(epoch_loss / std::max(1, batches));
    }

    result.train_accuracy = classifier_accuracy(model, ds, split.train_indices);
    result.test_accuracy = classifier_accuracy(model, ds, split.test_indices);
    return result;
}

DenoiserTrainResult train_denoiser(const ToyDataset& ds, const DatasetSplit& split, const NoiseSchedule& sched,
                                   const DenoiserConfig& arch, const TrainConfig& cfg) {
    if (split.train_indices.empty()) throw std::invalid_argument("train_denoiser: empty training split");

    DenoiserTrainResult result{Denoiser(arch), {}};
    Denoiser& model = result.model;
    Optimizer opt(model.params(), cfg);
    Rng rng(cfg.seed);

    const float inv_numel = 1.0f / static_cast<float>(static_cast<int64_t>(arch.channels) * arch.height * arch.width);
    std::vector<int> order = split.train_indices;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        double epoch_loss = 0.0;
        int batches = 0;
        try {
            for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch)) {
                const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch));
                Tape tape;
                TapeScope<float> scope(tape);
                Tensor loss = Tensor::scalar(0.0f);
                for (size_t k = start; k < end; ++k) {
                    const Tensor& x0 = ds.images[static_cast<size_t>(order[k])];
                    const int t = static_cast<int>(rng.uniform_int(1, sched.total_steps));
                    Tensor w = Tensor::zeros(x0.shape());
                    rng.fill_normal(w.values());
                    loss = add(loss, scalar_mul(ddpm_train_loss(model, x0, t, w, sched), inv_numel));
                }
                loss = scalar_mul(loss, 1.0f / static_cast<float>(end - start));
                epoch_loss += loss.item();
                ++batches;
                model.params().zero_grad();
                tape.backward_from(loss);
                opt.step();
            }
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("train_denoiser: diverged at epoch " + std::to_string(epoch) + ": " + e.what());
        }
        result.loss_per_epoch.push_back(epoch_loss / std::max(1, batches));
    }
    return result;
}

double eval_denoiser_loss(Denoiser& model, const std::vector<Tensor>& images, const NoiseSchedule& sched, uint64_t seed) {
    if (images.empty()) throw std::invalid_argument("eval_denoiser_loss: empty batch");
    NoTapeScope<float> no_tape;
    Rng rng(seed);
    double total = 0.0;
    for (const Tensor& x0 : images) {
        const int t = static_cast<int>(rng.uniform_int(1, sched.total_steps));
        Tensor w = Tensor::zeros(x0.shape());
        rng.fill_normal(w.values());
        Tensor x0_copy = x0.detached_clone();
        total += ddpm_train_loss(model, x0_copy, t, w, sched).item() / static_cast<double>(x0.numel());
    }
    return total / static_cast<double>(images.size());
}

}  // namespace semadv
