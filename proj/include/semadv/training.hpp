#ifndef SEMADV_TRAINING_HPP
#define SEMADV_TRAINING_HPP

// Deterministic training loops for the classifier and the denoiser. Plain
// gradient descent by default; Adam available behind the optimizer switch.

#include <cstdint>
#include <string>
#include <vector>

#include "semadv/classifier.hpp"
#include "semadv/dataset.hpp"
#include "semadv/denoiser.hpp"
#include "semadv/schedule.hpp"

namespace semadv {

struct TrainConfig {
    int epochs = 10;
    double lr = 0.05;
    int batch = 16;
    uint64_t seed = 0;
    std::string optimizer = "sgd";  // "sgd" | "adam"
};

// First-order update rule shared by both training loops.
class Optimizer {
  public:
    Optimizer(ParamStoreT<float>& params, const TrainConfig& cfg);
    void step();

  private:
    ParamStoreT<float>* params_;
    double lr_;
    bool adam_;
    int64_t t_ = 0;
    std::vector<std::vector<float>> m_, v_;
};

struct ClassifierTrainResult {
    Classifier model;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::vector<double> loss_per_epoch;
};

// Cross-entropy training over the split's train indices, accuracy measured on
// both splits afterwards. Deterministic for a fixed (dataset, config).
ClassifierTrainResult train_classifier(const ToyDataset& ds, const DatasetSplit& split, const ClassifierConfig& arch,
                                       const TrainConfig& cfg);

struct DenoiserTrainResult {
    Denoiser model;
    std::vector<double> loss_per_epoch;
};

DenoiserTrainResult train_denoiser(const ToyDataset& ds, const DatasetSplit& split, const NoiseSchedule& sched,
                                   const DenoiserConfig& arch, const TrainConfig& cfg);

// Mean per-element denoising loss on a fixed, seed-determined (t, w) batch.
double eval_denoiser_loss(Denoiser& model, const std::vector<Tensor>& images, const NoiseSchedule& sched, uint64_t seed);

double classifier_accuracy(Classifier& model, const ToyDataset& ds, const std::vector<int>& indices);

}  // namespace semadv

#endif  // SEMADV_TRAINING_HPP
