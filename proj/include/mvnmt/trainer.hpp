#pragma once

#include <limits>
#include <string>
#include <vector>

#include "mvnmt/checkpoint.hpp"
#include "mvnmt/data.hpp"
#include "mvnmt/graph.hpp"
#include "mvnmt/model.hpp"
#include "mvnmt/params.hpp"
#include "mvnmt/rng.hpp"

namespace mvnmt {

// Adadelta with the original defaults (rho 0.95, eps 1e-6); lr scales the
// computed step. Accumulators mirror the parameter set in registration order.
class Adadelta {
 public:
  Adadelta(double rho = 0.95, double eps = 1e-6, double lr = 1.0)
      : rho_(rho), eps_(eps), lr_(lr) {}

  void attach(const ParamSet& ps);
  void step(ParamSet& ps, const GradientMap& grads);

  const std::vector<Tensor>& grad_acc() const { return grad_acc_; }
  const std::vector<Tensor>& update_acc() const { return update_acc_; }
  std::vector<Tensor>& grad_acc() { return grad_acc_; }
  std::vector<Tensor>& update_acc() { return update_acc_; }

 private:
  double rho_, eps_, lr_;
  std::vector<Tensor> grad_acc_;
  std::vector<Tensor> update_acc_;
};

// Stops once validation loss has not improved over the last `patience`
// observations; improvement means strictly below the best seen so far.
class EarlyStopper {
 public:
  explicit EarlyStopper(int64_t patience) : patience_(patience) {
    if (patience < 1) throw ContractError("EarlyStopper: patience must be >= 1");
  }

  // Returns true when this observation improved on the best.
  bool observe(double val_loss) {
    if (val_loss < best_) {
      best_ = val_loss;
      since_improve_ = 0;
      return true;
    }
    ++since_improve_;
    return false;
  }

  bool should_stop() const { return since_improve_ >= patience_; }
  double best() const { return best_; }

 private:
  int64_t patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int64_t since_improve_ = 0;
};

struct TrainerOptions {
  int64_t batchsize = 32;
  int64_t validate_every = 1000;
  int64_t patience = 10;
  int64_t max_iters = 1000000;
  double decay_c = 0.0;
  double lr = 1.0;
  double rho = 0.95;
  double eps = 1e-6;
  uint64_t seed = 1;
  std::string out_dir;  // best.ckpt, last.ckpt, training_curve.csv
  bool checkpoint_f32 = false;
  bool quiet = false;
};

struct TrainResult {
  double best_val_loss = 0.0;
  int64_t best_iteration = 0;
  int64_t iterations = 0;
  int64_t validations = 0;
  std::string best_checkpoint_path;
  std::string curve_path;
};

// ELBO components of one sentence under a fixed latent draw.
struct SentenceLossValue {
  double kl = 0.0;
  double log_likelihood = 0.0;
  double loss() const { return kl - log_likelihood; }
};

// Mean validation loss with epsilon = 0 (posterior mean), no decay term.
double validation_loss(const Model& model, const std::vector<SentencePair>& pairs,
                       const FeatureSet* features);

class Trainer {
 public:
  Trainer(Model& model, TrainerOptions opts) : model_(model), opts_(std::move(opts)) {}

  // Early-stops when validation loss fails to improve over the last
  // `patience` validations; writes the best-validation checkpoint and the
  // training-curve CSV under out_dir.
  TrainResult train(const std::vector<SentencePair>& train_pairs, const FeatureSet* train_features,
                    const std::vector<SentencePair>& val_pairs, const FeatureSet* val_features);

 private:
  Model& model_;
  TrainerOptions opts_;
};

}  // namespace mvnmt
