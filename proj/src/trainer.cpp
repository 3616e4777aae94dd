#include "mvnmt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>

namespace mvnmt {

void Adadelta::attach(const ParamSet& ps) {
  grad_acc_.clear();
  update_acc_.clear();
  for (const auto& e : ps.entries()) {
    grad_acc_.push_back(Tensor::zeros(e.value.shape));
    update_acc_.push_back(Tensor::zeros(e.value.shape));
  }
}

void Adadelta::step(ParamSet& ps, const GradientMap& grads) {
  if (grad_acc_.size() != ps.size()) throw ContractError("Adadelta: optimizer not attached");
  for (size_t i = 0; i < ps.size(); ++i) {
    auto& entry = ps.entries()[i];
    const Tensor* g = grads.has(entry.name) ? &grads.at(entry.name) : nullptr;
    Tensor& eg = grad_acc_[i];
    Tensor& ed = update_acc_[i];
    for (int64_t k = 0; k < entry.value.numel(); ++k) {
      const double gk = g ? g->at(k) : 0.0;
      eg.at(k) = rho_ * eg.at(k) + (1.0 - rho_) * gk * gk;
      const double dx = -std::sqrt(ed.at(k) + eps_) / std::sqrt(eg.at(k) + eps_) * gk;
      ed.at(k) = rho_ * ed.at(k) + (1.0 - rho_) * dx * dx;
      entry.value.at(k) += lr_ * dx;
    }
  }
}

namespace {

SentenceView view_of(const SentencePair& p, const Model& model, const FeatureSet* features) {
  SentenceView v;
  v.src = &p.src;
  v.tgt = &p.tgt;
  if (model.uses_image()) {
    if (!features) throw DataError("trainer: variant needs image features but none were given");
    if (p.image_index < 0 || static_cast<size_t>(p.image_index) >= features->count())
      throw DataError("trainer: image index " + std::to_string(p.image_index) +
                      " outside feature file with " + std::to_string(features->count()) +
                      " images");
    v.features = &features->per_image[static_cast<size_t>(p.image_index)];
  }
  return v;
}

}  // namespace

double validation_loss(const Model& model, const std::vector<SentencePair>& pairs,
                       const FeatureSet* features) {
  if (pairs.empty()) throw ContractError("validation_loss: empty validation set");
  double total = 0.0;
  for (const auto& p : pairs) {
    Graph g;
    SentenceGraphOptions opts;
    opts.mode = model.uses_latent() ? LatentMode::kPosteriorMean : LatentMode::kPriorMean;
    SentenceGraph sg = model.build_sentence(g, view_of(p, model, features), opts);
    total += g.scalar_value(sg.loss);
  }
  return total / static_cast<double>(pairs.size());
}

TrainResult Trainer::train(const std::vector<SentencePair>& train_pairs,
                           const FeatureSet* train_features,
                           const std::vector<SentencePair>& val_pairs,
                           const FeatureSet* val_features) {
  if (train_pairs.empty()) throw DataError("trainer: empty training set");
  if (val_pairs.empty()) throw DataError("trainer: empty validation set");
  if (opts_.patience < 1) throw ContractError("trainer: patience must be >= 1");

  std::filesystem::create_directories(opts_.out_dir);
  const std::string curve_path = opts_.out_dir + "/training_curve.csv";
  const std::string best_path = opts_.out_dir + "/best.ckpt";
  const std::string last_path = opts_.out_dir + "/last.ckpt";
  std::ofstream curve(curve_path, std::ios::trunc);
  if (!curve) throw DataError("trainer: cannot write " + curve_path);
  curve << "iteration,train_loss,val_loss\n";

  Rng rng(opts_.seed);
  Adadelta opt(opts_.rho, opts_.eps, opts_.lr);
  opt.attach(model_.params());

  // Length-bucketed batches: order by (source length, target length, index),
  // chunk, then shuffle the batch order each epoch.
  std::vector<size_t> order(train_pairs.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const auto& pa = train_pairs[a];
    const auto& pb = train_pairs[b];
    if (pa.src.size() != pb.src.size()) return pa.src.size() < pb.src.size();
    return pa.tgt.size() < pb.tgt.size();
  });
  std::vector<std::vector<size_t>> batches;
  for (size_t i = 0; i < order.size(); i += static_cast<size_t>(opts_.batchsize)) {
    std::vector<size_t> b;
    for (size_t j = i; j < order.size() && j < i + static_cast<size_t>(opts_.batchsize); ++j)
      b.push_back(order[j]);
    batches.push_back(std::move(b));
  }

  TrainResult result;
  result.best_checkpoint_path = best_path;
  result.curve_path = curve_path;
  EarlyStopper stopper(opts_.patience);
  int64_t iteration = 0;
  double train_loss_sum = 0.0;
  int64_t train_loss_count = 0;
  bool stop = false;

  const int64_t d_z = model_.config().d_z;
  while (!stop && iteration < opts_.max_iters) {
    // New epoch: deterministic reshuffle of batch order.
    for (size_t i = batches.size(); i > 1; --i)
      std::swap(batches[i - 1], batches[rng.below(i)]);

    for (const auto& batch : batches) {
      std::vector<SentenceView> views;
      std::vector<Tensor> epsilons;
      views.reserve(batch.size());
      for (size_t idx : batch) {
        views.push_back(view_of(train_pairs[idx], model_, train_features));
        if (model_.uses_latent()) {
          Tensor eps({d_z});
          for (double& v : eps.data) v = rng.normal();
          epsilons.push_back(std::move(eps));
        }
      }

      Graph g;
      NodeId loss = model_.build_batch_loss(g, views, epsilons, opts_.decay_c);
      GradientMap grads = g.backward(loss);
      opt.step(model_.params(), grads);

      train_loss_sum += g.scalar_value(loss);
      ++train_loss_count;
      ++iteration;

      if (iteration % opts_.validate_every == 0) {
        const double val = validation_loss(model_, val_pairs, val_features);
        const double train_mean = train_loss_sum / static_cast<double>(train_loss_count);
        train_loss_sum = 0.0;
        train_loss_count = 0;
        ++result.validations;
        curve << iteration << "," << train_mean << "," << val << "\n";
        curve.flush();
        if (!opts_.quiet)
          std::cerr << "[train] iter " << iteration << " train_loss " << train_mean
                    << " val_loss " << val << "\n";

        if (stopper.observe(val)) {
          result.best_iteration = iteration;
          Checkpoint best = Checkpoint::from_params(variant_name(model_.config().variant),
                                                    model_.params());
          best.has_iteration = true;
          best.iteration = static_cast<uint64_t>(iteration);
          save_checkpoint(best, best_path, opts_.checkpoint_f32);
        } else if (stopper.should_stop()) {
          stop = true;
        }
      }
      if (stop || iteration >= opts_.max_iters) break;
    }
  }

  result.best_val_loss = stopper.best();
  result.iterations = iteration;

  Checkpoint last = Checkpoint::from_params(variant_name(model_.config().variant), model_.params());
  last.has_optimizer = true;
  for (size_t i = 0; i < model_.params().size(); ++i) {
    const std::string& name = model_.params().entries()[i].name;
    last.opt_grad_acc.emplace_back(name, opt.grad_acc()[i]);
    last.opt_update_acc.emplace_back(name, opt.update_acc()[i]);
  }
  last.has_rng = true;
  last.rng_state = rng.save();
  last.has_iteration = true;
  last.iteration = static_cast<uint64_t>(iteration);
  save_checkpoint(last, last_path, opts_.checkpoint_f32);

  if (!std::filesystem::exists(best_path)) {
    // max_iters hit before the first validation; persist what we have.
    Checkpoint best = Checkpoint::from_params(variant_name(model_.config().variant),
                                              model_.params());
    best.has_iteration = true;
    best.iteration = static_cast<uint64_t>(iteration);
    save_checkpoint(best, best_path, opts_.checkpoint_f32);
    result.best_val_loss = validation_loss(model_, val_pairs, val_features);
    result.best_iteration = iteration;
  }
  return result;
}

}  // namespace mvnmt
