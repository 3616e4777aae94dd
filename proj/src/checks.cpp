#include "mvnmt/checks.hpp"

#include <cmath>
#include <sstream>

namespace mvnmt {

ModelConfig toy_model_config(Variant v) {
  ModelConfig mc;
  mc.variant = v;
  mc.d_h = 8;
  mc.d_emb = 6;
  mc.d_z = 4;
  mc.d_pi = 6;
  mc.d_fc7 = 6;
  mc.vocab_src = 5;
  mc.vocab_tgt = 5;
  return mc;
}

GradCheckReport run_toy_grad_check(Variant v, uint64_t seed) {
  Model model(toy_model_config(v));
  Rng rng(seed);
  model.initialize(rng, 0.1);

  const std::vector<std::vector<int>> srcs = {{2, 3, 4, 0}, {4, 2, 0}};
  const std::vector<std::vector<int>> tgts = {{3, 2, 0}, {2, 4, 3, 0}};

  std::vector<Tensor> features;
  for (size_t i = 0; i < srcs.size(); ++i) {
    Tensor f({2, model.config().d_fc7});
    for (double& x : f.data) x = rng.normal();
    features.push_back(std::move(f));
  }
  std::vector<Tensor> epsilons;
  if (model.uses_latent()) {
    for (size_t i = 0; i < srcs.size(); ++i) {
      Tensor e({model.config().d_z});
      for (double& x : e.data) x = rng.normal();
      epsilons.push_back(std::move(e));
    }
  }
  const double decay_c = (v == Variant::kNmt || v == Variant::kG) ? 0.001 : 0.0005;

  LossBuilder build = [&](Graph& g, const ParamSet&) {
    std::vector<SentenceView> views;
    for (size_t i = 0; i < srcs.size(); ++i) {
      SentenceView sv;
      sv.src = &srcs[i];
      sv.tgt = &tgts[i];
      if (model.uses_image()) sv.features = &features[i];
      views.push_back(sv);
    }
    return model.build_batch_loss(g, views, epsilons, decay_c);
  };
  return check_gradient(model.params(), build, 1e-5);
}

KlCheckResult run_kl_check(uint64_t seed, int pairs, int64_t samples) {
  KlCheckResult result;
  std::ostringstream detail;

  // Closed forms derivable by hand from the analytic expression.
  const GaussianDiag std1 = GaussianDiag::clamped(Tensor({1}, {0.0}), Tensor({1}, {0.0}));
  const GaussianDiag mean1 = GaussianDiag::clamped(Tensor({1}, {1.0}), Tensor({1}, {0.0}));
  const GaussianDiag wide = GaussianDiag::clamped(Tensor({1}, {0.0}), Tensor({1}, {2.0}));

  double worst = 0.0;
  worst = std::max(worst, std::abs(kl_divergence(std1, std1) - 0.0));
  worst = std::max(worst, std::abs(kl_divergence(mean1, std1) - 0.5));
  worst = std::max(worst, std::abs(kl_divergence(wide, std1) - ((std::exp(2.0) - 1.0) / 2.0 - 1.0)));
  result.worst_closed_form_err = worst;
  result.closed_form_ok = worst <= 1e-12;
  detail << "closed-form worst abs err " << worst << "\n";

  // Monte Carlo E_q[log q - log p] against the analytic value.
  Rng rng(seed);
  const int64_t d_z = 4;
  result.monte_carlo_ok = true;
  for (int pair = 0; pair < pairs; ++pair) {
    Tensor mu_q({d_z}), lv_q({d_z}), mu_p({d_z}), lv_p({d_z});
    for (int64_t k = 0; k < d_z; ++k) {
      mu_q.at(k) = 4.0 * rng.uniform() - 2.0;
      lv_q.at(k) = 4.0 * rng.uniform() - 2.0;
      mu_p.at(k) = 4.0 * rng.uniform() - 2.0;
      lv_p.at(k) = 4.0 * rng.uniform() - 2.0;
    }
    GaussianDiag q = GaussianDiag::clamped(std::move(mu_q), std::move(lv_q));
    GaussianDiag p = GaussianDiag::clamped(std::move(mu_p), std::move(lv_p));
    const double analytic = kl_divergence(q, p);

    double sum = 0.0, sum_sq = 0.0;
    Tensor eps({d_z}), z({d_z});
    for (int64_t s = 0; s < samples; ++s) {
      for (int64_t k = 0; k < d_z; ++k) eps.at(k) = rng.normal();
      z = reparameterize(q, eps);
      const double v = q.log_density(z) - p.log_density(z);
      sum += v;
      sum_sq += v * v;
    }
    const double n = static_cast<double>(samples);
    const double mean = sum / n;
    const double var = (sum_sq - n * mean * mean) / (n - 1.0);
    const double se = std::sqrt(var / n);
    const double sigmas = se > 0.0 ? std::abs(analytic - mean) / se : 0.0;
    result.worst_sigma_distance = std::max(result.worst_sigma_distance, sigmas);
    if (sigmas > 3.0) {
      result.monte_carlo_ok = false;
      detail << "pair " << pair << ": analytic " << analytic << " vs MC " << mean << " ("
             << sigmas << " SE)\n";
    }
  }
  detail << "monte-carlo worst distance " << result.worst_sigma_distance << " SE over " << pairs
         << " pairs";
  result.detail = detail.str();
  return result;
}

}  // namespace mvnmt
