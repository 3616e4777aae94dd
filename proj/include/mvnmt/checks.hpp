#pragma once

#include <cstdint>
#include <string>

#include "mvnmt/grad_check.hpp"
#include "mvnmt/model.hpp"

namespace mvnmt {

// Toy configuration used by the gradient suite: d_h 8, d_emb 6, d_z 4,
// d_pi 6, vocabularies of 5, sentence lengths <= 4, two feature rows.
ModelConfig toy_model_config(Variant v);

// Full-training-loss finite-difference check (step 1e-5) on the toy model:
// a two-sentence batch with fixed epsilon draws, variant-default L2 decay.
GradCheckReport run_toy_grad_check(Variant v, uint64_t seed);

struct KlCheckResult {
  bool closed_form_ok = false;
  bool monte_carlo_ok = false;
  double worst_closed_form_err = 0.0;
  double worst_sigma_distance = 0.0;  // |analytic - MC| / SE, worst pair
  std::string detail;

  bool ok() const { return closed_form_ok && monte_carlo_ok; }
};

// Hand-derived closed forms to 1e-12 plus a 10^6-sample Monte Carlo
// cross-check (3 standard errors) over `pairs` random Gaussian pairs.
KlCheckResult run_kl_check(uint64_t seed, int pairs = 20, int64_t samples = 1000000);

}  // namespace mvnmt
