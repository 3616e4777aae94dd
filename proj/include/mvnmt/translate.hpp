#pragma once

#include <optional>
#include <vector>

#include "mvnmt/model.hpp"

namespace mvnmt {

struct Hypothesis {
  std::vector<int> tokens;  // EOS-terminated when finished
  double log_prob = 0.0;
  bool finished = false;
};

struct BeamOptions {
  int64_t beam_size = 12;
  int64_t max_len = 50;
  bool length_normalize = false;  // per-token score normalization, off by default
};

// Ranking used everywhere (beam pruning, winner selection, the enumeration
// oracle): higher score first, then shorter sequence, then lexicographically
// smaller token ids.
bool hypothesis_better(const Hypothesis& a, const Hypothesis& b, bool length_normalize);

// Length-capped beam search decoding from the prior mean. Finished hypotheses
// consume beam slots, so beam size 1 is exactly stepwise greedy argmax.
// Translation never reads image features: the latent comes from p(z|x) alone.
class Translator {
 public:
  Translator(const Model& model, BeamOptions opts) : model_(model), opts_(opts) {}

  Hypothesis translate(const std::vector<int>& src) const;

  // Test hook: force the latent sample h'_z instead of the prior mean.
  Hypothesis translate_with_latent(const std::vector<int>& src, const Tensor& h_z) const;

 private:
  Hypothesis run(const std::vector<int>& src, const Tensor* latent_override) const;

  const Model& model_;
  BeamOptions opts_;
};

}  // namespace mvnmt
