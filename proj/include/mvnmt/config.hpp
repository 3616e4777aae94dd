#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvnmt/model.hpp"
#include "mvnmt/vocab.hpp"

namespace mvnmt {

// Flat key=value run configuration. Unknown keys are rejected; dimension and
// optimization keys default per Table-4 conventions, with dim_pic and decay_c
// resolved by variant when left unset.
struct RunConfig {
  std::string variant = "vnmt";
  int64_t dim = 256;       // d_h
  int64_t dim_word = 256;  // d_emb
  int64_t dimv = 256;      // d_z
  int64_t dim_pic = -1;    // -1: 512 for variant g, 256 otherwise
  int64_t dim_fc7 = 4096;
  int64_t batchsize = 32;
  int64_t maxlen = 50;
  double lr = 1.0;
  double decay_c = -1.0;  // -1: 0.001 for nmt and g, 0.0005 otherwise
  uint64_t seed = 1;
  int64_t validate_every = 1000;
  int64_t patience = 10;
  int64_t max_iters = 1000000;
  double init_std = 0.1;  // N(0, 0.01 I) read as variance 0.01
  bool gate_fix = false;
  bool latent_direct = false;
  bool checkpoint_f32 = false;
  bool length_normalize = false;
  int64_t beam = 12;
  int64_t vocab_max = 50000;
  std::string bucket_edges = "0,5,10,15,20,1000000";

  std::string train_source, train_target, train_features;
  std::string val_source, val_target, val_features;
  std::string vocab_source, vocab_target;

  // Applies the variant-dependent defaults for unset fields.
  void resolve();
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::vector<std::string>& lines, const std::string& origin);

std::vector<int64_t> parse_bucket_edges(const std::string& spec);

ModelConfig to_model_config(const RunConfig& rc, int64_t vocab_src, int64_t vocab_tgt);

}  // namespace mvnmt
