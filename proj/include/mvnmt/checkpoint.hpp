#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mvnmt/params.hpp"
#include "mvnmt/rng.hpp"
#include "mvnmt/tensor.hpp"
#include "mvnmt/vocab.hpp"

namespace mvnmt {

// MVNC container: header (magic, version, flags, variant tag, parameter
// count), one record per parameter (name, rank, dims, payload), then optional
// trailing sections for optimizer accumulators, RNG state and the training
// iteration. All integers little-endian; payloads f64 unless the f32 storage
// flag is set.
struct Checkpoint {
  std::string variant;
  std::vector<std::pair<std::string, Tensor>> params;

  bool has_optimizer = false;
  std::vector<std::pair<std::string, Tensor>> opt_grad_acc;
  std::vector<std::pair<std::string, Tensor>> opt_update_acc;

  bool has_rng = false;
  Rng::State rng_state{};

  bool has_iteration = false;
  uint64_t iteration = 0;

  static Checkpoint from_params(const std::string& variant, const ParamSet& ps);
};

// Atomic (write-temp-then-rename). f32 drops payloads to 32-bit storage.
void save_checkpoint(const Checkpoint& c, const std::string& path, bool f32 = false);
Checkpoint load_checkpoint(const std::string& path);

// Name-matching transfer for the fine-tune chain: carried parameters copied
// bit-exact, everything else left untouched (freshly initialized by the
// caller). Shape conflicts and extras are reported, never silently applied.
struct CheckpointCompat {
  std::vector<std::string> carried;
  std::vector<std::string> missing;         // in the model, not in the checkpoint
  std::vector<std::string> extra;           // in the checkpoint, not in the model
  std::vector<std::string> shape_mismatch;  // same name, different shape

  bool exact() const { return missing.empty() && extra.empty() && shape_mismatch.empty(); }
  std::string report() const;
};

CheckpointCompat apply_checkpoint(const Checkpoint& c, ParamSet& ps);

// Strict load for translation/evaluation: every model parameter must be
// covered exactly; anything else is a DataError carrying the report.
void load_exact(const Checkpoint& c, ParamSet& ps);

}  // namespace mvnmt
