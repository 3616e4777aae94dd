#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mvnmt/decoder.hpp"
#include "mvnmt/image_encoder.hpp"
#include "mvnmt/inferrer.hpp"
#include "mvnmt/text_encoder.hpp"

namespace mvnmt {

// The six trainable configurations: the attention NMT baseline, the text-only
// variational model, and the four image-fusion variants.
enum class Variant { kNmt, kVnmt, kG, kGOAvg, kGORnn, kGOTxt };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct ModelConfig {
  Variant variant = Variant::kVnmt;
  int64_t d_h = 256;
  int64_t d_emb = 256;
  int64_t d_z = 256;
  int64_t d_pi = 256;
  int64_t d_fc7 = 4096;
  int64_t vocab_src = 0;
  int64_t vocab_tgt = 0;
  bool gate_fix = false;       // Eq. (17) printed-form vs conventional gate
  bool latent_direct = false;  // feed h'_z to the V matrices, bypassing Eq. (8)
};

// One aligned training example; features may be null for text-only variants.
struct SentenceView {
  const std::vector<int>* src = nullptr;  // EOS-terminated source ids
  const std::vector<int>* tgt = nullptr;  // EOS-terminated target ids
  const Tensor* features = nullptr;       // [l, d_fc7], row 0 = whole image
};

enum class LatentMode { kPosteriorSample, kPosteriorMean, kPriorMean, kOverride };

struct SentenceGraphOptions {
  LatentMode mode = LatentMode::kPosteriorSample;
  const Tensor* epsilon = nullptr;          // kPosteriorSample
  const Tensor* latent_override = nullptr;  // kOverride: h'_z before Eq. (8)
  bool want_posterior = false;              // force posterior even if unused
  bool want_kl = true;
};

struct SentenceGraph {
  EncoderOutput source;  // never image-prefixed; feeds attention and the prior
  bool has_posterior = false;
  GaussianNodes posterior{};
  bool has_prior = false;
  GaussianNodes prior{};
  NodeId h_z = -1;          // latent sample
  NodeId latent_feed = -1;  // what the decoder's V matrices consume
  TeacherForcedResult decode;
  bool has_decode = false;
  NodeId kl = -1;
  NodeId loss = -1;  // kl - log-likelihood (or -log-likelihood for NMT)
};

class Model {
 public:
  explicit Model(ModelConfig cfg);

  void initialize(Rng& rng, double init_std);

  const ModelConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  bool uses_latent() const { return cfg_.variant != Variant::kNmt; }
  bool uses_image() const {
    return cfg_.variant == Variant::kG || cfg_.variant == Variant::kGOAvg ||
           cfg_.variant == Variant::kGORnn || cfg_.variant == Variant::kGOTxt;
  }
  // d_e of the active variant: 2 d_h (+ d_pi when the image joins h_e).
  int64_t semantic_dim() const;
  // Width of the vector injected into the second GRU.
  int64_t latent_feed_dim() const;

  // Builds encoders, inferrer and (when tgt is nonempty) the teacher-forced
  // decoder for one sentence on the given tape.
  SentenceGraph build_sentence(Graph& g, const SentenceView& s,
                               const SentenceGraphOptions& opts) const;

  // Mean per-sentence loss plus decay_c * sum of squared weights.
  NodeId build_batch_loss(Graph& g, const std::vector<SentenceView>& batch,
                          const std::vector<Tensor>& epsilons, double decay_c) const;

  // Plain-value conveniences used by evaluation and tests.
  struct Inferred {
    GaussianDiag posterior;
    GaussianDiag prior;
  };
  Inferred infer(const SentenceView& s) const;
  double loglik_given_hz(const SentenceView& s, const Tensor& h_z) const;

  DecoderNodes decoder(Graph& g) const { return decoder_nodes(g, params_, decoder_opts_); }
  NodeId source_embedding_table(Graph& g) const {
    return g.param("src_emb", params_.at("src_emb"));
  }
  NodeId target_embedding_table(Graph& g) const {
    return g.param("tgt_emb", params_.at("tgt_emb"));
  }

  // Unprefixed source encoding (the attention/prior path).
  EncoderOutput encode_source(Graph& g, const std::vector<int>& src) const;
  // Prior parameters from the pooled source representation.
  GaussianNodes prior_nodes(Graph& g, NodeId pooled_source) const;
  // Latent projection fed to the decoder (identity under latent_direct).
  NodeId project_latent(Graph& g, NodeId h_z) const;

 private:
  NodeId image_representation(Graph& g, const ImageEncoderNodes& img,
                              const std::vector<NodeId>& feat_rows) const;

  ModelConfig cfg_;
  ParamSet params_;
  DecoderOptions decoder_opts_;
};

}  // namespace mvnmt
