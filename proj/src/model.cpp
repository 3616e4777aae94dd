#include "mvnmt/model.hpp"

#include <stdexcept>

namespace mvnmt {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kNmt: return "nmt";
    case Variant::kVnmt: return "vnmt";
    case Variant::kG: return "g";
    case Variant::kGOAvg: return "g-o-avg";
    case Variant::kGORnn: return "g-o-rnn";
    case Variant::kGOTxt: return "g-o-txt";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  if (name == "nmt") return Variant::kNmt;
  if (name == "vnmt") return Variant::kVnmt;
  if (name == "g") return Variant::kG;
  if (name == "g-o-avg") return Variant::kGOAvg;
  if (name == "g-o-rnn") return Variant::kGORnn;
  if (name == "g-o-txt") return Variant::kGOTxt;
  throw std::invalid_argument("unknown variant '" + name +
                              "' (expected nmt|vnmt|g|g-o-avg|g-o-rnn|g-o-txt)");
}

static FusionVariant fusion_of(Variant v) {
  switch (v) {
    case Variant::kG: return FusionVariant::kG;
    case Variant::kGOAvg: return FusionVariant::kGOAvg;
    case Variant::kGORnn: return FusionVariant::kGORnn;
    case Variant::kGOTxt: return FusionVariant::kGOTxt;
    default: throw ContractError("fusion_of: text-only variant has no fusion mode");
  }
}

int64_t Model::semantic_dim() const {
  switch (cfg_.variant) {
    case Variant::kNmt: return 0;
    case Variant::kVnmt:
    case Variant::kGOTxt: return 2 * cfg_.d_h;
    default: return 2 * cfg_.d_h + cfg_.d_pi;
  }
}

int64_t Model::latent_feed_dim() const {
  if (!uses_latent()) return 0;
  return cfg_.latent_direct ? cfg_.d_z : semantic_dim();
}

Model::Model(ModelConfig cfg) : cfg_(cfg) {
  if (cfg_.vocab_src < 2 || cfg_.vocab_tgt < 2)
    throw ContractError("Model: vocabularies must include the reserved EOS/UNK ids");
  if (cfg_.d_h % 2 != 0)
    throw ContractError("Model: d_h must be even (bidirectional halves)");
  if (cfg_.variant == Variant::kGOTxt && cfg_.d_pi != cfg_.d_emb)
    throw ContractError("Model: G+O-TXT requires dim_pic == dim_word (" +
                        std::to_string(cfg_.d_pi) + " != " + std::to_string(cfg_.d_emb) + ")");

  params_.add("src_emb", {cfg_.d_emb, cfg_.vocab_src}, false);
  params_.add("tgt_emb", {cfg_.d_emb, cfg_.vocab_tgt}, false);
  register_bidirectional(params_, "enc_src", cfg_.d_emb, cfg_.d_h);
  if (uses_latent()) register_bidirectional(params_, "enc_tgt", cfg_.d_emb, cfg_.d_h);
  if (uses_image()) register_image_encoder(params_, fusion_of(cfg_.variant), cfg_.d_pi, cfg_.d_fc7);
  if (uses_latent()) {
    register_gaussian_head(params_, "post", semantic_dim(), cfg_.d_z);
    register_gaussian_head(params_, "prior", cfg_.d_h, cfg_.d_z);
    if (!cfg_.latent_direct) register_latent_projection(params_, cfg_.d_z, semantic_dim());
  }
  decoder_opts_.d_h = cfg_.d_h;
  decoder_opts_.d_emb = cfg_.d_emb;
  decoder_opts_.vocab_tgt = cfg_.vocab_tgt;
  decoder_opts_.latent_dim = latent_feed_dim();
  decoder_opts_.gate_fix = cfg_.gate_fix;
  register_decoder(params_, decoder_opts_);
}

void Model::initialize(Rng& rng, double init_std) { params_.initialize(rng, init_std); }

EncoderOutput Model::encode_source(Graph& g, const std::vector<int>& src) const {
  NodeId table = g.param("src_emb", params_.at("src_emb"));
  BiGruNodes enc = bidirectional_nodes(g, params_, "enc_src", cfg_.d_h);
  return encode_sequence(g, enc, embed_sequence(g, table, src));
}

GaussianNodes Model::prior_nodes(Graph& g, NodeId pooled_source) const {
  return gaussian_head(g, params_, "prior", pooled_source);
}

NodeId Model::project_latent(Graph& g, NodeId h_z) const {
  return cfg_.latent_direct ? h_z : latent_projection(g, params_, h_z);
}

NodeId Model::image_representation(Graph& g, const ImageEncoderNodes& img,
                                   const std::vector<NodeId>& feat_rows) const {
  switch (cfg_.variant) {
    case Variant::kG: return encode_global(g, img, feat_rows);
    case Variant::kGOAvg: return encode_avg(g, img, feat_rows);
    case Variant::kGORnn: return encode_rnn(g, img, feat_rows);
    default: throw ContractError("image_representation: variant has no pooled image vector");
  }
}

SentenceGraph Model::build_sentence(Graph& g, const SentenceView& s,
                                    const SentenceGraphOptions& opts) const {
  if (!s.src || s.src->empty()) throw ContractError("build_sentence: missing source");
  const bool have_target = s.tgt && !s.tgt->empty();

  SentenceGraph out;
  out.source = encode_source(g, *s.src);

  const bool need_posterior =
      uses_latent() && (opts.want_posterior || opts.mode == LatentMode::kPosteriorSample ||
                        opts.mode == LatentMode::kPosteriorMean || (opts.want_kl && have_target));

  std::optional<NodeId> latent_feed;
  if (uses_latent()) {
    out.prior = prior_nodes(g, out.source.pooled);
    out.has_prior = true;

    if (need_posterior) {
      if (!have_target)
        throw ContractError("build_sentence: posterior needs the target sentence");
      if (uses_image() && !s.features)
        throw ContractError("build_sentence: variant " + std::string(variant_name(cfg_.variant)) +
                            " needs image features");

      NodeId src_table = g.param("src_emb", params_.at("src_emb"));
      NodeId tgt_table = g.param("tgt_emb", params_.at("tgt_emb"));
      BiGruNodes enc_tgt = bidirectional_nodes(g, params_, "enc_tgt", cfg_.d_h);

      NodeId h_f = out.source.pooled;
      NodeId h_g = -1;
      std::optional<NodeId> h_pi;
      if (cfg_.variant == Variant::kGOTxt) {
        // Projected feature rows are prepended to both embedded sequences;
        // only this posterior path sees them.
        ImageEncoderNodes img = image_encoder_nodes(g, params_, fusion_of(cfg_.variant), cfg_.d_pi);
        std::vector<NodeId> prefix = project_rows(g, img, feature_inputs(g, *s.features));
        BiGruNodes enc_src = bidirectional_nodes(g, params_, "enc_src", cfg_.d_h);

        std::vector<NodeId> src_seq = prefix;
        for (NodeId e : embed_sequence(g, src_table, *s.src)) src_seq.push_back(e);
        h_f = encode_sequence(g, enc_src, src_seq).pooled;

        std::vector<NodeId> tgt_seq = prefix;
        for (NodeId e : embed_sequence(g, tgt_table, *s.tgt)) tgt_seq.push_back(e);
        h_g = encode_sequence(g, enc_tgt, tgt_seq).pooled;
      } else {
        h_g = encode_sequence(g, enc_tgt, embed_sequence(g, tgt_table, *s.tgt)).pooled;
        if (uses_image()) {
          ImageEncoderNodes img =
              image_encoder_nodes(g, params_, fusion_of(cfg_.variant), cfg_.d_pi);
          h_pi = image_representation(g, img, feature_inputs(g, *s.features));
        }
      }
      NodeId h_e = build_semantic(g, h_f, h_g, h_pi);
      out.posterior = gaussian_head(g, params_, "post", h_e);
      out.has_posterior = true;
    }

    switch (opts.mode) {
      case LatentMode::kPosteriorSample: {
        if (!opts.epsilon) throw ContractError("build_sentence: posterior sample needs epsilon");
        NodeId eps = g.input(*opts.epsilon);
        out.h_z = reparameterize_node(g, out.posterior, eps);
        break;
      }
      case LatentMode::kPosteriorMean:
        out.h_z = out.posterior.mu;
        break;
      case LatentMode::kPriorMean:
        out.h_z = out.prior.mu;
        break;
      case LatentMode::kOverride:
        if (!opts.latent_override) throw ContractError("build_sentence: missing latent override");
        out.h_z = g.input(*opts.latent_override);
        break;
    }
    out.latent_feed = project_latent(g, out.h_z);
    latent_feed = out.latent_feed;

    if (opts.want_kl && out.has_posterior) out.kl = kl_node(g, out.posterior, out.prior);
  }

  if (have_target) {
    NodeId tgt_table = g.param("tgt_emb", params_.at("tgt_emb"));
    DecoderNodes dec = decoder_nodes(g, params_, decoder_opts_);
    out.decode = decode_teacher_forced(g, dec, tgt_table, out.source, latent_feed, *s.tgt);
    out.has_decode = true;
    NodeId neg_ll = g.scale(out.decode.log_likelihood, -1.0);
    out.loss = out.kl >= 0 ? g.add(out.kl, neg_ll) : neg_ll;
  }
  return out;
}

NodeId Model::build_batch_loss(Graph& g, const std::vector<SentenceView>& batch,
                               const std::vector<Tensor>& epsilons, double decay_c) const {
  if (batch.empty()) throw ContractError("build_batch_loss: empty batch");
  if (uses_latent() && epsilons.size() != batch.size())
    throw ContractError("build_batch_loss: one epsilon draw per sentence required");

  NodeId total = -1;
  for (size_t i = 0; i < batch.size(); ++i) {
    SentenceGraphOptions opts;
    opts.mode = LatentMode::kPosteriorSample;
    if (uses_latent()) opts.epsilon = &epsilons[i];
    else opts.mode = LatentMode::kPriorMean;  // ignored; NMT builds no latent
    SentenceGraph sg = build_sentence(g, batch[i], opts);
    total = i == 0 ? sg.loss : g.add(total, sg.loss);
  }
  NodeId loss = g.scale(total, 1.0 / static_cast<double>(batch.size()));

  if (decay_c > 0.0) {
    NodeId penalty = -1;
    for (const auto& e : params_.entries()) {
      if (e.is_bias) continue;
      NodeId p = g.param(e.name, e.value);
      NodeId sq = g.sum_all(g.mul(p, p));
      penalty = penalty < 0 ? sq : g.add(penalty, sq);
    }
    if (penalty >= 0) loss = g.add(loss, g.scale(penalty, decay_c));
  }
  return loss;
}

Model::Inferred Model::infer(const SentenceView& s) const {
  Graph g;
  SentenceGraphOptions opts;
  opts.mode = LatentMode::kPosteriorMean;
  opts.want_posterior = true;
  opts.want_kl = false;
  if (!uses_latent()) throw ContractError("infer: NMT has no inferrer");
  SentenceGraph sg = build_sentence(g, s, opts);
  return Inferred{gaussian_values(g, sg.posterior), gaussian_values(g, sg.prior)};
}

double Model::loglik_given_hz(const SentenceView& s, const Tensor& h_z) const {
  Graph g;
  SentenceGraphOptions opts;
  opts.mode = LatentMode::kOverride;
  opts.latent_override = &h_z;
  opts.want_kl = false;
  SentenceGraph sg = build_sentence(g, s, opts);
  return g.scalar_value(sg.decode.log_likelihood);
}

}  // namespace mvnmt
