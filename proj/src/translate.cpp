#include "mvnmt/translate.hpp"

#include <algorithm>

namespace mvnmt {

namespace {

double score_of(const Hypothesis& h, bool normalize) {
  if (!normalize) return h.log_prob;
  const size_t len = h.tokens.empty() ? 1 : h.tokens.size();
  return h.log_prob / static_cast<double>(len);
}

}  // namespace

bool hypothesis_better(const Hypothesis& a, const Hypothesis& b, bool length_normalize) {
  const double sa = score_of(a, length_normalize);
  const double sb = score_of(b, length_normalize);
  if (sa != sb) return sa > sb;
  if (a.tokens.size() != b.tokens.size()) return a.tokens.size() < b.tokens.size();
  return a.tokens < b.tokens;
}

Hypothesis Translator::translate(const std::vector<int>& src) const { return run(src, nullptr); }

Hypothesis Translator::translate_with_latent(const std::vector<int>& src,
                                             const Tensor& h_z) const {
  return run(src, &h_z);
}

Hypothesis Translator::run(const std::vector<int>& src, const Tensor* latent_override) const {
  if (opts_.beam_size < 1) throw ContractError("beam_search: beam size must be >= 1");

  Graph g;
  EncoderOutput enc = model_.encode_source(g, src);
  DecoderNodes dec = model_.decoder(g);
  NodeId precomp = attention_precompute(g, dec, enc.states);
  NodeId tgt_table = model_.target_embedding_table(g);

  std::optional<NodeId> latent;
  if (model_.uses_latent()) {
    NodeId h_z;
    if (latent_override) {
      h_z = g.input(*latent_override);
    } else {
      GaussianNodes prior = model_.prior_nodes(g, enc.pooled);
      h_z = prior.mu;  // translation-time latent: the prior mean exactly
    }
    latent = model_.project_latent(g, h_z);
  }

  struct Live {
    std::vector<int> tokens;
    double log_prob = 0.0;
    NodeId state;
    NodeId y_prev;
  };

  std::vector<Live> live;
  live.push_back(Live{{},
                      0.0,
                      decoder_init_state(g, dec, enc.pooled),
                      g.input(Tensor({dec.opts.d_emb}))});

  bool have_finished = false;
  Hypothesis best_finished;
  auto offer_finished = [&](Hypothesis h) {
    if (!have_finished || hypothesis_better(h, best_finished, opts_.length_normalize)) {
      best_finished = std::move(h);
      have_finished = true;
    }
  };

  for (int64_t step = 0; step < opts_.max_len && !live.empty(); ++step) {
    struct Candidate {
      double log_prob;
      size_t from;
      int token;
      NodeId state;
    };
    std::vector<Candidate> cands;
    for (size_t h = 0; h < live.size(); ++h) {
      DecodeStep ds = decode_step(g, dec, live[h].state, live[h].y_prev, enc.states, precomp, latent);
      const Tensor& lp = g.value(ds.log_probs);
      // The EOS extension of every live hypothesis retires to the finished
      // pool; finished hypotheses never occupy beam slots.
      std::vector<int> done = live[h].tokens;
      done.push_back(0);
      offer_finished(Hypothesis{std::move(done), live[h].log_prob + lp.at(0), true});
      for (int64_t v = 1; v < lp.numel(); ++v)
        cands.push_back(Candidate{live[h].log_prob + lp.at(v), h, static_cast<int>(v), ds.state});
    }

    auto better = [&](const Candidate& a, const Candidate& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      const auto& ta = live[a.from].tokens;
      const auto& tb = live[b.from].tokens;
      if (ta != tb) return ta < tb;
      return a.token < b.token;
    };
    const size_t keep = std::min<size_t>(cands.size(), static_cast<size_t>(opts_.beam_size));
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep),
                      cands.end(), better);
    cands.resize(keep);

    std::vector<Live> next;
    for (const Candidate& c : cands) {
      std::vector<int> toks = live[c.from].tokens;
      toks.push_back(c.token);
      next.push_back(Live{std::move(toks), c.log_prob, c.state, g.embed_col(tgt_table, c.token)});
    }
    live = std::move(next);

    // Per-step log-probabilities are nonpositive, so once the best finished
    // hypothesis scores at least as high as every live one, no continuation
    // can overtake it. Length normalization voids that bound.
    if (!opts_.length_normalize && have_finished && !live.empty() &&
        best_finished.log_prob >= live.front().log_prob)
      break;
  }

  if (have_finished) return best_finished;
  // max_len reached without any finished hypothesis: best live, unfinished.
  Hypothesis best{live[0].tokens, live[0].log_prob, false};
  for (size_t i = 1; i < live.size(); ++i) {
    Hypothesis h{live[i].tokens, live[i].log_prob, false};
    if (hypothesis_better(h, best, opts_.length_normalize)) best = h;
  }
  return best;
}

}  // namespace mvnmt
