#pragma once

#include <string>
#include <vector>

#include "mvnmt/graph.hpp"
#include "mvnmt/params.hpp"

namespace mvnmt {

// Gated recurrent unit without bias terms: the gate equations carry only the
// input and recurrent weight products.
struct GruNodes {
  NodeId W_r, U_r, W_o, U_o, W_c, U_c;
};

void register_gru(ParamSet& ps, const std::string& prefix, int64_t input_dim, int64_t state_dim);
GruNodes gru_nodes(Graph& g, const ParamSet& ps, const std::string& prefix);

// r = sigmoid(W_r x + U_r h), o = sigmoid(W_o x + U_o h),
// cand = tanh(W_c x + r (.) (U_c h)), h' = (1 - o) (.) cand + o (.) h.
NodeId gru_step(Graph& g, const GruNodes& p, NodeId prev, NodeId input);

struct BiGruNodes {
  GruNodes forward;
  GruNodes backward;
  int64_t state_dim = 0;  // total width; each direction runs at state_dim/2
};

// Registers <prefix>_fwd.* and <prefix>_bwd.* chains, each of width
// state_dim/2. state_dim must be even.
void register_bidirectional(ParamSet& ps, const std::string& prefix, int64_t input_dim,
                            int64_t state_dim);
BiGruNodes bidirectional_nodes(Graph& g, const ParamSet& ps, const std::string& prefix,
                               int64_t state_dim);

struct EncoderOutput {
  NodeId states;              // [T, d_h]; row i = [fwd_i ; bwd_i]
  NodeId pooled;              // [d_h]; arithmetic mean of the rows
  std::vector<NodeId> rows;   // per-position state vectors
};

// Embedding lookup: column `id` of a [d_emb, vocab] table per position.
std::vector<NodeId> embed_sequence(Graph& g, NodeId table, const std::vector<int>& ids);

// Bidirectional encoding from zero initial states, then mean pooling.
EncoderOutput encode_sequence(Graph& g, const BiGruNodes& p, const std::vector<NodeId>& inputs);

}  // namespace mvnmt
