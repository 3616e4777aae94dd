#include "mvnmt/text_encoder.hpp"

namespace mvnmt {

void register_gru(ParamSet& ps, const std::string& prefix, int64_t input_dim, int64_t state_dim) {
  ps.add(prefix + ".W_r", {state_dim, input_dim}, false);
  ps.add(prefix + ".U_r", {state_dim, state_dim}, false);
  ps.add(prefix + ".W_o", {state_dim, input_dim}, false);
  ps.add(prefix + ".U_o", {state_dim, state_dim}, false);
  ps.add(prefix + ".W_c", {state_dim, input_dim}, false);
  ps.add(prefix + ".U_c", {state_dim, state_dim}, false);
}

GruNodes gru_nodes(Graph& g, const ParamSet& ps, const std::string& prefix) {
  GruNodes n;
  n.W_r = g.param(prefix + ".W_r", ps.at(prefix + ".W_r"));
  n.U_r = g.param(prefix + ".U_r", ps.at(prefix + ".U_r"));
  n.W_o = g.param(prefix + ".W_o", ps.at(prefix + ".W_o"));
  n.U_o = g.param(prefix + ".U_o", ps.at(prefix + ".U_o"));
  n.W_c = g.param(prefix + ".W_c", ps.at(prefix + ".W_c"));
  n.U_c = g.param(prefix + ".U_c", ps.at(prefix + ".U_c"));
  return n;
}

NodeId gru_step(Graph& g, const GruNodes& p, NodeId prev, NodeId input) {
  NodeId r = g.sigmoid(g.add(g.matmul(p.W_r, input), g.matmul(p.U_r, prev)));
  NodeId o = g.sigmoid(g.add(g.matmul(p.W_o, input), g.matmul(p.U_o, prev)));
  NodeId cand = g.tanh(g.add(g.matmul(p.W_c, input), g.mul(r, g.matmul(p.U_c, prev))));
  return g.add(g.mul(g.one_minus(o), cand), g.mul(o, prev));
}

void register_bidirectional(ParamSet& ps, const std::string& prefix, int64_t input_dim,
                            int64_t state_dim) {
  if (state_dim % 2 != 0)
    throw ContractError("bidirectional " + prefix + ": state width " +
                        std::to_string(state_dim) + " must be even");
  register_gru(ps, prefix + "_fwd", input_dim, state_dim / 2);
  register_gru(ps, prefix + "_bwd", input_dim, state_dim / 2);
}

BiGruNodes bidirectional_nodes(Graph& g, const ParamSet& ps, const std::string& prefix,
                               int64_t state_dim) {
  BiGruNodes n;
  n.forward = gru_nodes(g, ps, prefix + "_fwd");
  n.backward = gru_nodes(g, ps, prefix + "_bwd");
  n.state_dim = state_dim;
  return n;
}

std::vector<NodeId> embed_sequence(Graph& g, NodeId table, const std::vector<int>& ids) {
  std::vector<NodeId> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(g.embed_col(table, id));
  return out;
}

EncoderOutput encode_sequence(Graph& g, const BiGruNodes& p, const std::vector<NodeId>& inputs) {
  if (inputs.empty()) throw ContractError("encode_sequence: empty input sequence");
  const size_t T = inputs.size();
  const int64_t half = p.state_dim / 2;

  std::vector<NodeId> fwd(T), bwd(T);
  NodeId h = g.input(Tensor({half}));
  for (size_t i = 0; i < T; ++i) {
    h = gru_step(g, p.forward, h, inputs[i]);
    fwd[i] = h;
  }
  h = g.input(Tensor({half}));
  for (size_t i = T; i-- > 0;) {
    h = gru_step(g, p.backward, h, inputs[i]);
    bwd[i] = h;
  }

  EncoderOutput out;
  out.rows.reserve(T);
  for (size_t i = 0; i < T; ++i) out.rows.push_back(g.concat(fwd[i], bwd[i]));
  out.states = g.stack_rows(out.rows);
  out.pooled = g.mean_rows(out.states);
  return out;
}

}  // namespace mvnmt
