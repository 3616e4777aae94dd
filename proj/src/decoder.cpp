#include "mvnmt/decoder.hpp"

namespace mvnmt {

void register_decoder(ParamSet& ps, const DecoderOptions& opts) {
  ps.add("dec.W_init", {opts.d_h, opts.d_h}, false);
  register_gru(ps, "dec.gru1", opts.d_emb, opts.d_h);
  ps.add("dec.att.W_c", {opts.d_h, opts.d_h}, false);
  ps.add("dec.att.W_s", {opts.d_h, opts.d_h}, false);
  ps.add("dec.att.U", {opts.d_h}, false);
  ps.add("dec.gru2.W_r", {opts.d_h, opts.d_h}, false);
  ps.add("dec.gru2.U_r", {opts.d_h, opts.d_h}, false);
  ps.add("dec.gru2.W_o", {opts.d_h, opts.d_h}, false);
  ps.add("dec.gru2.U_o", {opts.d_h, opts.d_h}, false);
  ps.add("dec.gru2.W_c", {opts.d_h, opts.d_h}, false);
  ps.add("dec.gru2.U_c", {opts.d_h, opts.d_h}, false);
  if (opts.latent_dim > 0) {
    ps.add("dec.gru2.V_r", {opts.d_h, opts.latent_dim}, false);
    ps.add("dec.gru2.V_o", {opts.d_h, opts.latent_dim}, false);
    ps.add("dec.gru2.V_c", {opts.d_h, opts.latent_dim}, false);
  }
  ps.add("dec.out.L_s", {opts.d_emb, opts.d_h}, false);
  ps.add("dec.out.L_x", {opts.d_emb, opts.d_h}, false);
  ps.add("dec.out.L_u", {opts.vocab_tgt, opts.d_emb}, false);
}

DecoderNodes decoder_nodes(Graph& g, const ParamSet& ps, const DecoderOptions& opts) {
  DecoderNodes n;
  n.opts = opts;
  n.W_init = g.param("dec.W_init", ps.at("dec.W_init"));
  n.gru1 = gru_nodes(g, ps, "dec.gru1");
  n.att_W_c = g.param("dec.att.W_c", ps.at("dec.att.W_c"));
  n.att_W_s = g.param("dec.att.W_s", ps.at("dec.att.W_s"));
  n.att_U = g.param("dec.att.U", ps.at("dec.att.U"));
  n.g2_W_r = g.param("dec.gru2.W_r", ps.at("dec.gru2.W_r"));
  n.g2_U_r = g.param("dec.gru2.U_r", ps.at("dec.gru2.U_r"));
  n.g2_W_o = g.param("dec.gru2.W_o", ps.at("dec.gru2.W_o"));
  n.g2_U_o = g.param("dec.gru2.U_o", ps.at("dec.gru2.U_o"));
  n.g2_W_c = g.param("dec.gru2.W_c", ps.at("dec.gru2.W_c"));
  n.g2_U_c = g.param("dec.gru2.U_c", ps.at("dec.gru2.U_c"));
  if (opts.latent_dim > 0) {
    n.g2_V_r = g.param("dec.gru2.V_r", ps.at("dec.gru2.V_r"));
    n.g2_V_o = g.param("dec.gru2.V_o", ps.at("dec.gru2.V_o"));
    n.g2_V_c = g.param("dec.gru2.V_c", ps.at("dec.gru2.V_c"));
  }
  n.L_s = g.param("dec.out.L_s", ps.at("dec.out.L_s"));
  n.L_x = g.param("dec.out.L_x", ps.at("dec.out.L_x"));
  n.L_u = g.param("dec.out.L_u", ps.at("dec.out.L_u"));
  return n;
}

NodeId decoder_init_state(Graph& g, const DecoderNodes& n, NodeId pooled_source) {
  return g.tanh(g.matmul(n.W_init, pooled_source));
}

NodeId attention_precompute(Graph& g, const DecoderNodes& n, NodeId encoder_states) {
  // Row i = (W_catt h_i)^T.
  return g.matmul_nt(encoder_states, n.att_W_c);
}

AttendResult attend(Graph& g, const DecoderNodes& n, NodeId s_intermediate,
                    NodeId encoder_states, NodeId precomputed) {
  NodeId keyed = g.tanh(g.add(precomputed, g.matmul(n.att_W_s, s_intermediate)));
  NodeId scores = g.matmul(keyed, n.att_U);  // e_ij, one scalar per source position
  AttendResult r;
  r.attention = g.softmax(scores);
  r.context = g.tanh(g.weighted_sum_rows(encoder_states, r.attention));
  return r;
}

GruWithGate gru1_step(Graph& g, const DecoderNodes& n, NodeId s_prev, NodeId y_prev_emb) {
  const GruNodes& p = n.gru1;
  NodeId r = g.sigmoid(g.add(g.matmul(p.W_r, y_prev_emb), g.matmul(p.U_r, s_prev)));
  NodeId o = g.sigmoid(g.add(g.matmul(p.W_o, y_prev_emb), g.matmul(p.U_o, s_prev)));
  NodeId cand = g.tanh(g.add(g.matmul(p.W_c, y_prev_emb), g.mul(r, g.matmul(p.U_c, s_prev))));
  GruWithGate out;
  out.state = g.add(g.mul(g.one_minus(o), cand), g.mul(o, s_prev));
  out.update_gate = o;
  return out;
}

NodeId gru2_step(Graph& g, const DecoderNodes& n, NodeId s_intermediate, NodeId update_gate1,
                 NodeId context, std::optional<NodeId> latent) {
  auto gate_pre = [&](NodeId W, NodeId U, NodeId V) {
    NodeId pre = g.add(g.matmul(W, context), g.matmul(U, s_intermediate));
    if (latent && V >= 0) pre = g.add(pre, g.matmul(V, *latent));
    return pre;
  };
  NodeId r = g.sigmoid(gate_pre(n.g2_W_r, n.g2_U_r, n.g2_V_r));
  NodeId o = g.sigmoid(gate_pre(n.g2_W_o, n.g2_U_o, n.g2_V_o));
  NodeId cand_pre = g.add(g.matmul(n.g2_W_c, context), g.mul(r, g.matmul(n.g2_U_c, s_intermediate)));
  if (latent && n.g2_V_c >= 0) cand_pre = g.add(cand_pre, g.matmul(n.g2_V_c, *latent));
  NodeId cand = g.tanh(cand_pre);
  NodeId keep = n.opts.gate_fix ? o : update_gate1;
  return g.add(g.mul(g.one_minus(keep), cand), g.mul(o, s_intermediate));
}

NodeId output_log_probs(Graph& g, const DecoderNodes& n, NodeId y_prev_emb, NodeId s,
                        NodeId context) {
  NodeId pre = g.add(g.add(y_prev_emb, g.matmul(n.L_s, s)), g.matmul(n.L_x, context));
  return g.log_softmax(g.matmul(n.L_u, g.tanh(pre)));
}

DecodeStep decode_step(Graph& g, const DecoderNodes& n, NodeId s_prev, NodeId y_prev_emb,
                       NodeId encoder_states, NodeId precomputed, std::optional<NodeId> latent) {
  DecodeStep step;
  GruWithGate first = gru1_step(g, n, s_prev, y_prev_emb);
  step.s_intermediate = first.state;
  AttendResult att = attend(g, n, first.state, encoder_states, precomputed);
  step.context = att.context;
  step.attention = att.attention;
  step.state = gru2_step(g, n, first.state, first.update_gate, att.context, latent);
  step.log_probs = output_log_probs(g, n, y_prev_emb, step.state, att.context);
  return step;
}

TeacherForcedResult decode_teacher_forced(Graph& g, const DecoderNodes& n, NodeId tgt_table,
                                          const EncoderOutput& source,
                                          std::optional<NodeId> latent,
                                          const std::vector<int>& target) {
  if (target.empty() || target.back() != 0)
    throw ContractError("decode_teacher_forced: target must end with EOS (id 0)");

  NodeId precomputed = attention_precompute(g, n, source.states);
  NodeId s = decoder_init_state(g, n, source.pooled);
  NodeId y_prev = g.input(Tensor({n.opts.d_emb}));  // zero vector before the first token

  TeacherForcedResult out;
  NodeId total = -1;
  for (size_t j = 0; j < target.size(); ++j) {
    DecodeStep step = decode_step(g, n, s, y_prev, source.states, precomputed, latent);
    NodeId lp = g.pick(step.log_probs, target[j]);
    total = j == 0 ? lp : g.add(total, lp);
    out.steps.push_back(step);
    s = step.state;
    if (j + 1 < target.size()) y_prev = g.embed_col(tgt_table, target[j]);
  }
  out.log_likelihood = total;
  return out;
}

}  // namespace mvnmt
