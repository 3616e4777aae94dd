#pragma once

#include <optional>
#include <vector>

#include "mvnmt/graph.hpp"
#include "mvnmt/params.hpp"
#include "mvnmt/text_encoder.hpp"

namespace mvnmt {

// Conditional GRU decoder: first GRU over the previous target embedding, an
// attention read over the source states, then a second GRU that also receives
// the projected latent h'_e. latent_dim 0 drops the V matrices entirely (the
// plain attention NMT baseline).
struct DecoderOptions {
  int64_t d_h = 0;
  int64_t d_emb = 0;
  int64_t vocab_tgt = 0;
  int64_t latent_dim = 0;  // width of h'_e; 0 = no latent injection
  // Eq. (17) is implemented as printed: s = (1 - o') (.) cand + o (.) s'.
  // gate_fix replaces the stray o' with o.
  bool gate_fix = false;
};

struct DecoderNodes {
  GruNodes gru1;
  NodeId W_init;
  NodeId att_W_c, att_W_s, att_U;  // att_U is a d_h vector producing scalar scores
  NodeId g2_W_r, g2_U_r, g2_W_o, g2_U_o, g2_W_c, g2_U_c;
  NodeId g2_V_r = -1, g2_V_o = -1, g2_V_c = -1;
  NodeId L_u, L_s, L_x;
  DecoderOptions opts;
};

void register_decoder(ParamSet& ps, const DecoderOptions& opts);
DecoderNodes decoder_nodes(Graph& g, const ParamSet& ps, const DecoderOptions& opts);

// s_0 = tanh(W_init * mean of the source states).
NodeId decoder_init_state(Graph& g, const DecoderNodes& n, NodeId pooled_source);

// Rows of the source-state matrix premultiplied for attention scoring; built
// once per sentence.
NodeId attention_precompute(Graph& g, const DecoderNodes& n, NodeId encoder_states);

struct AttendResult {
  NodeId context;    // c_j = tanh(sum_i alpha_ij h_i)
  NodeId attention;  // alpha_.j over source positions
};
AttendResult attend(Graph& g, const DecoderNodes& n, NodeId s_intermediate,
                    NodeId encoder_states, NodeId precomputed);

struct GruWithGate {
  NodeId state;
  NodeId update_gate;
};
// First GRU; the update gate o' is exposed because Eq. (17) reuses it.
GruWithGate gru1_step(Graph& g, const DecoderNodes& n, NodeId s_prev, NodeId y_prev_emb);

NodeId gru2_step(Graph& g, const DecoderNodes& n, NodeId s_intermediate, NodeId update_gate1,
                 NodeId context, std::optional<NodeId> latent);

// u_j = L_u tanh(E[y_{j-1}] + L_s s_j + L_x c_j); returns log-softmax(u_j).
NodeId output_log_probs(Graph& g, const DecoderNodes& n, NodeId y_prev_emb, NodeId s,
                        NodeId context);

struct DecodeStep {
  NodeId s_intermediate;
  NodeId context;
  NodeId attention;
  NodeId state;
  NodeId log_probs;
};

DecodeStep decode_step(Graph& g, const DecoderNodes& n, NodeId s_prev, NodeId y_prev_emb,
                       NodeId encoder_states, NodeId precomputed, std::optional<NodeId> latent);

struct TeacherForcedResult {
  NodeId log_likelihood;  // scalar sum over steps of log p(y_j | y_<j, z, x)
  std::vector<DecodeStep> steps;
};

// target must end with EOS; y_0 enters as a zero embedding.
TeacherForcedResult decode_teacher_forced(Graph& g, const DecoderNodes& n, NodeId tgt_table,
                                          const EncoderOutput& source,
                                          std::optional<NodeId> latent,
                                          const std::vector<int>& target);

}  // namespace mvnmt
