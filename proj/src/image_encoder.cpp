#include "mvnmt/image_encoder.hpp"

namespace mvnmt {

const char* fusion_variant_name(FusionVariant v) {
  switch (v) {
    case FusionVariant::kG: return "g";
    case FusionVariant::kGOAvg: return "g-o-avg";
    case FusionVariant::kGORnn: return "g-o-rnn";
    case FusionVariant::kGOTxt: return "g-o-txt";
  }
  return "?";
}

NodeId project_affine(Graph& g, NodeId W_pi, NodeId b_pi, NodeId pi) {
  return g.add(g.matmul(W_pi, pi), b_pi);
}

void register_image_encoder(ParamSet& ps, FusionVariant v, int64_t d_pi, int64_t d_fc7) {
  ps.add("img_proj.W", {d_pi, d_fc7}, false);
  ps.add("img_proj.b", {d_pi}, true);
  if (v == FusionVariant::kGORnn) register_bidirectional(ps, "img_rnn", d_pi, d_pi);
}

ImageEncoderNodes image_encoder_nodes(Graph& g, const ParamSet& ps, FusionVariant v,
                                      int64_t d_pi) {
  ImageEncoderNodes n;
  n.W_pi = g.param("img_proj.W", ps.at("img_proj.W"));
  n.b_pi = g.param("img_proj.b", ps.at("img_proj.b"));
  if (v == FusionVariant::kGORnn) n.rnn = bidirectional_nodes(g, ps, "img_rnn", d_pi);
  return n;
}

std::vector<NodeId> feature_inputs(Graph& g, const Tensor& features) {
  if (features.rank() != 2 || features.rows() < 1)
    throw ContractError("feature_inputs: wants an l x d matrix with l >= 1, got " +
                        features.shape_str());
  std::vector<NodeId> rows;
  rows.reserve(static_cast<size_t>(features.rows()));
  for (int64_t r = 0; r < features.rows(); ++r) {
    Tensor row({features.cols()});
    for (int64_t c = 0; c < features.cols(); ++c) row.at(c) = features.at(r, c);
    rows.push_back(g.input(std::move(row)));
  }
  return rows;
}

std::vector<NodeId> project_rows(Graph& g, const ImageEncoderNodes& n,
                                 const std::vector<NodeId>& rows) {
  std::vector<NodeId> out;
  out.reserve(rows.size());
  for (NodeId r : rows) out.push_back(project_affine(g, n.W_pi, n.b_pi, r));
  return out;
}

NodeId encode_global(Graph& g, const ImageEncoderNodes& n, const std::vector<NodeId>& rows) {
  return project_affine(g, n.W_pi, n.b_pi, rows.at(0));
}

NodeId encode_avg(Graph& g, const ImageEncoderNodes& n, const std::vector<NodeId>& rows) {
  std::vector<NodeId> projected = project_rows(g, n, rows);
  if (projected.size() == 1) return projected[0];
  return g.mean_rows(g.stack_rows(projected));
}

NodeId encode_rnn(Graph& g, const ImageEncoderNodes& n, const std::vector<NodeId>& rows) {
  if (!n.rnn) throw ContractError("encode_rnn: image RNN parameters not registered");
  return encode_sequence(g, *n.rnn, project_rows(g, n, rows)).pooled;
}

NodeId build_semantic(Graph& g, NodeId h_f, NodeId h_g, std::optional<NodeId> h_pi) {
  NodeId text = g.concat(h_f, h_g);
  return h_pi ? g.concat(text, *h_pi) : text;
}

}  // namespace mvnmt
