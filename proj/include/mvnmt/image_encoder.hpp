#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mvnmt/graph.hpp"
#include "mvnmt/params.hpp"
#include "mvnmt/text_encoder.hpp"

namespace mvnmt {

// Image fusion strategies. G consumes only the whole-image row of the feature
// set; the G+O variants consume all rows (row 0 = whole image, rows 1.. =
// object crops).
enum class FusionVariant { kG, kGOAvg, kGORnn, kGOTxt };

const char* fusion_variant_name(FusionVariant v);

// h_pi = W_pi * pi + b_pi
NodeId project_affine(Graph& g, NodeId W_pi, NodeId b_pi, NodeId pi);

struct ImageEncoderNodes {
  NodeId W_pi, b_pi;
  std::optional<BiGruNodes> rnn;  // G+O-RNN only, total width d_pi
};

void register_image_encoder(ParamSet& ps, FusionVariant v, int64_t d_pi, int64_t d_fc7);
ImageEncoderNodes image_encoder_nodes(Graph& g, const ParamSet& ps, FusionVariant v, int64_t d_pi);

// Feature rows enter the graph as constant inputs; l >= 1.
std::vector<NodeId> feature_inputs(Graph& g, const Tensor& features);

// Per-row affine projections h'_pi.
std::vector<NodeId> project_rows(Graph& g, const ImageEncoderNodes& n,
                                 const std::vector<NodeId>& rows);

NodeId encode_global(Graph& g, const ImageEncoderNodes& n, const std::vector<NodeId>& rows);
NodeId encode_avg(Graph& g, const ImageEncoderNodes& n, const std::vector<NodeId>& rows);
NodeId encode_rnn(Graph& g, const ImageEncoderNodes& n, const std::vector<NodeId>& rows);

// h_e = [h_f ; h_g ; h_pi], or [h_f ; h_g] when no image component (G+O-TXT).
NodeId build_semantic(Graph& g, NodeId h_f, NodeId h_g, std::optional<NodeId> h_pi);

}  // namespace mvnmt
