#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "mvnmt/tensor.hpp"

namespace mvnmt {

using NodeId = int32_t;

// Per-parameter gradients, keyed by parameter name. backward() fills it with
// exactly the parameters reachable from the loss node.
struct GradientMap {
  std::map<std::string, Tensor> grads;

  bool has(const std::string& name) const { return grads.count(name) != 0; }
  const Tensor& at(const std::string& name) const { return grads.at(name); }
  size_t size() const { return grads.size(); }
};

// Reverse-mode automatic differentiation over a tape of eagerly evaluated
// nodes. Construction order is a topological order by definition: an op can
// only consume ids that already exist. Single-threaded per instance.
class Graph {
 public:
  enum class Op : uint8_t {
    kInput,
    kParam,
    kMatMul,           // A[m,k] * B[k,n] or A[m,k] * x[k]
    kMatMulNT,         // A[m,k] * B[n,k]^T
    kAdd,              // same shape, or matrix + row vector
    kSub,
    kMul,              // elementwise
    kScale,            // * constant
    kAddScalar,        // + constant
    kTanh,
    kSigmoid,
    kExp,
    kClamp,
    kSoftmax,          // over the last axis, max-subtracted
    kLogSoftmax,
    kConcat,           // two vectors
    kSlice,            // vector range [i0, i1)
    kMeanRows,         // [T,d] -> [d]
    kSumAll,           // -> scalar
    kPick,             // vector element i0 -> scalar
    kEmbedCol,         // column i0 of a [d,V] matrix -> [d]
    kStackRows,        // T vectors [d] -> [T,d]
    kWeightedSumRows,  // H [T,d], w [T] -> [d]
  };

  NodeId input(Tensor value);
  // Registers a parameter leaf; repeated registration under the same name
  // returns the original node, keeping names unique within the graph.
  NodeId param(const std::string& name, const Tensor& value);

  NodeId matmul(NodeId a, NodeId b);
  NodeId matmul_nt(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  NodeId add_scalar(NodeId a, double constant);
  NodeId tanh(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId exp(NodeId a);
  NodeId clamp(NodeId a, double lo, double hi);
  NodeId softmax(NodeId a);
  NodeId log_softmax(NodeId a);
  NodeId concat(NodeId a, NodeId b);
  NodeId slice(NodeId a, int64_t from, int64_t to);
  NodeId mean_rows(NodeId a);
  NodeId sum_all(NodeId a);
  NodeId pick(NodeId a, int64_t index);
  NodeId embed_col(NodeId table, int64_t column);
  NodeId stack_rows(const std::vector<NodeId>& rows);
  NodeId weighted_sum_rows(NodeId matrix, NodeId weights);

  // 1 - a, used by the GRU gate combinations.
  NodeId one_minus(NodeId a) { return add_scalar(scale(a, -1.0), 1.0); }

  const Tensor& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
  double scalar_value(NodeId id) const;
  size_t size() const { return nodes_.size(); }

  // Reverse sweep from a scalar loss node. Deterministic given the tape.
  GradientMap backward(NodeId loss) const;

 private:
  struct Node {
    Op op;
    std::vector<NodeId> inputs;
    Tensor value;
    double c0 = 0.0, c1 = 0.0;   // scale factor / clamp bounds
    int64_t i0 = 0, i1 = 0;      // slice range / pick index / embed column
    std::string name;            // kParam only
  };

  NodeId push(Node n);
  const Node& node(NodeId id) const { return nodes_[static_cast<size_t>(id)]; }
  static void check_same_shape(const char* op, const Tensor& a, const Tensor& b);

  std::vector<Node> nodes_;
  std::unordered_map<std::string, NodeId> param_ids_;
};

}  // namespace mvnmt
