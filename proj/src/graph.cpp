#include "mvnmt/graph.hpp"

#include <algorithm>
#include <cmath>

namespace mvnmt {

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

namespace {

void matvec(const Tensor& a, const Tensor& x, Tensor& out) {
  const int64_t m = a.rows(), k = a.cols();
  for (int64_t r = 0; r < m; ++r) {
    double acc = 0.0;
    const double* arow = a.data.data() + r * k;
    for (int64_t j = 0; j < k; ++j) acc += arow[j] * x.data[static_cast<size_t>(j)];
    out.at(r) = acc;
  }
}

// out += alpha * a^T * g  (a [m,k], g [m,n], out [k,n])
void accum_atg(const Tensor& a, const Tensor& g, Tensor& out) {
  const int64_t m = a.rows(), k = a.cols();
  const int64_t n = g.rank() == 2 ? g.cols() : 1;
  for (int64_t r = 0; r < m; ++r)
    for (int64_t j = 0; j < k; ++j) {
      const double arj = a.data[static_cast<size_t>(r * k + j)];
      if (arj == 0.0) continue;
      for (int64_t c = 0; c < n; ++c)
        out.data[static_cast<size_t>(j * n + c)] += arj * g.data[static_cast<size_t>(r * n + c)];
    }
}

}  // namespace

double Graph::scalar_value(NodeId id) const {
  const Tensor& t = value(id);
  if (!t.is_scalar()) throw ContractError("scalar_value: node is not scalar, shape " + t.shape_str());
  return t.data[0];
}

void Graph::check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shapes " + a.shape_str() + " and " + b.shape_str() +
                     " do not conform");
}

NodeId Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::input(Tensor value) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Graph::param(const std::string& name, const Tensor& value) {
  auto it = param_ids_.find(name);
  if (it != param_ids_.end()) return it->second;
  Node n;
  n.op = Op::kParam;
  n.value = value;
  n.name = name;
  NodeId id = push(std::move(n));
  param_ids_.emplace(name, id);
  return id;
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.rank() != 2)
    throw ShapeError("matmul: left operand must be rank 2, got " + A.shape_str());
  Node n;
  n.op = Op::kMatMul;
  n.inputs = {a, b};
  if (B.rank() == 1) {
    if (A.cols() != B.rows())
      throw ShapeError("matmul: shapes " + A.shape_str() + " and " + B.shape_str() + " do not conform");
    n.value = Tensor({A.rows()});
    matvec(A, B, n.value);
  } else {
    if (A.cols() != B.rows())
      throw ShapeError("matmul: shapes " + A.shape_str() + " and " + B.shape_str() + " do not conform");
    const int64_t m = A.rows(), k = A.cols(), c = B.cols();
    n.value = Tensor({m, c});
    for (int64_t r = 0; r < m; ++r)
      for (int64_t j = 0; j < k; ++j) {
        const double arj = A.at(r, j);
        if (arj == 0.0) continue;
        for (int64_t q = 0; q < c; ++q) n.value.at(r, q) += arj * B.at(j, q);
      }
  }
  return push(std::move(n));
}

NodeId Graph::matmul_nt(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.cols())
    throw ShapeError("matmul_nt: shapes " + A.shape_str() + " and " + B.shape_str() +
                     " do not conform");
  Node n;
  n.op = Op::kMatMulNT;
  n.inputs = {a, b};
  const int64_t m = A.rows(), k = A.cols(), p = B.rows();
  n.value = Tensor({m, p});
  for (int64_t r = 0; r < m; ++r)
    for (int64_t q = 0; q < p; ++q) {
      double acc = 0.0;
      for (int64_t j = 0; j < k; ++j) acc += A.at(r, j) * B.at(q, j);
      n.value.at(r, q) = acc;
    }
  return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  Node n;
  n.op = Op::kAdd;
  n.inputs = {a, b};
  if (A.same_shape(B)) {
    n.value = A;
    for (size_t i = 0; i < B.data.size(); ++i) n.value.data[i] += B.data[i];
  } else if (A.rank() == 2 && B.rank() == 1 && A.cols() == B.rows()) {
    // The one permitted broadcast: bias vector added to every matrix row.
    n.value = A;
    for (int64_t r = 0; r < A.rows(); ++r)
      for (int64_t c = 0; c < A.cols(); ++c) n.value.at(r, c) += B.at(c);
  } else {
    throw ShapeError("add: shapes " + A.shape_str() + " and " + B.shape_str() + " do not conform");
  }
  return push(std::move(n));
}

NodeId Graph::sub(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check_same_shape("sub", A, B);
  Node n;
  n.op = Op::kSub;
  n.inputs = {a, b};
  n.value = A;
  for (size_t i = 0; i < B.data.size(); ++i) n.value.data[i] -= B.data[i];
  return push(std::move(n));
}

NodeId Graph::mul(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check_same_shape("mul", A, B);
  Node n;
  n.op = Op::kMul;
  n.inputs = {a, b};
  n.value = A;
  for (size_t i = 0; i < B.data.size(); ++i) n.value.data[i] *= B.data[i];
  return push(std::move(n));
}

NodeId Graph::scale(NodeId a, double factor) {
  Node n;
  n.op = Op::kScale;
  n.inputs = {a};
  n.c0 = factor;
  n.value = value(a);
  for (double& v : n.value.data) v *= factor;
  return push(std::move(n));
}

NodeId Graph::add_scalar(NodeId a, double constant) {
  Node n;
  n.op = Op::kAddScalar;
  n.inputs = {a};
  n.c0 = constant;
  n.value = value(a);
  for (double& v : n.value.data) v += constant;
  return push(std::move(n));
}

NodeId Graph::tanh(NodeId a) {
  Node n;
  n.op = Op::kTanh;
  n.inputs = {a};
  n.value = value(a);
  for (double& v : n.value.data) v = std::tanh(v);
  return push(std::move(n));
}

NodeId Graph::sigmoid(NodeId a) {
  Node n;
  n.op = Op::kSigmoid;
  n.inputs = {a};
  n.value = value(a);
  for (double& v : n.value.data) v = 1.0 / (1.0 + std::exp(-v));
  return push(std::move(n));
}

NodeId Graph::exp(NodeId a) {
  Node n;
  n.op = Op::kExp;
  n.inputs = {a};
  n.value = value(a);
  for (double& v : n.value.data) v = std::exp(v);
  return push(std::move(n));
}

NodeId Graph::clamp(NodeId a, double lo, double hi) {
  Node n;
  n.op = Op::kClamp;
  n.inputs = {a};
  n.c0 = lo;
  n.c1 = hi;
  n.value = value(a);
  for (double& v : n.value.data) v = std::min(hi, std::max(lo, v));
  return push(std::move(n));
}

namespace {

void softmax_span(const double* x, double* y, int64_t n, bool log_space) {
  double mx = x[0];
  for (int64_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  double sum = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    y[i] = std::exp(x[i] - mx);
    sum += y[i];
  }
  if (log_space) {
    const double lse = mx + std::log(sum);
    for (int64_t i = 0; i < n; ++i) y[i] = x[i] - lse;
  } else {
    for (int64_t i = 0; i < n; ++i) y[i] /= sum;
  }
}

}  // namespace

NodeId Graph::softmax(NodeId a) {
  const Tensor& A = value(a);
  if (A.rank() > 2) throw ShapeError("softmax: rank > 2 unsupported, shape " + A.shape_str());
  Node n;
  n.op = Op::kSoftmax;
  n.inputs = {a};
  n.value = A;
  const int64_t cols = A.rank() == 2 ? A.cols() : A.numel();
  const int64_t rows = A.numel() / cols;
  for (int64_t r = 0; r < rows; ++r)
    softmax_span(A.data.data() + r * cols, n.value.data.data() + r * cols, cols, false);
  return push(std::move(n));
}

NodeId Graph::log_softmax(NodeId a) {
  const Tensor& A = value(a);
  if (A.rank() > 2) throw ShapeError("log_softmax: rank > 2 unsupported, shape " + A.shape_str());
  Node n;
  n.op = Op::kLogSoftmax;
  n.inputs = {a};
  n.value = A;
  const int64_t cols = A.rank() == 2 ? A.cols() : A.numel();
  const int64_t rows = A.numel() / cols;
  for (int64_t r = 0; r < rows; ++r)
    softmax_span(A.data.data() + r * cols, n.value.data.data() + r * cols, cols, true);
  return push(std::move(n));
}

NodeId Graph::concat(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.rank() != 1 || B.rank() != 1)
    throw ShapeError("concat: wants two vectors, got " + A.shape_str() + " and " + B.shape_str());
  Node n;
  n.op = Op::kConcat;
  n.inputs = {a, b};
  n.value = Tensor({A.numel() + B.numel()});
  std::copy(A.data.begin(), A.data.end(), n.value.data.begin());
  std::copy(B.data.begin(), B.data.end(), n.value.data.begin() + A.data.size());
  return push(std::move(n));
}

NodeId Graph::slice(NodeId a, int64_t from, int64_t to) {
  const Tensor& A = value(a);
  if (A.rank() != 1 || from < 0 || to > A.numel() || from >= to)
    throw ShapeError("slice: range [" + std::to_string(from) + "," + std::to_string(to) +
                     ") invalid for shape " + A.shape_str());
  Node n;
  n.op = Op::kSlice;
  n.inputs = {a};
  n.i0 = from;
  n.i1 = to;
  n.value = Tensor({to - from});
  std::copy(A.data.begin() + from, A.data.begin() + to, n.value.data.begin());
  return push(std::move(n));
}

NodeId Graph::mean_rows(NodeId a) {
  const Tensor& A = value(a);
  if (A.rank() != 2) throw ShapeError("mean_rows: wants a matrix, got " + A.shape_str());
  Node n;
  n.op = Op::kMeanRows;
  n.inputs = {a};
  n.value = Tensor({A.cols()});
  for (int64_t r = 0; r < A.rows(); ++r)
    for (int64_t c = 0; c < A.cols(); ++c) n.value.at(c) += A.at(r, c);
  for (double& v : n.value.data) v /= static_cast<double>(A.rows());
  return push(std::move(n));
}

NodeId Graph::sum_all(NodeId a) {
  Node n;
  n.op = Op::kSumAll;
  n.inputs = {a};
  double acc = 0.0;
  for (double v : value(a).data) acc += v;
  n.value = Tensor::scalar(acc);
  return push(std::move(n));
}

NodeId Graph::pick(NodeId a, int64_t index) {
  const Tensor& A = value(a);
  if (A.rank() != 1 || index < 0 || index >= A.numel())
    throw ShapeError("pick: index " + std::to_string(index) + " invalid for shape " + A.shape_str());
  Node n;
  n.op = Op::kPick;
  n.inputs = {a};
  n.i0 = index;
  n.value = Tensor::scalar(A.at(index));
  return push(std::move(n));
}

NodeId Graph::embed_col(NodeId table, int64_t column) {
  const Tensor& T = value(table);
  if (T.rank() != 2 || column < 0 || column >= T.cols())
    throw ShapeError("embed_col: column " + std::to_string(column) + " invalid for table " +
                     T.shape_str());
  Node n;
  n.op = Op::kEmbedCol;
  n.inputs = {table};
  n.i0 = column;
  n.value = Tensor({T.rows()});
  for (int64_t r = 0; r < T.rows(); ++r) n.value.at(r) = T.at(r, column);
  return push(std::move(n));
}

NodeId Graph::stack_rows(const std::vector<NodeId>& rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no rows");
  const int64_t d = value(rows[0]).numel();
  Node n;
  n.op = Op::kStackRows;
  n.inputs = rows;
  n.value = Tensor({static_cast<int64_t>(rows.size()), d});
  for (size_t r = 0; r < rows.size(); ++r) {
    const Tensor& v = value(rows[r]);
    if (v.rank() != 1 || v.numel() != d)
      throw ShapeError("stack_rows: row shapes " + value(rows[0]).shape_str() + " and " +
                       v.shape_str() + " do not conform");
    std::copy(v.data.begin(), v.data.end(), n.value.data.begin() + static_cast<int64_t>(r) * d);
  }
  return push(std::move(n));
}

NodeId Graph::weighted_sum_rows(NodeId matrix, NodeId weights) {
  const Tensor& H = value(matrix);
  const Tensor& w = value(weights);
  if (H.rank() != 2 || w.rank() != 1 || H.rows() != w.numel())
    throw ShapeError("weighted_sum_rows: shapes " + H.shape_str() + " and " + w.shape_str() +
                     " do not conform");
  Node n;
  n.op = Op::kWeightedSumRows;
  n.inputs = {matrix, weights};
  n.value = Tensor({H.cols()});
  for (int64_t r = 0; r < H.rows(); ++r) {
    const double wr = w.at(r);
    if (wr == 0.0) continue;
    for (int64_t c = 0; c < H.cols(); ++c) n.value.at(c) += wr * H.at(r, c);
  }
  return push(std::move(n));
}

GradientMap Graph::backward(NodeId loss) const {
  const Tensor& lv = value(loss);
  if (!lv.is_scalar())
    throw ContractError("backward: loss must be a scalar node, got shape " + lv.shape_str());

  std::vector<Tensor> grad(nodes_.size());
  std::vector<char> live(nodes_.size(), 0);
  auto touch = [&](NodeId id) -> Tensor& {
    if (!live[static_cast<size_t>(id)]) {
      grad[static_cast<size_t>(id)] = Tensor::zeros(node(id).value.shape);
      live[static_cast<size_t>(id)] = 1;
    }
    return grad[static_cast<size_t>(id)];
  };
  touch(loss).data[0] = 1.0;

  for (NodeId id = loss; id >= 0; --id) {
    if (!live[static_cast<size_t>(id)]) continue;
    const Node& n = node(id);
    const Tensor& g = grad[static_cast<size_t>(id)];
    switch (n.op) {
      case Op::kInput:
      case Op::kParam:
        break;
      case Op::kMatMul: {
        const Tensor& A = value(n.inputs[0]);
        const Tensor& B = value(n.inputs[1]);
        Tensor& ga = touch(n.inputs[0]);
        Tensor& gb = touch(n.inputs[1]);
        const int64_t m = A.rows(), k = A.cols();
        const int64_t c = B.rank() == 2 ? B.cols() : 1;
        // dA += g * B^T
        for (int64_t r = 0; r < m; ++r)
          for (int64_t j = 0; j < k; ++j) {
            double acc = 0.0;
            for (int64_t q = 0; q < c; ++q)
              acc += g.data[static_cast<size_t>(r * c + q)] * B.data[static_cast<size_t>(j * c + q)];
            ga.data[static_cast<size_t>(r * k + j)] += acc;
          }
        // dB += A^T * g
        accum_atg(A, g, gb);
        break;
      }
      case Op::kMatMulNT: {
        const Tensor& A = value(n.inputs[0]);
        const Tensor& B = value(n.inputs[1]);
        Tensor& ga = touch(n.inputs[0]);
        Tensor& gb = touch(n.inputs[1]);
        const int64_t m = A.rows(), k = A.cols(), p = B.rows();
        for (int64_t r = 0; r < m; ++r)
          for (int64_t q = 0; q < p; ++q) {
            const double grq = g.at(r, q);
            if (grq == 0.0) continue;
            for (int64_t j = 0; j < k; ++j) {
              ga.at(r, j) += grq * B.at(q, j);
              gb.at(q, j) += grq * A.at(r, j);
            }
          }
        break;
      }
      case Op::kAdd: {
        const Tensor& A = value(n.inputs[0]);
        const Tensor& B = value(n.inputs[1]);
        Tensor& ga = touch(n.inputs[0]);
        Tensor& gb = touch(n.inputs[1]);
        for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
        if (A.same_shape(B)) {
          for (size_t i = 0; i < g.data.size(); ++i) gb.data[i] += g.data[i];
        } else {
          for (int64_t r = 0; r < A.rows(); ++r)
            for (int64_t c = 0; c < A.cols(); ++c) gb.at(c) += g.at(r, c);
        }
        break;
      }
      case Op::kSub: {
        Tensor& ga = touch(n.inputs[0]);
        Tensor& gb = touch(n.inputs[1]);
        for (size_t i = 0; i < g.data.size(); ++i) {
          ga.data[i] += g.data[i];
          gb.data[i] -= g.data[i];
        }
        break;
      }
      case Op::kMul: {
        const Tensor& A = value(n.inputs[0]);
        const Tensor& B = value(n.inputs[1]);
        Tensor& ga = touch(n.inputs[0]);
        Tensor& gb = touch(n.inputs[1]);
        for (size_t i = 0; i < g.data.size(); ++i) {
          ga.data[i] += g.data[i] * B.data[i];
          gb.data[i] += g.data[i] * A.data[i];
        }
        break;
      }
      case Op::kScale: {
        Tensor& ga = touch(n.inputs[0]);
        for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += n.c0 * g.data[i];
        break;
      }
      case Op::kAddScalar: {
        Tensor& ga = touch(n.inputs[0]);
        for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
        break;
      }
      case Op::kTanh: {
        Tensor& ga = touch(n.inputs[0]);
        for (size_t i = 0; i < g.data.size(); ++i)
          ga.data[i] += g.data[i] * (1.0 - n.value.data[i] * n.value.data[i]);
        break;
      }
      case Op::kSigmoid: {
        Tensor& ga = touch(n.inputs[0]);
        for (size_t i = 0; i < g.data.size(); ++i)
          ga.data[i] += g.data[i] * n.value.data[i] * (1.0 - n.value.data[i]);
        break;
      }
      case Op::kExp: {
        Tensor& ga = touch(n.inputs[0]);
        for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] * n.value.data[i];
        break;
      }
      case Op::kClamp: {
        const Tensor& A = value(n.inputs[0]);
        Tensor& ga = touch(n.inputs[0]);
        for (size_t i = 0; i < g.data.size(); ++i)
          if (A.data[i] >= n.c0 && A.data[i] <= n.c1) ga.data[i] += g.data[i];
        break;
      }
      case Op::kSoftmax: {
        Tensor& ga = touch(n.inputs[0]);
        const int64_t cols = n.value.rank() == 2 ? n.value.cols() : n.value.numel();
        const int64_t rows = n.value.numel() / cols;
        for (int64_t r = 0; r < rows; ++r) {
          const double* y = n.value.data.data() + r * cols;
          const double* gr = g.data.data() + r * cols;
          double dot = 0.0;
          for (int64_t c = 0; c < cols; ++c) dot += gr[c] * y[c];
          double* out = ga.data.data() + r * cols;
          for (int64_t c = 0; c < cols; ++c) out[c] += y[c] * (gr[c] - dot);
        }
        break;
      }
      case Op::kLogSoftmax: {
        Tensor& ga = touch(n.inputs[0]);
        const int64_t cols = n.value.rank() == 2 ? n.value.cols() : n.value.numel();
        const int64_t rows = n.value.numel() / cols;
        for (int64_t r = 0; r < rows; ++r) {
          const double* y = n.value.data.data() + r * cols;
          const double* gr = g.data.data() + r * cols;
          double gsum = 0.0;
          for (int64_t c = 0; c < cols; ++c) gsum += gr[c];
          double* out = ga.data.data() + r * cols;
          for (int64_t c = 0; c < cols; ++c) out[c] += gr[c] - std::exp(y[c]) * gsum;
        }
        break;
      }
      case Op::kConcat: {
        Tensor& ga = touch(n.inputs[0]);
        Tensor& gb = touch(n.inputs[1]);
        const size_t na = ga.data.size();
        for (size_t i = 0; i < na; ++i) ga.data[i] += g.data[i];
        for (size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += g.data[na + i];
        break;
      }
      case Op::kSlice: {
        Tensor& ga = touch(n.inputs[0]);
        for (int64_t i = n.i0; i < n.i1; ++i)
          ga.at(i) += g.data[static_cast<size_t>(i - n.i0)];
        break;
      }
      case Op::kMeanRows: {
        const Tensor& A = value(n.inputs[0]);
        Tensor& ga = touch(n.inputs[0]);
        const double inv = 1.0 / static_cast<double>(A.rows());
        for (int64_t r = 0; r < A.rows(); ++r)
          for (int64_t c = 0; c < A.cols(); ++c) ga.at(r, c) += inv * g.at(c);
        break;
      }
      case Op::kSumAll: {
        Tensor& ga = touch(n.inputs[0]);
        for (double& v : ga.data) v += g.data[0];
        break;
      }
      case Op::kPick: {
        Tensor& ga = touch(n.inputs[0]);
        ga.at(n.i0) += g.data[0];
        break;
      }
      case Op::kEmbedCol: {
        const Tensor& T = value(n.inputs[0]);
        Tensor& ga = touch(n.inputs[0]);
        for (int64_t r = 0; r < T.rows(); ++r) ga.at(r, n.i0) += g.at(r);
        break;
      }
      case Op::kStackRows: {
        const int64_t d = n.value.cols();
        for (size_t r = 0; r < n.inputs.size(); ++r) {
          Tensor& gr = touch(n.inputs[r]);
          for (int64_t c = 0; c < d; ++c)
            gr.at(c) += g.data[static_cast<size_t>(static_cast<int64_t>(r) * d + c)];
        }
        break;
      }
      case Op::kWeightedSumRows: {
        const Tensor& H = value(n.inputs[0]);
        const Tensor& w = value(n.inputs[1]);
        Tensor& gh = touch(n.inputs[0]);
        Tensor& gw = touch(n.inputs[1]);
        for (int64_t r = 0; r < H.rows(); ++r) {
          const double wr = w.at(r);
          double dot = 0.0;
          for (int64_t c = 0; c < H.cols(); ++c) {
            gh.at(r, c) += wr * g.at(c);
            dot += g.at(c) * H.at(r, c);
          }
          gw.at(r) += dot;
        }
        break;
      }
    }
  }

  GradientMap out;
  for (const auto& [name, id] : param_ids_)
    if (live[static_cast<size_t>(id)]) out.grads.emplace(name, std::move(grad[static_cast<size_t>(id)]));
  return out;
}

}  // namespace mvnmt
