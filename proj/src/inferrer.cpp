#include "mvnmt/inferrer.hpp"

#include <algorithm>
#include <cmath>

namespace mvnmt {

GaussianDiag GaussianDiag::clamped(Tensor mu, Tensor log_var) {
  if (!mu.same_shape(log_var))
    throw ShapeError("GaussianDiag: mu " + mu.shape_str() + " and log_var " +
                     log_var.shape_str() + " do not conform");
  for (double& v : log_var.data) v = std::min(kLogVarClamp, std::max(-kLogVarClamp, v));
  return GaussianDiag{std::move(mu), std::move(log_var)};
}

double GaussianDiag::sigma(int64_t k) const { return std::exp(0.5 * log_var.at(k)); }

double GaussianDiag::log_density(const Tensor& z) const {
  constexpr double kLog2Pi = 1.8378770664093454835606594728112;
  double acc = 0.0;
  for (int64_t k = 0; k < dim(); ++k) {
    const double diff = z.at(k) - mu.at(k);
    acc += -0.5 * (kLog2Pi + log_var.at(k) + diff * diff / std::exp(log_var.at(k)));
  }
  return acc;
}

double kl_divergence(const GaussianDiag& q, const GaussianDiag& p) {
  if (q.dim() != p.dim())
    throw ShapeError("kl_divergence: dimensions " + q.mu.shape_str() + " and " +
                     p.mu.shape_str() + " do not conform");
  double acc = 0.0;
  for (int64_t k = 0; k < q.dim(); ++k) {
    const double var_q = std::exp(q.log_var.at(k));
    const double var_p = std::exp(p.log_var.at(k));
    const double diff = q.mu.at(k) - p.mu.at(k);
    acc += 0.5 * (p.log_var.at(k) - q.log_var.at(k)) + (var_q + diff * diff) / (2.0 * var_p) - 0.5;
  }
  return acc;
}

Tensor reparameterize(const GaussianDiag& g, const Tensor& epsilon) {
  if (!epsilon.same_shape(g.mu))
    throw ShapeError("reparameterize: epsilon " + epsilon.shape_str() + " and mu " +
                     g.mu.shape_str() + " do not conform");
  Tensor z = g.mu;
  for (int64_t k = 0; k < z.numel(); ++k) z.at(k) += g.sigma(k) * epsilon.at(k);
  return z;
}

LatentSample reparameterize_sample(const GaussianDiag& g, Tensor epsilon) {
  Tensor z = reparameterize(g, epsilon);
  return LatentSample{std::move(z), std::move(epsilon)};
}

LatentSample latent_for_translation(const GaussianDiag& prior) {
  return LatentSample{prior.mu, Tensor::zeros(prior.mu.shape)};
}

void register_gaussian_head(ParamSet& ps, const std::string& prefix, int64_t input_dim,
                            int64_t d_z) {
  ps.add(prefix + ".W1", {d_z, input_dim}, false);
  ps.add(prefix + ".b1", {d_z}, true);
  ps.add(prefix + ".W_mu", {d_z, d_z}, false);
  ps.add(prefix + ".b_mu", {d_z}, true);
  ps.add(prefix + ".W_sig", {d_z, d_z}, false);
  ps.add(prefix + ".b_sig", {d_z}, true);
}

GaussianNodes gaussian_head(Graph& g, const ParamSet& ps, const std::string& prefix,
                            NodeId input) {
  NodeId W1 = g.param(prefix + ".W1", ps.at(prefix + ".W1"));
  NodeId b1 = g.param(prefix + ".b1", ps.at(prefix + ".b1"));
  NodeId h_z = g.tanh(g.add(g.matmul(W1, input), b1));
  NodeId W_mu = g.param(prefix + ".W_mu", ps.at(prefix + ".W_mu"));
  NodeId b_mu = g.param(prefix + ".b_mu", ps.at(prefix + ".b_mu"));
  NodeId W_sig = g.param(prefix + ".W_sig", ps.at(prefix + ".W_sig"));
  NodeId b_sig = g.param(prefix + ".b_sig", ps.at(prefix + ".b_sig"));
  GaussianNodes n;
  n.mu = g.add(g.matmul(W_mu, h_z), b_mu);
  n.log_var = g.clamp(g.add(g.matmul(W_sig, h_z), b_sig), -kLogVarClamp, kLogVarClamp);
  return n;
}

NodeId kl_node(Graph& g, const GaussianNodes& q, const GaussianNodes& p) {
  NodeId half_log_ratio = g.scale(g.sub(p.log_var, q.log_var), 0.5);
  NodeId var_q = g.exp(q.log_var);
  NodeId inv_var_p = g.exp(g.scale(p.log_var, -1.0));
  NodeId diff = g.sub(q.mu, p.mu);
  NodeId quad = g.add(var_q, g.mul(diff, diff));
  NodeId ratio = g.scale(g.mul(quad, inv_var_p), 0.5);
  NodeId per_dim = g.add_scalar(g.add(half_log_ratio, ratio), -0.5);
  return g.sum_all(per_dim);
}

NodeId reparameterize_node(Graph& g, const GaussianNodes& q, NodeId epsilon) {
  NodeId sigma = g.exp(g.scale(q.log_var, 0.5));
  return g.add(q.mu, g.mul(sigma, epsilon));
}

void register_latent_projection(ParamSet& ps, int64_t d_z, int64_t d_e) {
  ps.add("lat.W2", {d_e, d_z}, false);
  ps.add("lat.b2", {d_e}, true);
}

NodeId latent_projection(Graph& g, const ParamSet& ps, NodeId h_z) {
  NodeId W2 = g.param("lat.W2", ps.at("lat.W2"));
  NodeId b2 = g.param("lat.b2", ps.at("lat.b2"));
  return g.tanh(g.add(g.matmul(W2, h_z), b2));
}

GaussianDiag gaussian_values(const Graph& g, const GaussianNodes& n) {
  return GaussianDiag{g.value(n.mu), g.value(n.log_var)};
}

}  // namespace mvnmt
