#pragma once

#include <string>

#include "mvnmt/graph.hpp"
#include "mvnmt/params.hpp"
#include "mvnmt/rng.hpp"

namespace mvnmt {

constexpr double kLogVarClamp = 8.0;

// Diagonal Gaussian over the latent space, parameterized by mean and
// log-variance. log_var is clamped to [-8, 8] on construction.
struct GaussianDiag {
  Tensor mu;
  Tensor log_var;

  static GaussianDiag clamped(Tensor mu, Tensor log_var);
  int64_t dim() const { return mu.numel(); }
  double sigma(int64_t k) const;
  double log_density(const Tensor& z) const;
};

// Analytic KL(q || p) for diagonal Gaussians:
// sum_k 1/2 (log s'^2 - log s^2) + (s^2 + (mu - mu')^2) / (2 s'^2) - 1/2.
double kl_divergence(const GaussianDiag& q, const GaussianDiag& p);

// z = mu + sigma (.) eps, elementwise.
Tensor reparameterize(const GaussianDiag& g, const Tensor& epsilon);

// Latent draw with the epsilon that produced it kept for reproducibility.
struct LatentSample {
  Tensor h_z;
  Tensor epsilon;
};

LatentSample reparameterize_sample(const GaussianDiag& g, Tensor epsilon);

// Translation-time latent: the prior mean exactly, epsilon recorded as zero.
LatentSample latent_for_translation(const GaussianDiag& prior);

// Graph-side Gaussian head: h_z = tanh(W1 x + b1); mu = W_mu h_z + b_mu;
// log sigma^2 = clamp(W_sig h_z + b_sig).
struct GaussianNodes {
  NodeId mu;
  NodeId log_var;
};

void register_gaussian_head(ParamSet& ps, const std::string& prefix, int64_t input_dim,
                            int64_t d_z);
GaussianNodes gaussian_head(Graph& g, const ParamSet& ps, const std::string& prefix,
                            NodeId input);

NodeId kl_node(Graph& g, const GaussianNodes& q, const GaussianNodes& p);

// h_z = mu + exp(log_var / 2) (.) eps; eps enters as a constant, so the
// gradient flows to mu and log_var only.
NodeId reparameterize_node(Graph& g, const GaussianNodes& q, NodeId epsilon);

// Eq-8-style projection onto the decoder space: h'_e = tanh(W2 h_z + b2).
void register_latent_projection(ParamSet& ps, int64_t d_z, int64_t d_e);
NodeId latent_projection(Graph& g, const ParamSet& ps, NodeId h_z);

GaussianDiag gaussian_values(const Graph& g, const GaussianNodes& n);

}  // namespace mvnmt
