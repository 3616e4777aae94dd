#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mvnmt/graph.hpp"
#include "mvnmt/params.hpp"

namespace mvnmt {

// Finite-difference gradient oracle. A LossBuilder constructs the full loss
// graph from the current parameter values; it must be deterministic (any
// random draws fixed by the caller) so that central differences see a pure
// function of the parameters.
using LossBuilder = std::function<NodeId(Graph&, const ParamSet&)>;

struct GradCheckEntry {
  std::string param;
  double max_rel_err = 0.0;   // worst relative error over elements
  double max_abs_err = 0.0;   // worst absolute error over elements
  int64_t worst_index = -1;   // element index of the worst relative offender
  double analytic = 0.0;      // analytic gradient at that element
  double numeric = 0.0;       // central-difference gradient at that element
  bool ok = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double worst_rel_err = 0.0;
  bool all_ok = true;

  const GradCheckEntry* worst() const;
  std::string summary() const;
};

// Compares backward() against (L(p+step) - L(p-step)) / (2 step) for every
// element of every parameter. An element passes if the relative error is
// below rel_tol, or, when the analytic gradient is smaller than 1e-6 in
// magnitude, if the absolute error is below abs_tol.
GradCheckReport check_gradient(ParamSet& params, const LossBuilder& build, double step,
                               double rel_tol = 1e-4, double abs_tol = 1e-8);

}  // namespace mvnmt
