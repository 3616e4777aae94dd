#include "mvnmt/grad_check.hpp"

#include <cmath>
#include <sstream>

namespace mvnmt {

const GradCheckEntry* GradCheckReport::worst() const {
  const GradCheckEntry* w = nullptr;
  for (const auto& e : entries)
    if (!w || e.max_rel_err > w->max_rel_err) w = &e;
  return w;
}

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  os << (all_ok ? "PASS" : "FAIL") << " worst_rel_err=" << worst_rel_err;
  if (const GradCheckEntry* w = worst(); w && w->worst_index >= 0)
    os << " (" << w->param << "[" << w->worst_index << "] analytic=" << w->analytic
       << " numeric=" << w->numeric << ")";
  return os.str();
}

GradCheckReport check_gradient(ParamSet& params, const LossBuilder& build, double step,
                               double rel_tol, double abs_tol) {
  if (step <= 0.0) throw ContractError("check_gradient: step must be positive");

  GradientMap analytic;
  {
    Graph g;
    NodeId loss = build(g, params);
    analytic = g.backward(loss);
  }
  auto eval = [&]() {
    Graph g;
    return g.scalar_value(build(g, params));
  };

  GradCheckReport report;
  for (auto& entry : params.entries()) {
    GradCheckEntry e;
    e.param = entry.name;
    e.ok = true;
    const bool reachable = analytic.has(entry.name);
    for (int64_t i = 0; i < entry.value.numel(); ++i) {
      const double saved = entry.value.at(i);
      entry.value.at(i) = saved + step;
      const double up = eval();
      entry.value.at(i) = saved - step;
      const double down = eval();
      entry.value.at(i) = saved;

      const double numeric = (up - down) / (2.0 * step);
      const double exact = reachable ? analytic.at(entry.name).at(i) : 0.0;
      const double abs_err = std::abs(exact - numeric);
      const double denom = std::max(std::abs(exact), std::abs(numeric));
      const double rel_err = denom > 0.0 ? abs_err / denom : 0.0;

      const bool element_ok =
          std::abs(exact) < 1e-6 ? abs_err <= abs_tol : rel_err <= rel_tol;
      if (!element_ok) e.ok = false;
      e.max_abs_err = std::max(e.max_abs_err, abs_err);
      const double scored = std::abs(exact) < 1e-6 ? (abs_err <= abs_tol ? 0.0 : rel_err) : rel_err;
      if (scored >= e.max_rel_err) {
        e.max_rel_err = scored;
        e.worst_index = i;
        e.analytic = exact;
        e.numeric = numeric;
      }
    }
    report.worst_rel_err = std::max(report.worst_rel_err, e.max_rel_err);
    if (!e.ok) report.all_ok = false;
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace mvnmt
