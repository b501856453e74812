#include "gridcascade/compare.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include "gridcascade/errors.hpp"
#include "gridcascade/linalg.hpp"

namespace gridcascade {

const PairComparison& ComparisonReport::pair(std::string_view a, std::string_view b) const {
  for (const PairComparison& p : pairs)
    if ((p.a == a && p.b == b) || (p.a == b && p.b == a)) return p;
  throw std::out_of_range("no comparison between " + std::string(a) + " and " + std::string(b));
}

int ComparisonReport::peak_step() const {
  int best = 1;
  double top = -1.0;
  for (int s = 0; s < steps; ++s)
    for (const PairComparison& p : pairs)
      if (p.rmse[static_cast<std::size_t>(s)] > top) {
        top = p.rmse[static_cast<std::size_t>(s)];
        best = s + 1;
      }
  return best;
}

int flow_sign(double p) {
  if (std::abs(p) < kSignZeroTol) return 0;
  return p > 0.0 ? 1 : -1;
}

const Eigen::VectorXd& aligned_flows(const CascadeTrace& trace, int step) {
  if (trace.steps.empty()) throw std::invalid_argument("trace has no steps");
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(step), trace.steps.size() - 1);
  return trace.steps[idx].flows.p_e;
}

ComparisonReport compare_traces(const std::vector<CascadeTrace>& traces) {
  if (traces.size() < 2) throw std::invalid_argument("comparison needs at least two traces");
  for (const CascadeTrace& t : traces) {
    if (t.steps.empty()) throw ValidationError("trace for " + std::string(to_string(t.model)) + " has no steps");
    if (t.grid_fingerprint != traces.front().grid_fingerprint ||
        t.terminal().flows.p_e.size() != traces.front().terminal().flows.p_e.size())
      throw ValidationError("traces come from different grids ('" + traces.front().case_name + "' vs '" +
                            t.case_name + "')");
  }

  std::vector<std::size_t> order(traces.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return traces[x].model < traces[y].model; });

  ComparisonReport report;
  std::map<Model, int> seen;
  for (std::size_t i : order) {
    const int n = ++seen[traces[i].model];
    std::string label(to_string(traces[i].model));
    if (n > 1) label += "#" + std::to_string(n);
    report.labels.push_back(label);
  }
  report.branches = static_cast<int>(traces.front().terminal().flows.p_e.size());
  for (const CascadeTrace& t : traces) report.steps = std::max(report.steps, static_cast<int>(t.steps.size()));

  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const CascadeTrace& ta = traces[order[i]];
      const CascadeTrace& tb = traces[order[j]];
      PairComparison pc{report.labels[i], report.labels[j], {}, {}};
      for (int s = 0; s < report.steps; ++s) {
        const Eigen::VectorXd& fa = aligned_flows(ta, s);
        const Eigen::VectorXd& fb = aligned_flows(tb, s);
        pc.rmse.push_back(rmse(fa, fb));
        int agree = 0;
        for (Eigen::Index k = 0; k < fa.size(); ++k) agree += flow_sign(fa(k)) == flow_sign(fb(k)) ? 1 : 0;
        pc.sign_agreement.push_back(agree);
      }
      report.pairs.push_back(std::move(pc));
    }
  }

  for (std::size_t i = 0; i < order.size(); ++i) {
    for (const CascadeStep& s : traces[order[i]].steps) {
      if (s.flows.converged) continue;
      std::ostringstream note;
      note << report.labels[i] << " step " << s.label() << ": flow solver did not converge (mismatch "
           << s.flows.mismatch << "); last-iterate flows included";
      report.notes.push_back(note.str());
    }
  }
  return report;
}

}  // namespace gridcascade
