#include "gridcascade/powerflow.hpp"

#include <algorithm>
#include <cctype>

#include "gridcascade/errors.hpp"

namespace gridcascade {

std::string_view to_string(Model model) {
  switch (model) {
    case Model::CNM:
      return "CNM";
    case Model::DCM:
      return "DCM";
    case Model::ACM:
      return "ACM";
  }
  return "CNM";
}

Model parse_model(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "cnm") return Model::CNM;
  if (lower == "dcm") return Model::DCM;
  if (lower == "acm") return Model::ACM;
  throw std::invalid_argument("unknown model '" + std::string(text) + "' (expected cnm, dcm or acm)");
}

BranchState effective_state(const Eigen::Ref<const BranchState>& x, double tol) {
  return x.unaryExpr([tol](double v) { return v > tol ? v : 0.0; });
}

IslandDispatch dispatch_injections(const Grid& grid, const Eigen::Ref<const BranchState>& x, double tol) {
  IslandDispatch out;
  out.labels = component_labels(grid, x, tol);
  out.p = grid.injections();

  const int islands = out.labels.empty() ? 0 : *std::max_element(out.labels.begin(), out.labels.end()) + 1;
  out.reference.assign(static_cast<std::size_t>(islands), -1);
  std::vector<double> total(static_cast<std::size_t>(islands), 0.0);

  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    const Bus& bus = grid.buses()[i];
    const auto island = static_cast<std::size_t>(out.labels[i]);
    total[island] += bus.p;
    if (!bus.is_source()) continue;
    Eigen::Index& ref = out.reference[island];
    // Buses are in ascending id order, so a later generator has a higher id.
    if (ref < 0 || grid.buses()[static_cast<std::size_t>(ref)].kind != BusKind::slack)
      ref = static_cast<Eigen::Index>(i);
  }

  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    const auto island = static_cast<std::size_t>(out.labels[i]);
    if (out.reference[island] < 0) out.p(static_cast<Eigen::Index>(i)) = 0.0;
  }
  for (std::size_t island = 0; island < out.reference.size(); ++island) {
    if (out.reference[island] >= 0) out.p(out.reference[island]) -= total[island];
  }
  return out;
}

namespace {

void check_length(const Grid& grid, Eigen::Index n, std::string_view what) {
  if (n != grid.branch_count())
    throw DimensionError(std::string(what) + " has length " + std::to_string(n) + ", expected " +
                         std::to_string(grid.branch_count()));
}

}  // namespace

FlowSolution cnm_flow(const Grid& grid, const Eigen::Ref<const BranchState>& s, const FlowOptions& opts) {
  check_length(grid, s.size(), "connection state");
  const BranchState level = effective_state(s, opts.connectivity_tol);
  const IslandDispatch dispatch = dispatch_injections(grid, level, opts.connectivity_tol);

  const Eigen::MatrixXd operator_t = incidence(grid).transpose() * level.asDiagonal();
  FlowSolution sol;
  sol.p_e = pinv(operator_t, opts.rank_tol) * dispatch.p;
  if (!sol.p_e.allFinite()) throw NumericError("cnm_flow: non-finite branch flows");
  return sol;
}

FlowSolution dcm_flow(const Grid& grid, const Eigen::Ref<const BranchState>& y, const FlowOptions& opts) {
  check_length(grid, y.size(), "admittance state");
  const BranchState adm = effective_state(y, opts.connectivity_tol);
  const IslandDispatch dispatch = dispatch_injections(grid, adm, opts.connectivity_tol);

  const Eigen::MatrixXd a = incidence(grid);
  const Eigen::MatrixXd laplacian = a.transpose() * adm.asDiagonal() * a;
  FlowSolution sol;
  sol.theta = pinv(laplacian, opts.rank_tol) * dispatch.p;
  sol.p_e = adm.asDiagonal() * (a * *sol.theta);
  if (!sol.p_e.allFinite()) throw NumericError("dcm_flow: non-finite branch flows");
  return sol;
}

FlowSolution compute_flows(const Grid& grid, const Eigen::Ref<const BranchState>& x, Model model,
                           const FlowOptions& opts) {
  switch (model) {
    case Model::CNM:
      return cnm_flow(grid, x, opts);
    case Model::DCM:
      return dcm_flow(grid, x, opts);
    case Model::ACM:
      return acm_flow(grid, x, opts);
  }
  throw std::logic_error("unreachable model");
}

BranchState initial_state(const Grid& grid, Model model) {
  if (model == Model::CNM) return BranchState::Ones(grid.branch_count());
  return grid.nominal_admittance();
}

Eigen::MatrixXcd complex_bus_admittance(const Grid& grid, const Eigen::Ref<const BranchState>& y) {
  check_length(grid, y.size(), "admittance state");
  Eigen::MatrixXcd ybus = Eigen::MatrixXcd::Zero(grid.bus_count(), grid.bus_count());
  for (Eigen::Index k = 0; k < grid.branch_count(); ++k) {
    if (y(k) == 0.0) continue;
    const Branch& br = grid.branches()[static_cast<std::size_t>(k)];
    const std::complex<double> yk = (y(k) * br.x) * br.y_series();
    const Eigen::Index f = grid.bus_index(br.from);
    const Eigen::Index t = grid.bus_index(br.to);
    ybus(f, f) += yk;
    ybus(t, t) += yk;
    ybus(f, t) -= yk;
    ybus(t, f) -= yk;
  }
  return ybus;
}

}  // namespace gridcascade
