#include "gridcascade/cascade.hpp"

#include "gridcascade/errors.hpp"

namespace gridcascade {

std::vector<std::string> TripParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be positive");
  std::vector<std::string> warnings;
  const double half_width = std::numbers::pi / (2.0 * sigma);
  for (Eigen::Index i = 0; i < capacities.size(); ++i) {
    if (!(capacities(i) > 0.0)) throw std::invalid_argument("capacity of branch " + std::to_string(i + 1) + " must be positive");
    if (capacities(i) * capacities(i) < half_width)
      warnings.push_back("branch " + std::to_string(i + 1) + ": capacity^2 below pi/(2 sigma); no lower band edge");
  }
  return warnings;
}

CascadeParams default_params(const Grid& grid) {
  CascadeParams p;
  p.trip.capacities = grid.capacities();
  return p;
}

std::string_view to_string(Termination t) { return t == Termination::fixpoint ? "fixpoint" : "max_steps"; }

std::vector<int> CascadeTrace::connected_branches() const {
  std::vector<int> ids;
  for (Eigen::Index i = 0; i < final_state.size(); ++i)
    if (final_state(i) > connectivity_tol) ids.push_back(static_cast<int>(i) + 1);
  return ids;
}

bool CascadeTrace::all_converged() const {
  for (const CascadeStep& s : steps)
    if (!s.flows.converged) return false;
  return true;
}

Eigen::VectorXd trip_factors(const Eigen::Ref<const Eigen::VectorXd>& flows, const TripParams& trip) {
  if (flows.size() != trip.capacities.size())
    throw DimensionError("flow vector length " + std::to_string(flows.size()) + " does not match " +
                         std::to_string(trip.capacities.size()) + " capacities");
  Eigen::VectorXd g(flows.size());
  for (Eigen::Index i = 0; i < flows.size(); ++i) g(i) = trip_factor(flows(i), trip.capacities(i), trip.sigma);
  return g;
}

BranchState step_with_flows(const Grid& grid, const Eigen::Ref<const BranchState>& x, Model model,
                            const TripParams& trip, const FlowOptions& flow, FlowSolution& flows_out) {
  flows_out = compute_flows(grid, x, model, flow);
  return trip_factors(flows_out.p_e, trip).cwiseProduct(x);
}

BranchState step(const Grid& grid, const Eigen::Ref<const BranchState>& x, const Eigen::Ref<const Eigen::VectorXd>& u,
                 Model model, const TripParams& trip, const FlowOptions& flow) {
  if (u.size() != x.size()) throw DimensionError("control vector length does not match state length");
  FlowSolution flows;
  return step_with_flows(grid, x, model, trip, flow, flows) + u;
}

CascadeTrace run(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& u0, Model model,
                 const CascadeParams& params) {
  if (params.m < 1) throw std::invalid_argument("cascade horizon m must be >= 1");
  if (u0.size() != grid.branch_count())
    throw DimensionError("disturbance has length " + std::to_string(u0.size()) + ", expected " +
                         std::to_string(grid.branch_count()));
  if (params.trip.capacities.size() != grid.branch_count())
    throw DimensionError("capacity vector has length " + std::to_string(params.trip.capacities.size()) +
                         ", expected " + std::to_string(grid.branch_count()));
  params.trip.validate();

  CascadeTrace trace;
  trace.model = model;
  trace.case_name = grid.name();
  trace.grid_fingerprint = grid.fingerprint();
  trace.disturbance = u0;
  trace.sigma = params.trip.sigma;
  trace.epsilon = params.epsilon;
  trace.m = params.m;
  trace.connectivity_tol = params.flow.connectivity_tol;
  trace.capacities = params.trip.capacities;

  const double tol = params.flow.connectivity_tol;
  BranchState x = initial_state(grid, model);
  for (int k = 0; k < params.m; ++k) {
    CascadeStep rec;
    rec.k = k;
    rec.state = x;
    BranchState next;
    try {
      next = step_with_flows(grid, x, model, params.trip, params.flow, rec.flows);
    } catch (const std::exception& e) {
      trace.final_state = x;
      throw CascadeFailure("cascade step " + std::to_string(k + 1) + " failed: " + e.what(), std::move(trace));
    }
    if (k > 0) {
      const BranchState& prev = trace.steps.back().state;
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (prev(i) > tol && !(x(i) > tol)) rec.tripped.push_back(static_cast<int>(i) + 1);
    }
    if (k == 0) next += u0;

    bool settled = (next - x).lpNorm<Eigen::Infinity>() < params.fixpoint_tol;
    for (Eigen::Index i = 0; settled && i < x.size(); ++i)
      if (in_transition_band(rec.flows.p_e(i), params.trip.capacities(i), params.trip.sigma)) settled = false;

    trace.steps.push_back(std::move(rec));
    if (settled) {
      trace.termination = Termination::fixpoint;
      trace.final_state = next;
      return trace;
    }
    x = std::move(next);
  }
  trace.termination = Termination::max_steps;
  trace.final_state = x;
  return trace;
}

Eigen::VectorXd make_disturbance(const Grid& grid, const std::vector<std::pair<int, double>>& entries) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(grid.branch_count());
  for (const auto& [id, value] : entries) u(grid.branch_index(id)) += value;
  return u;
}

}  // namespace gridcascade
