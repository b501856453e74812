#include "gridcascade/disturbance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gridcascade/errors.hpp"
#include "log.hpp"

namespace gridcascade {

void OptProblem::validate() const {
  if (grid == nullptr) throw std::invalid_argument("problem has no grid");
  if (model == Model::ACM) throw std::invalid_argument("disturbance identification does not apply to the ACM");
  if (targets.empty()) throw std::invalid_argument("at least one target branch is required");
  for (int id : targets) grid->branch_index(id);
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (m < 2) throw std::invalid_argument("horizon m must be >= 2 for identification");
}

Eigen::VectorXd OptProblem::embed(const Eigen::Ref<const Eigen::VectorXd>& u_targets) const {
  if (u_targets.size() != static_cast<Eigen::Index>(targets.size()))
    throw DimensionError("expected " + std::to_string(targets.size()) + " target values, got " +
                         std::to_string(u_targets.size()));
  Eigen::VectorXd u = Eigen::VectorXd::Zero(grid->branch_count());
  for (std::size_t t = 0; t < targets.size(); ++t) u(grid->branch_index(targets[t])) = u_targets(static_cast<Eigen::Index>(t));
  return u;
}

CascadeParams OptProblem::cascade_params() const {
  CascadeParams p;
  p.trip = trip;
  p.m = m;
  p.epsilon = epsilon;
  p.flow = flow;
  return p;
}

OptProblem make_problem(const Grid& grid, Model model, std::vector<int> targets) {
  OptProblem prob;
  prob.grid = &grid;
  prob.model = model;
  prob.targets = std::move(targets);
  prob.epsilon = model == Model::CNM ? 6e-8 : 1e-4;
  prob.trip.capacities = grid.capacities();
  return prob;
}

Eigen::MatrixXd cascade_jacobian(const Grid& grid, const Eigen::Ref<const BranchState>& x, Model model,
                                 const TripParams& trip, double h, const FlowOptions& flow) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  const Eigen::Index n = x.size();
  Eigen::MatrixXd jac(n, n);
  BranchState probe = x;
  FlowSolution scratch;
  for (Eigen::Index j = 0; j < n; ++j) {
    double hj = h * std::max(1.0, std::abs(x(j)));
    if (std::abs(x(j)) <= flow.connectivity_tol) hj = std::min(hj, flow.connectivity_tol / 4.0);
    probe(j) = x(j) + hj;
    const BranchState plus = step_with_flows(grid, probe, model, trip, flow, scratch);
    probe(j) = x(j) - hj;
    const BranchState minus = step_with_flows(grid, probe, model, trip, flow, scratch);
    probe(j) = x(j);
    jac.col(j) = (plus - minus) / (2.0 * hj);
  }
  return jac;
}

Eigen::VectorXd stationarity_residual(const OptProblem& prob, const Eigen::Ref<const Eigen::VectorXd>& u_targets,
                                      double h) {
  if (!u_targets.allFinite()) throw std::invalid_argument("disturbance guess must be finite");
  const Eigen::VectorXd u0 = prob.embed(u_targets);

  // Full-horizon simulation: the fixpoint shortcut is disabled so the trace holds X⁰..X^{m−1} and X^m.
  CascadeParams params = prob.cascade_params();
  params.fixpoint_tol = -1.0;
  const CascadeTrace trace = run(*prob.grid, u0, prob.model, params);

  Eigen::VectorXd lambda = trace.final_state;
  const BranchState* cached_state = nullptr;
  Eigen::MatrixXd cached_jac;
  for (int k = prob.m - 1; k >= 1; --k) {
    const BranchState& xk = trace.steps[static_cast<std::size_t>(k)].state;
    if (cached_state == nullptr || *cached_state != xk) {
      cached_jac = cascade_jacobian(*prob.grid, xk, prob.model, prob.trip, h, prob.flow);
      cached_state = &xk;
    }
    lambda = cached_jac.transpose() * lambda;
  }

  Eigen::VectorXd r(static_cast<Eigen::Index>(prob.targets.size()));
  for (std::size_t t = 0; t < prob.targets.size(); ++t) {
    const Eigen::Index i = prob.grid->branch_index(prob.targets[t]);
    r(static_cast<Eigen::Index>(t)) = u0(i) + lambda(i) / prob.epsilon;
  }
  return r;
}

double disturbance_cost(const CascadeTrace& trace, double epsilon) {
  return trace.final_state.squaredNorm() + epsilon * trace.disturbance.squaredNorm();
}

namespace {

struct Attempt {
  Eigen::VectorXd u;
  double norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
};

Attempt newton(const OptProblem& prob, Eigen::VectorXd u, const IdentifyOptions& opts) {
  Attempt out;
  const auto t = u.size();
  Eigen::VectorXd r = stationarity_residual(prob, u, opts.fd_step);
  out.u = u;
  out.norm = r.lpNorm<Eigen::Infinity>();
  out.history.push_back(out.norm);

  while (out.iterations < opts.max_iter) {
    if (out.norm < opts.root_tol) {
      out.converged = true;
      return out;
    }
    Eigen::MatrixXd jr(t, t);
    for (Eigen::Index j = 0; j < t; ++j) {
      const double hj = opts.fd_step * std::max(1.0, std::abs(u(j)));
      Eigen::VectorXd probe = u;
      probe(j) += hj;
      const Eigen::VectorXd rp = stationarity_residual(prob, probe, opts.fd_step);
      probe(j) = u(j) - hj;
      const Eigen::VectorXd rm = stationarity_residual(prob, probe, opts.fd_step);
      jr.col(j) = (rp - rm) / (2.0 * hj);
    }
    if (!jr.allFinite() || jr.norm() == 0.0) {
      log::debug("identify: flat residual at iteration {}", out.iterations);
      return out;
    }
    const Eigen::VectorXd d = jr.completeOrthogonalDecomposition().solve(-r);

    const double phi = 0.5 * r.squaredNorm();
    double alpha = 1.0;
    bool accepted = false;
    for (int b = 0; b <= opts.max_backtracks; ++b, alpha *= 0.5) {
      const Eigen::VectorXd trial = u + alpha * d;
      Eigen::VectorXd rt;
      try {
        rt = stationarity_residual(prob, trial, opts.fd_step);
      } catch (const CascadeFailure&) {
        continue;
      }
      if (0.5 * rt.squaredNorm() <= (1.0 - 2.0 * opts.armijo * alpha) * phi) {
        u = trial;
        r = rt;
        accepted = true;
        break;
      }
    }
    ++out.iterations;
    if (!accepted) {
      log::debug("identify: line search stalled at iteration {}", out.iterations);
      return out;
    }
    out.u = u;
    out.norm = r.lpNorm<Eigen::Infinity>();
    out.history.push_back(out.norm);
    log::trace("identify: iteration {} |r| = {:.3e} u = {}", out.iterations, out.norm, u(0));
  }
  out.converged = out.norm < opts.root_tol;
  return out;
}

DisturbanceSolution finish(const OptProblem& prob, const Attempt& a, int start) {
  DisturbanceSolution sol;
  sol.u0 = prob.embed(a.u);
  sol.residual_norm = a.norm;
  sol.iterations = a.iterations;
  sol.start = start;
  sol.converged = a.converged;
  sol.residual_history = a.history;
  sol.positive_increment = (a.u.array() > 0.0).any();
  sol.trace = run(*prob.grid, sol.u0, prob.model, prob.cascade_params());
  sol.cost = disturbance_cost(sol.trace, prob.epsilon);
  return sol;
}

}  // namespace

DisturbanceSolution identify(const OptProblem& prob, const Eigen::Ref<const Eigen::VectorXd>& guess,
                             const IdentifyOptions& opts) {
  prob.validate();
  if (guess.size() != static_cast<Eigen::Index>(prob.targets.size()))
    throw DimensionError("guess has " + std::to_string(guess.size()) + " entries for " +
                         std::to_string(prob.targets.size()) + " targets");
  if (!guess.allFinite()) throw std::invalid_argument("disturbance guess must be finite");

  std::vector<Eigen::VectorXd> starts{guess};
  if (opts.multistart) {
    const BranchState x0 = initial_state(*prob.grid, prob.model);
    Eigen::VectorXd x0_t(guess.size());
    for (std::size_t t = 0; t < prob.targets.size(); ++t)
      x0_t(static_cast<Eigen::Index>(t)) = x0(prob.grid->branch_index(prob.targets[t]));
    for (const Eigen::VectorXd& s :
         {Eigen::VectorXd(Eigen::VectorXd::Zero(guess.size())), Eigen::VectorXd(-0.5 * x0_t), Eigen::VectorXd(-1.5 * x0_t)}) {
      if (std::none_of(starts.begin(), starts.end(), [&](const Eigen::VectorXd& o) { return o == s; }))
        starts.push_back(s);
    }
  }

  Attempt best;
  int best_start = 0;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    log::debug("identify: start {} at u = {}", i, starts[i](0));
    Attempt a = newton(prob, starts[i], opts);
    if (a.converged) return finish(prob, a, static_cast<int>(i));
    if (a.norm < best.norm) {
      best = std::move(a);
      best_start = static_cast<int>(i);
    }
  }
  DisturbanceSolution partial = finish(prob, best, best_start);
  throw IdentifyFailure("no stationary disturbance found; best residual " + std::to_string(best.norm),
                        std::move(partial));
}

}  // namespace gridcascade
