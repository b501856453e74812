#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridcascade/grid.hpp"
#include "gridcascade/powerflow.hpp"

namespace gridcascade {

/// Smooth breaker surrogate: 1 well below capacity, 0 well above, and a sine ramp in between
/// whose half-width in p² is pi/(2 sigma). Steeper as sigma grows.
template <typename Scalar>
Scalar trip_factor(Scalar p, Scalar c, Scalar sigma) {
  using std::sin;
  const Scalar half_width = std::numbers::pi_v<Scalar> / (Scalar(2) * sigma);
  const Scalar excess = p * p - c * c;
  if (excess >= half_width) return Scalar(0);
  if (excess <= -half_width) return Scalar(1);
  return (Scalar(1) - sin(sigma * excess)) / Scalar(2);
}

/// True when |p| lies strictly inside the transition band of trip_factor.
template <typename Scalar>
bool in_transition_band(Scalar p, Scalar c, Scalar sigma) {
  const Scalar half_width = std::numbers::pi_v<Scalar> / (Scalar(2) * sigma);
  const Scalar excess = p * p - c * c;
  return excess > -half_width && excess < half_width;
}

struct TripParams {
  double sigma = 5e4;
  Eigen::VectorXd capacities;

  /// Throws std::invalid_argument on sigma <= 0 or non-positive capacities. Returns warnings for
  /// capacities too small to have a well-defined lower band edge (c² < pi/(2 sigma)).
  std::vector<std::string> validate() const;
};

struct CascadeParams {
  TripParams trip;
  int m = 9;
  double epsilon = 1e-4;  // recorded with the trace; used by the disturbance cost
  double fixpoint_tol = 1e-9;
  FlowOptions flow;
};

/// Defaults for a grid: sigma = 5e4, m = 9, capacities from the case.
CascadeParams default_params(const Grid& grid);

enum class Termination { fixpoint, max_steps };
std::string_view to_string(Termination t);

struct CascadeStep {
  int k = 0;  // recursion index; the displayed step label is k + 1
  BranchState state;
  FlowSolution flows;
  std::vector<int> tripped;  // branch ids whose state fell to or below the connectivity tolerance at this step
  int label() const { return k + 1; }
};

struct CascadeTrace {
  Model model = Model::DCM;
  std::string case_name;
  std::string grid_fingerprint;
  BranchState disturbance;  // U⁰
  std::vector<CascadeStep> steps;
  BranchState final_state;  // X^m, or the fixpoint state
  Termination termination = Termination::max_steps;
  double sigma = 0.0;
  double epsilon = 0.0;
  int m = 0;
  double connectivity_tol = kDefaultConnectivityTol;
  Eigen::VectorXd capacities;

  const CascadeStep& terminal() const { return steps.back(); }
  /// Branch ids whose final state is above the connectivity tolerance.
  std::vector<int> connected_branches() const;
  bool all_converged() const;
};

/// Flow solver failure in the middle of a run; carries the steps completed so far.
class CascadeFailure : public std::runtime_error {
 public:
  CascadeFailure(const std::string& what, CascadeTrace partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const CascadeTrace& partial_trace() const { return partial_; }

 private:
  CascadeTrace partial_;
};

/// Elementwise trip factors g(P_e, c).
Eigen::VectorXd trip_factors(const Eigen::Ref<const Eigen::VectorXd>& flows, const TripParams& trip);

/// One recursion step X' = diag(g(P_e(x))) x + u.
BranchState step(const Grid& grid, const Eigen::Ref<const BranchState>& x, const Eigen::Ref<const Eigen::VectorXd>& u,
                 Model model, const TripParams& trip, const FlowOptions& flow = {});

/// Same map as `step` with u = 0, also returning the flows that produced it.
BranchState step_with_flows(const Grid& grid, const Eigen::Ref<const BranchState>& x, Model model,
                            const TripParams& trip, const FlowOptions& flow, FlowSolution& flows_out);

/// Runs the cascade from X⁰ with disturbance u0 applied at k = 0 and zero input afterwards, until a
/// fixpoint (max-norm change below fixpoint_tol with no flow inside a transition band) or m steps.
CascadeTrace run(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& u0, Model model,
                 const CascadeParams& params);

/// Disturbance vector with the given (branch id, value) entries and zeros elsewhere.
Eigen::VectorXd make_disturbance(const Grid& grid, const std::vector<std::pair<int, double>>& entries);

}  // namespace gridcascade
