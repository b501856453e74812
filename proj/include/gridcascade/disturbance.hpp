#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridcascade/cascade.hpp"

namespace gridcascade {

struct OptProblem {
  const Grid* grid = nullptr;
  Model model = Model::DCM;
  std::vector<int> targets;  // branch ids allowed to carry a nonzero U⁰
  double epsilon = 1e-4;
  int m = 9;
  TripParams trip;
  FlowOptions flow;

  /// Throws std::invalid_argument for ACM, empty or unknown targets, epsilon <= 0 or m < 2.
  void validate() const;
  /// Full-length U⁰ with the target values embedded and zeros elsewhere.
  Eigen::VectorXd embed(const Eigen::Ref<const Eigen::VectorXd>& u_targets) const;
  CascadeParams cascade_params() const;
};

/// Builds a problem with the model's default epsilon (1e-4 for DCM, 6e-8 for CNM) and the grid's capacities.
OptProblem make_problem(const Grid& grid, Model model, std::vector<int> targets);

struct IdentifyOptions {
  double root_tol = 1e-6;
  int max_iter = 100;
  double fd_step = 1e-6;  // relative step for both the cascade and the residual Jacobians
  double armijo = 1e-4;
  int max_backtracks = 30;
  bool multistart = true;
};

struct DisturbanceSolution {
  Eigen::VectorXd u0;
  double residual_norm = 0.0;  // max norm over targets
  int iterations = 0;
  int start = 0;  // index of the multi-start point that produced this result
  CascadeTrace trace;
  double cost = 0.0;
  bool converged = false;
  bool positive_increment = false;  // some target received a state increase rather than a decrement
  std::vector<double> residual_history;
};

class IdentifyFailure : public std::runtime_error {
 public:
  IdentifyFailure(const std::string& what, DisturbanceSolution best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const DisturbanceSolution& best_iterate() const { return best_; }

 private:
  DisturbanceSolution best_;
};

/// Central-difference Jacobian of F(x) = G(P_e(x))·x. Column j uses the step h·max(1, |x_j|); for
/// entries inside the open-branch dead zone the step is shrunk so both probes stay in it.
Eigen::MatrixXd cascade_jacobian(const Grid& grid, const Eigen::Ref<const BranchState>& x, Model model,
                                 const TripParams& trip, double h = 1e-6, const FlowOptions& flow = {});

/// r = U⁰ + (1/ε)·(J_{m−1}···J_1)ᵀ X^m restricted to the targets, the gradient of
/// J = ‖X^m‖² + ε‖U⁰‖² divided by 2ε.
Eigen::VectorXd stationarity_residual(const OptProblem& prob, const Eigen::Ref<const Eigen::VectorXd>& u_targets,
                                      double h = 1e-6);

/// J = ‖X^m‖² + ε‖U⁰‖² for a finished trace.
double disturbance_cost(const CascadeTrace& trace, double epsilon);

/// Damped Newton on the stationarity residual. Tries `guess` first, then 0, −0.5·X⁰ and −1.5·X⁰ on the
/// targets when a start stalls. Throws IdentifyFailure with the best iterate when no start converges.
DisturbanceSolution identify(const OptProblem& prob, const Eigen::Ref<const Eigen::VectorXd>& guess,
                             const IdentifyOptions& opts = {});

}  // namespace gridcascade
