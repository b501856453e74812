#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gridcascade/grid.hpp"
#include "gridcascade/linalg.hpp"

namespace gridcascade {

/// Network model used to turn a branch state into branch flows.
enum class Model { CNM, DCM, ACM };

std::string_view to_string(Model model);
/// Case-insensitive "cnm" / "dcm" / "acm".
Model parse_model(std::string_view text);

struct AcOptions {
  int max_iter = 30;
  double tolerance = 1e-8;  // max nodal mismatch, p.u.
  bool flat_start = true;   // false: start angles from the DC solution
};

struct FlowOptions {
  double rank_tol = kDefaultRankTol;
  double connectivity_tol = kDefaultConnectivityTol;
  AcOptions ac;
};

struct FlowSolution {
  Eigen::VectorXd p_e;                   // branch active power, sending end
  std::optional<Eigen::VectorXd> theta;  // bus angles (DCM/ACM)
  std::optional<Eigen::VectorXd> v_mag;  // bus voltage magnitudes (ACM)
  std::optional<Eigen::VectorXd> q_e;    // branch reactive power, sending end (ACM)
  bool converged = true;
  double mismatch = 0.0;
  std::string diagnostic;
};

/// State used inside flow computations: negative entries and entries at or below the connectivity
/// tolerance count as open branches (0). The cascade recursion keeps the raw state.
BranchState effective_state(const Eigen::Ref<const BranchState>& x, double tol = kDefaultConnectivityTol);

/// Per-island injections after dispatch. In every island that contains a generator, the reference
/// bus (the slack, or the highest-id generator when the slack is elsewhere) absorbs the island's
/// active-power mismatch. Islands without a generator are de-energized.
struct IslandDispatch {
  Eigen::VectorXd p;                       // balanced active injections per bus column
  std::vector<int> labels;                 // island label per bus column
  std::vector<Eigen::Index> reference;     // reference bus column per island, -1 if de-energized
  bool energized(int island) const { return reference[static_cast<std::size_t>(island)] >= 0; }
};

IslandDispatch dispatch_injections(const Grid& grid, const Eigen::Ref<const BranchState>& x,
                                   double tol = kDefaultConnectivityTol);

/// Topological model: least-squares flows P_e = [Aᵀ diag(s)]⁺ P.
FlowSolution cnm_flow(const Grid& grid, const Eigen::Ref<const BranchState>& s, const FlowOptions& opts = {});

/// DC model: theta = L⁺ P with L = Aᵀ diag(y) A, P_e = diag(y) A theta.
FlowSolution dcm_flow(const Grid& grid, const Eigen::Ref<const BranchState>& y, const FlowOptions& opts = {});

/// AC model: Newton-Raphson per island in polar coordinates. The series admittance of branch k is
/// scaled by y_k / y_p,k. Non-convergence is reported through `converged` with last-iterate flows.
FlowSolution acm_flow(const Grid& grid, const Eigen::Ref<const BranchState>& y, const FlowOptions& opts = {});

FlowSolution compute_flows(const Grid& grid, const Eigen::Ref<const BranchState>& x, Model model,
                           const FlowOptions& opts = {});

/// Initial state X⁰: unit connection levels (CNM) or nominal admittances (DCM/ACM).
BranchState initial_state(const Grid& grid, Model model);

/// Complex bus admittance matrix for the given (effective) branch state.
Eigen::MatrixXcd complex_bus_admittance(const Grid& grid, const Eigen::Ref<const BranchState>& y);

}  // namespace gridcascade
