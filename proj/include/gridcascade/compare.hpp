#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridcascade/cascade.hpp"

namespace gridcascade {

inline constexpr double kSignZeroTol = 1e-9;

struct PairComparison {
  std::string a;  // trace labels, e.g. "CNM" or "DCM#2" for a repeated model
  std::string b;
  std::vector<double> rmse;          // one entry per aligned step, index 0 = step 1
  std::vector<int> sign_agreement;   // branches whose flow signs match, per step
};

struct ComparisonReport {
  std::vector<std::string> labels;  // in canonical order
  int steps = 0;
  int branches = 0;
  std::vector<PairComparison> pairs;
  std::vector<std::string> notes;

  const PairComparison& pair(std::string_view a, std::string_view b) const;
  /// 1-based step at which the largest RMSE over all pairs occurs.
  int peak_step() const;
};

/// -1, 0 or +1, with |p| below kSignZeroTol counted as 0.
int flow_sign(double p);

/// Flows of `trace` at a 0-based aligned step; steps past the end repeat the terminal step.
const Eigen::VectorXd& aligned_flows(const CascadeTrace& trace, int step);

/// Pairwise per-step RMSE and sign agreement. Traces are put in canonical model order and must
/// share a grid fingerprint; shorter traces are padded with their terminal step.
ComparisonReport compare_traces(const std::vector<CascadeTrace>& traces);

}  // namespace gridcascade
