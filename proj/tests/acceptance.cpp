// Acceptance checks on the embedded IEEE-9 case. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "gridcascade/compare.hpp"
#include "gridcascade/disturbance.hpp"
#include "gridcascade/linalg.hpp"
#include "support.hpp"

using namespace gridcascade;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void info(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check, double budget_s) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream t;
  t.precision(3);
  t << secs << " s";
  o.require(secs < budget_s, "runtime " + t.str() + " over budget");
  if (!o.pass) ++failures;
  std::printf("%s %s [%s] %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), t.str().c_str(), o.detail.c_str());
  std::fflush(stdout);
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

std::string ids(const std::vector<int>& v) {
  std::string s = "{";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s + "}";
}

const Grid& grid() { return ieee9(); }
Eigen::VectorXd one(double v) { return Eigen::VectorXd::Constant(1, v); }

CascadeTrace cnm_identified_trace() {
  const DisturbanceSolution sol = identify(make_problem(grid(), Model::CNM, {2}), one(0.0));
  return sol.trace;
}

// The DCM disturbance that removes branch 2 exactly (Y₂ → 0); also drives the ACM.
Eigen::VectorXd dcm_sever() {
  return make_disturbance(grid(), {{2, -grid().nominal_admittance()(1)}});
}

CascadeTrace driven(Model m, const Eigen::VectorXd& u0) { return run(grid(), u0, m, default_params(grid())); }

std::vector<CascadeTrace> paper_traces() {
  return {cnm_identified_trace(), driven(Model::DCM, dcm_sever()), driven(Model::ACM, dcm_sever())};
}

Outcome criterion1() {
  Outcome o;
  const Eigen::VectorXd c = cnm_flow(grid(), initial_state(grid(), Model::CNM)).p_e;
  const Eigen::VectorXd d = dcm_flow(grid(), initial_state(grid(), Model::DCM)).p_e;
  const FlowSolution a = acm_flow(grid(), initial_state(grid(), Model::ACM));
  o.require(a.converged, "ACM nominal did not converge");
  int agree = 0;
  for (Eigen::Index k = 0; k < 9; ++k) {
    const bool same = flow_sign(c(k)) == flow_sign(d(k)) && flow_sign(d(k)) == flow_sign(a.p_e(k));
    agree += same ? 1 : 0;
    o.require(same, "branch " + std::to_string(k + 1) + " sign differs");
  }
  o.info(std::to_string(agree) + "/9 branches agree");
  return o;
}

Outcome criterion2() {
  Outcome o;
  const Eigen::VectorXd c = cnm_flow(grid(), initial_state(grid(), Model::CNM)).p_e;
  const Eigen::VectorXd d = dcm_flow(grid(), initial_state(grid(), Model::DCM)).p_e;
  const Eigen::VectorXd a = acm_flow(grid(), initial_state(grid(), Model::ACM)).p_e;
  const double cd = rmse(c, d), da = rmse(d, a), ac = rmse(a, c);
  o.info("CNM-DCM " + num(cd) + " DCM-ACM " + num(da) + " ACM-CNM " + num(ac));
  o.require(std::abs(cd - 0.0515) <= 0.01, "CNM-DCM off 0.0515");
  o.require(std::abs(da - 0.0371) <= 0.01, "DCM-ACM off 0.0371");
  o.require(std::abs(ac - 0.0656) <= 0.01, "ACM-CNM off 0.0656");
  o.require(da < cd && cd < ac, "ordering DCM-ACM < CNM-DCM < ACM-CNM violated");
  return o;
}

Outcome criterion3() {
  Outcome o;
  const DisturbanceSolution sol = identify(make_problem(grid(), Model::DCM, {2}), one(0.0));
  const double dec = -sol.u0(1);
  o.info("identified decrement " + num(dec));
  o.require(std::abs(dec - 10.87) <= 0.5, "decrement not within 10.87 +- 0.5");
  const CascadeTrace& t = sol.trace;
  o.info("severed by step: " + [&] {
    std::string s;
    for (const CascadeStep& st : t.steps) s += ids(st.tripped);
    return s;
  }());
  o.require(t.steps.size() >= 2 && t.steps[1].tripped == std::vector<int>{2}, "branch 2 not severed at step 2");
  o.require(t.steps.size() >= 3 && t.steps[2].tripped == std::vector<int>{1, 4, 5},
            "branches 1,4,5 not severed together at step 3");
  o.require(t.terminal().flows.p_e.cwiseAbs().maxCoeff() < 1e-9, "terminal network still carries flow");
  return o;
}

Outcome criterion4() {
  Outcome o;
  const DisturbanceSolution sol = identify(make_problem(grid(), Model::CNM, {2}), one(0.0));
  o.info("u0 = " + num(sol.u0(1)));
  o.require(std::abs(sol.u0(1) + 1.22) <= 0.05, "u0 not within -1.22 +- 0.05");
  const CascadeTrace& t = sol.trace;
  o.info(std::to_string(t.steps.size()) + " steps, connected " + ids(t.connected_branches()));
  o.require(t.steps.size() == 4, "cascade does not end after 4 steps");
  o.require(t.connected_branches().size() == 2, "terminal network does not have exactly 2 branches");
  o.require(t.terminal().flows.p_e.cwiseAbs().maxCoeff() < 1e-9, "terminal network still carries flow");
  return o;
}

Outcome criterion5() {
  Outcome o;
  const CascadeTrace d = driven(Model::DCM, dcm_sever());
  const CascadeTrace a = driven(Model::ACM, dcm_sever());
  o.require(d.steps.size() >= 3 && a.steps.size() >= 3, "traces shorter than 3 steps");
  if (!o.pass) return o;
  for (std::size_t s = 0; s < 3; ++s) {
    const std::string tag = "step " + std::to_string(s + 1);
    o.require(d.steps[s].tripped == a.steps[s].tripped, tag + " severed sets differ");
    int mism = 0;
    for (Eigen::Index k = 0; k < 9; ++k)
      mism += flow_sign(d.steps[s].flows.p_e(k)) != flow_sign(a.steps[s].flows.p_e(k)) ? 1 : 0;
    o.require(mism == 0, tag + ": " + std::to_string(mism) + " flow sign(s) differ");
  }
  o.require(a.steps[0].flows.converged && a.steps[1].flows.converged, "ACM failed before step 3");
  o.require(!a.steps[2].flows.converged, "ACM converged at step 3");
  o.require(a.steps[2].flows.p_e.allFinite(), "step-3 last-iterate flows missing");
  o.info("ACM step 3 mismatch " + num(a.steps[2].flows.mismatch) + ", run " + std::string(to_string(a.termination)) +
         " after " + std::to_string(a.steps.size()) + " steps");
  return o;
}

Outcome criterion6() {
  Outcome o;
  const ComparisonReport r = compare_traces(paper_traces());
  for (const PairComparison& p : r.pairs) {
    o.info(p.a + "-" + p.b + " final " + num(p.rmse.back()));
    o.require(p.rmse.back() < 1e-9, p.a + "-" + p.b + " not zero at the final step");
  }
  return o;
}

Outcome peak_note() {
  Outcome o;
  const ComparisonReport r = compare_traces(paper_traces());
  o.info("peak at step " + std::to_string(r.peak_step()));
  o.require(r.peak_step() == 3, "maximum RMSE not at step 3");
  return o;
}

Outcome criterion7() {
  Outcome o;
  std::mt19937 rng(20240601);

  // Penrose conditions.
  double penrose = 0.0;
  std::uniform_int_distribution<int> dim(1, 20);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 200; ++t) {
    const int r = dim(rng), c = dim(rng);
    std::uniform_int_distribution<int> rk(1, std::min(r, c));
    const int k = rk(rng);
    Eigen::MatrixXd l(r, k), rt(k, c);
    for (Eigen::Index i = 0; i < l.size(); ++i) l(i) = nd(rng);
    for (Eigen::Index i = 0; i < rt.size(); ++i) rt(i) = nd(rng);
    const Eigen::MatrixXd a = l * rt;
    const Eigen::MatrixXd p = pinv(a);
    penrose = std::max({penrose, (a * p * a - a).cwiseAbs().maxCoeff(), (p * a * p - p).cwiseAbs().maxCoeff(),
                        ((a * p).transpose() - a * p).cwiseAbs().maxCoeff(),
                        ((p * a).transpose() - p * a).cwiseAbs().maxCoeff()});
  }
  o.require(penrose < 1e-8, "Penrose residual " + num(penrose));

  // DCM nodal balance on random connected grids.
  double balance = 0.0;
  std::uniform_int_distribution<int> size(2, 12);
  for (int t = 0; t < 50; ++t) {
    const Grid g = testing::random_connected_grid(rng, size(rng));
    const Eigen::VectorXd pe = dcm_flow(g, g.nominal_admittance()).p_e;
    const IslandDispatch d = dispatch_injections(g, g.nominal_admittance());
    balance = std::max(balance, (incidence(g).transpose() * pe - d.p).cwiseAbs().maxCoeff());
  }
  o.require(balance < 1e-8, "DCM balance violation " + num(balance));

  // Trip factor continuity at the band edges.
  double edge = 0.0;
  for (double sigma : {5e4, 1e3, 10.0}) {
    for (double c : {0.5, 1.0, 1.8}) {
      const double w = std::numbers::pi / (2.0 * sigma);
      const double lo = std::sqrt(c * c - w), hi = std::sqrt(c * c + w);
      edge = std::max({edge, std::abs(trip_factor(std::nextafter(lo, hi), c, sigma) - 1.0),
                       std::abs(trip_factor(std::nextafter(hi, lo), c, sigma))});
    }
  }
  o.require(edge < 1e-12, "trip factor jump " + num(edge));

  // Finite-difference order of the cascade Jacobian at a smooth point.
  const BranchState y = grid().nominal_admittance();
  const TripParams smooth{20.0, dcm_flow(grid(), y).p_e.cwiseAbs() * 1.02};
  const Eigen::MatrixXd ref = cascade_jacobian(grid(), y, Model::DCM, smooth, 1e-5);
  const double e1 = (cascade_jacobian(grid(), y, Model::DCM, smooth, 1e-2) - ref).cwiseAbs().maxCoeff();
  const double e2 = (cascade_jacobian(grid(), y, Model::DCM, smooth, 5e-3) - ref).cwiseAbs().maxCoeff();
  const double order = std::log2(e1 / e2);
  o.require(order >= 1.8, "FD order " + num(order));

  // Stationarity residual at every returned solution.
  double worst = 0.0;
  int solutions = 0;
  for (Model m : {Model::CNM, Model::DCM}) {
    for (int target : {2, 3, 6}) {
      const OptProblem prob = make_problem(grid(), m, {target});
      try {
        const DisturbanceSolution sol = identify(prob, one(0.0));
        const double r =
            stationarity_residual(prob, one(sol.u0(grid().branch_index(target)))).lpNorm<Eigen::Infinity>();
        worst = std::max(worst, r);
        ++solutions;
      } catch (const IdentifyFailure&) {
        // No returned solution, nothing to assert.
      }
    }
  }
  o.require(solutions > 0 && worst < 1e-6, "stationarity residual " + num(worst));

  // rmse symmetry, zero and scaling.
  bool rmse_ok = true;
  std::uniform_int_distribution<int> len(1, 30);
  for (int t = 0; t < 1000; ++t) {
    const int n = len(rng);
    Eigen::VectorXd x(n), z(n);
    for (int i = 0; i < n; ++i) {
      x(i) = nd(rng);
      z(i) = nd(rng);
    }
    const double alpha = 3.0 * nd(rng);
    const double base = rmse(x, z);
    rmse_ok = rmse_ok && std::abs(rmse(z, x) - base) <= 1e-14 * std::max(1.0, base) && rmse(x, x) == 0.0 &&
              std::abs(rmse((alpha * x).eval(), (alpha * z).eval()) - std::abs(alpha) * base) <=
                  1e-12 * std::max(1.0, std::abs(alpha) * base);
  }
  o.require(rmse_ok, "rmse property violated");

  o.info("Penrose " + num(penrose) + ", balance " + num(balance) + ", FD order " + num(order) + ", " +
         std::to_string(solutions) + " solutions with residual <= " + num(worst));
  return o;
}

}  // namespace

int main() {
  report("1. step-1 flow directions agree across CNM/DCM/ACM", criterion1, 1.0);
  report("2. step-1 RMSE values and ordering", criterion2, 1.0);
  report("3. DCM cascade under the identified branch-2 disturbance", criterion3, 5.0);
  report("4. CNM identified disturbance and cascade", criterion4, 30.0);
  report("5. ACM tracks DCM for steps 1-3 and fails to converge at step 3", criterion5, 5.0);
  report("6. all pairwise RMSE zero at the final step", criterion6, 30.0);
  report("7. property suites", criterion7, 60.0);
  report("note: RMSE peaks at step 3", peak_note, 30.0);
  std::printf("%d failing\n", failures);
  return failures == 0 ? 0 : 1;
}
