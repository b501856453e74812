#include <cmath>
#include <complex>

#include "gridcascade/errors.hpp"
#include "gridcascade/powerflow.hpp"

namespace gridcascade {

namespace {

using cd = std::complex<double>;

// std::polar requires a non-negative magnitude; diverging iterates may violate that.
cd phasor(double mag, double angle) { return {mag * std::cos(angle), mag * std::sin(angle)}; }

struct IslandResult {
  bool converged = true;
  double mismatch = 0.0;
  int iterations = 0;
  std::string diagnostic;
};

// Newton-Raphson on one energized island. `buses` are bus columns of the island, `ref` is the
// angle reference column. Voltages are updated in place.
IslandResult solve_island(const Grid& grid, const Eigen::MatrixXcd& ybus_full, const std::vector<Eigen::Index>& buses,
                          Eigen::Index ref, const Eigen::VectorXd& p_spec, const Eigen::VectorXd& q_spec,
                          Eigen::VectorXd& va, Eigen::VectorXd& vm, const AcOptions& opts) {
  const auto nb = static_cast<Eigen::Index>(buses.size());
  Eigen::MatrixXcd ybus(nb, nb);
  for (Eigen::Index i = 0; i < nb; ++i)
    for (Eigen::Index j = 0; j < nb; ++j) ybus(i, j) = ybus_full(buses[i], buses[j]);

  // Local index lists: angle unknowns at every non-reference bus, magnitude unknowns at load buses.
  std::vector<Eigen::Index> ang, mag;
  for (Eigen::Index i = 0; i < nb; ++i) {
    if (buses[i] == ref) continue;
    ang.push_back(i);
    if (!grid.buses()[static_cast<std::size_t>(buses[i])].is_source()) mag.push_back(i);
  }
  const auto na = static_cast<Eigen::Index>(ang.size());
  const auto nm = static_cast<Eigen::Index>(mag.size());
  const Eigen::Index nx = na + nm;

  Eigen::VectorXcd v(nb);
  auto load_voltage = [&] {
    for (Eigen::Index i = 0; i < nb; ++i) v(i) = phasor(vm(buses[i]), va(buses[i]));
  };

  auto mismatch = [&](Eigen::VectorXd& f) {
    const Eigen::VectorXcd s = v.cwiseProduct((ybus * v).conjugate());
    f.resize(nx);
    for (Eigen::Index a = 0; a < na; ++a) f(a) = s(ang[a]).real() - p_spec(buses[ang[a]]);
    for (Eigen::Index m = 0; m < nm; ++m) f(na + m) = s(mag[m]).imag() - q_spec(buses[mag[m]]);
  };

  IslandResult res;
  load_voltage();
  if (nx == 0) return res;

  Eigen::VectorXd f;
  mismatch(f);
  res.mismatch = f.cwiseAbs().maxCoeff();
  while (res.mismatch >= opts.tolerance) {
    if (res.iterations >= opts.max_iter) {
      res.converged = false;
      res.diagnostic = "no convergence after " + std::to_string(opts.max_iter) + " iterations";
      break;
    }

    // dS/dVa = j diag(V) conj(diag(I) - Y diag(V)); dS/dVm = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
    const Eigen::VectorXcd current = ybus * v;
    const Eigen::VectorXcd vnorm = v.cwiseQuotient(v.cwiseAbs().cast<cd>());
    Eigen::MatrixXcd ds_dva = -(ybus * v.asDiagonal());
    ds_dva.diagonal() += current;
    ds_dva = cd(0.0, 1.0) * (v.asDiagonal() * ds_dva.conjugate());
    Eigen::MatrixXcd ds_dvm = v.asDiagonal() * (ybus * vnorm.asDiagonal()).conjugate();
    ds_dvm.diagonal() += current.conjugate().cwiseProduct(vnorm);

    Eigen::MatrixXd jac(nx, nx);
    for (Eigen::Index r = 0; r < na; ++r) {
      for (Eigen::Index c = 0; c < na; ++c) jac(r, c) = ds_dva(ang[r], ang[c]).real();
      for (Eigen::Index c = 0; c < nm; ++c) jac(r, na + c) = ds_dvm(ang[r], mag[c]).real();
    }
    for (Eigen::Index r = 0; r < nm; ++r) {
      for (Eigen::Index c = 0; c < na; ++c) jac(na + r, c) = ds_dva(mag[r], ang[c]).imag();
      for (Eigen::Index c = 0; c < nm; ++c) jac(na + r, na + c) = ds_dvm(mag[r], mag[c]).imag();
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible()) {
      res.converged = false;
      res.diagnostic = "singular Jacobian at iteration " + std::to_string(res.iterations);
      break;
    }
    const Eigen::VectorXd dx = lu.solve(-f);
    if (!dx.allFinite()) throw NumericError("acm_flow: non-finite Newton update");

    for (Eigen::Index a = 0; a < na; ++a) va(buses[ang[a]]) += dx(a);
    for (Eigen::Index m = 0; m < nm; ++m) vm(buses[mag[m]]) += dx(na + m);
    load_voltage();
    ++res.iterations;

    mismatch(f);
    if (!f.allFinite()) throw NumericError("acm_flow: non-finite mismatch");
    res.mismatch = f.cwiseAbs().maxCoeff();
  }
  return res;
}

}  // namespace

FlowSolution acm_flow(const Grid& grid, const Eigen::Ref<const BranchState>& y, const FlowOptions& opts) {
  if (y.size() != grid.branch_count())
    throw DimensionError("admittance state has length " + std::to_string(y.size()) + ", expected " +
                         std::to_string(grid.branch_count()));
  const BranchState adm = effective_state(y, opts.connectivity_tol);
  const IslandDispatch dispatch = dispatch_injections(grid, adm, opts.connectivity_tol);
  const Eigen::MatrixXcd ybus = complex_bus_admittance(grid, adm);
  const Eigen::VectorXd q_spec = grid.reactive_injections();

  const Eigen::Index nb = grid.bus_count();
  Eigen::VectorXd va = Eigen::VectorXd::Zero(nb);
  Eigen::VectorXd vm = Eigen::VectorXd::Zero(nb);

  std::vector<std::vector<Eigen::Index>> island_buses(dispatch.reference.size());
  for (std::size_t i = 0; i < dispatch.labels.size(); ++i)
    island_buses[static_cast<std::size_t>(dispatch.labels[i])].push_back(static_cast<Eigen::Index>(i));

  if (!opts.ac.flat_start) {
    const FlowSolution dc = dcm_flow(grid, adm, opts);
    va = *dc.theta;
  }

  FlowSolution sol;
  for (std::size_t island = 0; island < island_buses.size(); ++island) {
    if (!dispatch.energized(static_cast<int>(island))) continue;
    const Eigen::Index ref = dispatch.reference[island];
    for (Eigen::Index b : island_buses[island]) {
      const Bus& bus = grid.buses()[static_cast<std::size_t>(b)];
      vm(b) = bus.is_source() ? bus.v_set : 1.0;
    }
    const double ref_angle = va(ref);
    for (Eigen::Index b : island_buses[island]) va(b) -= ref_angle;

    const IslandResult res =
        solve_island(grid, ybus, island_buses[island], ref, dispatch.p, q_spec, va, vm, opts.ac);
    sol.mismatch = std::max(sol.mismatch, res.mismatch);
    if (!res.converged) {
      sol.converged = false;
      if (!sol.diagnostic.empty()) sol.diagnostic += "; ";
      sol.diagnostic += "island at bus " + std::to_string(grid.buses()[static_cast<std::size_t>(ref)].id) + ": " +
                        res.diagnostic;
    }
  }
  // De-energized buses keep zero voltage so every flow touching them vanishes.
  for (std::size_t island = 0; island < island_buses.size(); ++island)
    if (!dispatch.energized(static_cast<int>(island)))
      for (Eigen::Index b : island_buses[island]) va(b) = 0.0;

  sol.p_e.resize(grid.branch_count());
  sol.q_e = Eigen::VectorXd(grid.branch_count());
  for (Eigen::Index k = 0; k < grid.branch_count(); ++k) {
    const Branch& br = grid.branches()[static_cast<std::size_t>(k)];
    if (adm(k) == 0.0) {
      sol.p_e(k) = 0.0;
      (*sol.q_e)(k) = 0.0;
      continue;
    }
    const Eigen::Index f = grid.bus_index(br.from);
    const Eigen::Index t = grid.bus_index(br.to);
    const cd vf = phasor(vm(f), va(f));
    const cd vt = phasor(vm(t), va(t));
    const cd s = vf * std::conj((vf - vt) * ((adm(k) * br.x) * br.y_series()));
    sol.p_e(k) = s.real();
    (*sol.q_e)(k) = s.imag();
  }
  if (!sol.p_e.allFinite()) throw NumericError("acm_flow: non-finite branch flows");
  sol.theta = va;
  sol.v_mag = vm;
  return sol;
}

}  // namespace gridcascade
