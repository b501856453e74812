#pragma once

#include <complex>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace gridcascade {

/// Connection level (topological model) or branch admittance (flow models), one entry per branch.
using BranchState = Eigen::VectorXd;

inline constexpr double kDefaultConnectivityTol = 1e-6;

enum class BusKind { slack, generator, load };

std::string_view to_string(BusKind kind);
BusKind parse_bus_kind(std::string_view text);

/// All electrical quantities are per-unit on the case base.
struct Bus {
  int id = 0;
  BusKind kind = BusKind::load;
  double p = 0.0;      // net active injection (generation minus load)
  double q = 0.0;      // net reactive injection, meaningful for load buses
  double v_set = 1.0;  // voltage magnitude setpoint, meaningful for slack/generator buses

  bool is_source() const { return kind != BusKind::load; }
};

struct Branch {
  int id = 0;
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double capacity = 0.0;

  /// Series susceptance magnitude 1/x used as the nominal DC admittance.
  double y_p() const { return 1.0 / x; }
  std::complex<double> y_series() const { return 1.0 / std::complex<double>(r, x); }
};

/// Immutable bus/branch description. Buses are stored in ascending id order and branches in
/// ascending id order; matrix rows/columns follow that order.
class Grid {
 public:
  Grid(std::string name, double base_mva, std::vector<Bus> buses, std::vector<Branch> branches);

  const std::string& name() const { return name_; }
  double base_mva() const { return base_mva_; }
  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Branch>& branches() const { return branches_; }
  Eigen::Index bus_count() const { return static_cast<Eigen::Index>(buses_.size()); }
  Eigen::Index branch_count() const { return static_cast<Eigen::Index>(branches_.size()); }

  /// Column index of a bus id; throws ValidationError if unknown.
  Eigen::Index bus_index(int bus_id) const;
  /// Row index of a branch id (ids are 1..n, so this is id - 1 after validation).
  Eigen::Index branch_index(int branch_id) const;

  Eigen::VectorXd injections() const;
  Eigen::VectorXd reactive_injections() const;
  Eigen::VectorXd capacities() const;
  /// Nominal admittances y_p = 1/x.
  BranchState nominal_admittance() const;

  /// Stable identifier of the electrical content (topology, impedances, injections), used to
  /// check that traces being compared come from the same case.
  std::string fingerprint() const;

 private:
  std::string name_;
  double base_mva_;
  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  std::unordered_map<int, Eigen::Index> bus_pos_;
};

/// Branch-bus incidence matrix: row per branch with +1 at `from`, -1 at `to`.
Eigen::MatrixXd incidence(const Grid& grid);

/// Weighted Laplacian Aᵀ·diag(y)·A.
Eigen::MatrixXd bus_admittance(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& y);

/// Connected components over branches with x_i > tol. Each part is a sorted list of bus ids;
/// parts are ordered by their smallest bus id.
std::vector<std::vector<int>> components(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& x,
                                         double tol = kDefaultConnectivityTol);

/// Component label per bus column for the same connectivity rule as `components`.
std::vector<int> component_labels(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& x,
                                  double tol = kDefaultConnectivityTol);

// Case document (TOML): [case] name/base_mva, [[bus]] id/kind/p/q/v_set, [[branch]] id/from/to/r/x/capacity.
Grid load_case(std::string_view document);
Grid load_case_file(const std::filesystem::path& path);
std::string serialize_case(const Grid& grid);

/// Built-in IEEE 9-bus case with the branch capacities used for cascade studies.
const Grid& ieee9();
std::string_view ieee9_document();

/// "ieee9" resolves to the built-in case; anything else is read as a case file path.
Grid resolve_case(std::string_view spec);

}  // namespace gridcascade
