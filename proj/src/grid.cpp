#include "gridcascade/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "gridcascade/errors.hpp"
#include "hash.hpp"

namespace gridcascade {

std::string_view to_string(BusKind kind) {
  switch (kind) {
    case BusKind::slack:
      return "slack";
    case BusKind::generator:
      return "generator";
    case BusKind::load:
      return "load";
  }
  return "load";
}

BusKind parse_bus_kind(std::string_view text) {
  if (text == "slack") return BusKind::slack;
  if (text == "generator") return BusKind::generator;
  if (text == "load") return BusKind::load;
  throw ParseError("bus.kind", "unknown bus kind '" + std::string(text) + "'");
}

Grid::Grid(std::string name, double base_mva, std::vector<Bus> buses, std::vector<Branch> branches)
    : name_(std::move(name)), base_mva_(base_mva), buses_(std::move(buses)), branches_(std::move(branches)) {
  if (!(base_mva_ > 0.0)) throw ValidationError("base_mva must be positive");
  if (buses_.empty()) throw ValidationError("case has no buses");

  std::sort(buses_.begin(), buses_.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });
  std::sort(branches_.begin(), branches_.end(), [](const Branch& a, const Branch& b) { return a.id < b.id; });

  int slack_count = 0;
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    const Bus& bus = buses_[i];
    if (bus.id < 1) throw ValidationError("bus id " + std::to_string(bus.id) + " must be >= 1");
    if (!bus_pos_.emplace(bus.id, static_cast<Eigen::Index>(i)).second)
      throw ValidationError("duplicate bus id " + std::to_string(bus.id));
    if (!std::isfinite(bus.p) || !std::isfinite(bus.q) || !std::isfinite(bus.v_set))
      throw ValidationError("bus " + std::to_string(bus.id) + " has non-finite data");
    if (bus.is_source() && !(bus.v_set > 0.0))
      throw ValidationError("bus " + std::to_string(bus.id) + " needs a positive v_set");
    if (bus.kind == BusKind::slack) ++slack_count;
  }
  if (slack_count != 1)
    throw ValidationError("case must have exactly one slack bus, found " + std::to_string(slack_count));

  for (std::size_t k = 0; k < branches_.size(); ++k) {
    const Branch& br = branches_[k];
    const std::string tag = "branch " + std::to_string(br.id);
    if (br.id != static_cast<int>(k) + 1)
      throw ValidationError("branch ids must be unique and run 1..n; got " + std::to_string(br.id) + " at position " +
                            std::to_string(k + 1));
    if (!bus_pos_.contains(br.from)) throw ValidationError(tag + " references missing bus " + std::to_string(br.from));
    if (!bus_pos_.contains(br.to)) throw ValidationError(tag + " references missing bus " + std::to_string(br.to));
    if (br.from == br.to) throw ValidationError(tag + " connects bus " + std::to_string(br.from) + " to itself");
    if (!(br.x > 0.0) || !std::isfinite(br.x)) throw ValidationError(tag + " needs x > 0");
    if (!(br.r >= 0.0) || !std::isfinite(br.r)) throw ValidationError(tag + " needs r >= 0");
    if (!(br.capacity > 0.0) || !std::isfinite(br.capacity)) throw ValidationError(tag + " needs capacity > 0");
  }
}

Eigen::Index Grid::bus_index(int bus_id) const {
  auto it = bus_pos_.find(bus_id);
  if (it == bus_pos_.end()) throw ValidationError("unknown bus id " + std::to_string(bus_id));
  return it->second;
}

Eigen::Index Grid::branch_index(int branch_id) const {
  if (branch_id < 1 || branch_id > static_cast<int>(branches_.size()))
    throw ValidationError("unknown branch id " + std::to_string(branch_id));
  return branch_id - 1;
}

Eigen::VectorXd Grid::injections() const {
  Eigen::VectorXd p(bus_count());
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = buses_[static_cast<std::size_t>(i)].p;
  return p;
}

Eigen::VectorXd Grid::reactive_injections() const {
  Eigen::VectorXd q(bus_count());
  for (Eigen::Index i = 0; i < q.size(); ++i) q(i) = buses_[static_cast<std::size_t>(i)].q;
  return q;
}

Eigen::VectorXd Grid::capacities() const {
  Eigen::VectorXd c(branch_count());
  for (Eigen::Index k = 0; k < c.size(); ++k) c(k) = branches_[static_cast<std::size_t>(k)].capacity;
  return c;
}

BranchState Grid::nominal_admittance() const {
  BranchState y(branch_count());
  for (Eigen::Index k = 0; k < y.size(); ++k) y(k) = branches_[static_cast<std::size_t>(k)].y_p();
  return y;
}

std::string Grid::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  for (const Bus& b : buses_) os << "b" << b.id << ',' << to_string(b.kind) << ',' << b.p << ',' << b.q << ',' << b.v_set << ';';
  for (const Branch& br : branches_) os << "l" << br.id << ',' << br.from << ',' << br.to << ',' << br.r << ',' << br.x << ';';
  return detail::sha256_hex(os.str()).substr(0, 16);
}

Eigen::MatrixXd incidence(const Grid& grid) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(grid.branch_count(), grid.bus_count());
  for (Eigen::Index k = 0; k < grid.branch_count(); ++k) {
    const Branch& br = grid.branches()[static_cast<std::size_t>(k)];
    a(k, grid.bus_index(br.from)) = 1.0;
    a(k, grid.bus_index(br.to)) = -1.0;
  }
  return a;
}

Eigen::MatrixXd bus_admittance(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (y.size() != grid.branch_count())
    throw DimensionError("admittance vector has length " + std::to_string(y.size()) + ", expected " +
                         std::to_string(grid.branch_count()));
  const Eigen::MatrixXd a = incidence(grid);
  return a.transpose() * y.asDiagonal() * a;
}

namespace {

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) {
    while (parent[static_cast<std::size_t>(i)] != i) {
      parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
      i = parent[static_cast<std::size_t>(i)];
    }
    return i;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

}  // namespace

std::vector<int> component_labels(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& x, double tol) {
  if (x.size() != grid.branch_count())
    throw DimensionError("state vector has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(grid.branch_count()));
  DisjointSet dsu(static_cast<std::size_t>(grid.bus_count()));
  for (Eigen::Index k = 0; k < grid.branch_count(); ++k) {
    if (!(x(k) > tol)) continue;
    const Branch& br = grid.branches()[static_cast<std::size_t>(k)];
    dsu.unite(static_cast<int>(grid.bus_index(br.from)), static_cast<int>(grid.bus_index(br.to)));
  }
  // Roots are the smallest member index, so relabeling in column order gives labels ordered by
  // smallest bus id.
  std::vector<int> labels(static_cast<std::size_t>(grid.bus_count()));
  std::unordered_map<int, int> relabel;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int root = dsu.find(static_cast<int>(i));
    auto [it, inserted] = relabel.emplace(root, static_cast<int>(relabel.size()));
    labels[i] = it->second;
  }
  return labels;
}

std::vector<std::vector<int>> components(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& x, double tol) {
  const std::vector<int> labels = component_labels(grid, x, tol);
  const int count = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<int>> parts(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < labels.size(); ++i)
    parts[static_cast<std::size_t>(labels[i])].push_back(grid.buses()[i].id);
  return parts;
}

}  // namespace gridcascade
