#pragma once

#include <random>
#include <set>
#include <utility>
#include <vector>

#include "gridcascade/grid.hpp"

namespace testing {

using gridcascade::Branch;
using gridcascade::Bus;
using gridcascade::BusKind;
using gridcascade::Grid;

// Random connected grid: a random spanning tree plus a few chords. Bus 1 is the slack, a couple of
// generators, loads elsewhere. Capacities are large so nothing trips unless a test lowers them.
inline Grid random_connected_grid(std::mt19937& rng, int nb, double capacity = 100.0) {
  std::uniform_real_distribution<double> load(-1.5, -0.1);
  std::uniform_real_distribution<double> gen(0.2, 1.5);
  std::uniform_real_distribution<double> react(0.03, 0.4);
  std::uniform_real_distribution<double> res(0.0, 0.05);

  std::vector<Bus> buses;
  for (int i = 1; i <= nb; ++i) {
    Bus b;
    b.id = i;
    if (i == 1) {
      b.kind = BusKind::slack;
      b.p = gen(rng);
    } else if (i <= 1 + nb / 4) {
      b.kind = BusKind::generator;
      b.p = gen(rng);
    } else {
      b.kind = BusKind::load;
      b.p = load(rng);
      b.q = 0.3 * b.p;
    }
    buses.push_back(b);
  }

  std::set<std::pair<int, int>> edges;
  for (int i = 2; i <= nb; ++i) {
    std::uniform_int_distribution<int> pick(1, i - 1);
    edges.insert({pick(rng), i});
  }
  std::uniform_int_distribution<int> any(1, nb);
  for (int extra = 0; extra < nb / 3; ++extra) {
    int a = any(rng);
    int b = any(rng);
    if (a == b) continue;
    edges.insert({std::min(a, b), std::max(a, b)});
  }

  std::vector<Branch> branches;
  int id = 1;
  for (const auto& [a, b] : edges) {
    Branch br;
    br.id = id++;
    const bool flip = (rng() & 1U) != 0U;
    br.from = flip ? b : a;
    br.to = flip ? a : b;
    br.x = react(rng);
    br.r = res(rng);
    br.capacity = capacity;
    branches.push_back(br);
  }
  return Grid("random", 100.0, std::move(buses), std::move(branches));
}

// Slack feeding one load through a single line.
inline Grid two_bus(double load = -0.5, double capacity = 1.0, double x = 0.1) {
  std::vector<Bus> buses{{1, BusKind::slack, -load, 0.0, 1.0}, {2, BusKind::load, load, 0.0, 1.0}};
  std::vector<Branch> branches{{1, 1, 2, 0.0, x, capacity}};
  return Grid("two-bus", 100.0, std::move(buses), std::move(branches));
}

// Slack and load joined by two parallel lines.
inline Grid parallel_pair(double load = -1.0, double capacity = 1.0) {
  std::vector<Bus> buses{{1, BusKind::slack, -load, 0.0, 1.0}, {2, BusKind::load, load, 0.0, 1.0}};
  std::vector<Branch> branches{{1, 1, 2, 0.0, 0.1, capacity}, {2, 1, 2, 0.0, 0.2, capacity}};
  return Grid("parallel", 100.0, std::move(buses), std::move(branches));
}

}  // namespace testing
