#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gridcascade/errors.hpp"
#include "gridcascade/grid.hpp"
#include "support.hpp"

using namespace gridcascade;

namespace {

std::string case_text(const std::string& branch_extra = "") {
  return R"(
[case]
name = "tiny"
base_mva = 100.0

[[bus]]
id = 1
kind = "slack"
p = 0.5

[[bus]]
id = 2
kind = "load"
p = -0.5
q = -0.1

[[branch]]
id = 1
from = 1
to = 2
x = 0.1
capacity = 1.0
)" + branch_extra;
}

}  // namespace

TEST_CASE("built-in IEEE-9 case") {
  const Grid& g = ieee9();
  CHECK(g.bus_count() == 9);
  CHECK(g.branch_count() == 9);
  CHECK(g.base_mva() == 100.0);
  Eigen::VectorXd c(9);
  c << 1, 1.8, 1, 0.6, 0.5, 1, 1, 1, 1;
  CHECK(g.capacities() == c);
  CHECK(g.buses()[0].kind == BusKind::slack);
  CHECK(g.branches()[1].from == 8);
  CHECK(g.branches()[1].to == 2);
  CHECK(g.nominal_admittance()(1) == doctest::Approx(16.0));
}

TEST_CASE("embedded IEEE-9 document matches the data file") {
  const std::filesystem::path file = std::filesystem::path(GRIDCASCADE_SOURCE_DIR) / "data" / "ieee9.toml";
  std::ifstream in(file);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == std::string(ieee9_document()));
  CHECK(load_case_file(file).fingerprint() == ieee9().fingerprint());
}

TEST_CASE("incidence rows carry one +1 and one -1") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Grid g = testing::random_connected_grid(rng, 3 + trial % 10);
    const Eigen::MatrixXd a = incidence(g);
    CHECK(a.rows() == g.branch_count());
    CHECK(a.cols() == g.bus_count());
    CHECK(a.rowwise().sum().cwiseAbs().maxCoeff() == 0.0);
    for (Eigen::Index k = 0; k < a.rows(); ++k) {
      CHECK(a(k, g.bus_index(g.branches()[static_cast<std::size_t>(k)].from)) == 1.0);
      CHECK(a(k, g.bus_index(g.branches()[static_cast<std::size_t>(k)].to)) == -1.0);
      CHECK(a.row(k).cwiseAbs().sum() == 2.0);
    }
  }
}

TEST_CASE("weighted Laplacian is symmetric with zero row sums and PSD") {
  std::mt19937 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Grid g = testing::random_connected_grid(rng, 4 + trial % 8);
    const Eigen::MatrixXd l = bus_admittance(g, g.nominal_admittance());
    CHECK((l - l.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(l.rowwise().sum().cwiseAbs().maxCoeff() < 1e-9);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
    CHECK(es.eigenvalues().minCoeff() > -1e-9);
    // Connected: exactly one zero eigenvalue.
    CHECK(es.eigenvalues()(1) > 1e-9);
  }
}

TEST_CASE("components follow live branches") {
  const Grid& g = ieee9();
  Eigen::VectorXd x = Eigen::VectorXd::Ones(9);
  CHECK(components(g, x).size() == 1);

  x(1) = 0.0;  // 8-2 opened: bus 2 isolated
  auto parts = components(g, x);
  REQUIRE(parts.size() == 2);
  CHECK(parts[1] == std::vector<int>{2});

  x(0) = x(3) = x(4) = 0.0;  // 1-4, 4-5, 9-4 opened
  parts = components(g, x);
  REQUIRE(parts.size() == 4);
  CHECK(parts[0] == std::vector<int>{1});
  CHECK(parts[1] == std::vector<int>{2});
  CHECK(parts[2] == std::vector<int>{3, 5, 6, 7, 8, 9});
  CHECK(parts[3] == std::vector<int>{4});

  x.setConstant(1e-7);  // below the connectivity tolerance
  CHECK(components(g, x).size() == 9);
  CHECK(components(g, x, 1e-8).size() == 1);
}

TEST_CASE("case round-trip preserves content") {
  const Grid& g = ieee9();
  const Grid back = load_case(serialize_case(g));
  CHECK(back.name() == g.name());
  CHECK(back.fingerprint() == g.fingerprint());
  CHECK(back.capacities() == g.capacities());
  CHECK(serialize_case(back) == serialize_case(g));

  std::mt19937 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Grid r = testing::random_connected_grid(rng, 5 + trial);
    const Grid rb = load_case(serialize_case(r));
    CHECK(rb.fingerprint() == r.fingerprint());
    CHECK(rb.injections() == r.injections());
    CHECK(rb.nominal_admittance() == r.nominal_admittance());
  }
}

TEST_CASE("case fields in MW are scaled by the base") {
  std::string text = case_text();
  const auto pos = text.find("p = -0.5");
  text.replace(pos, 8, "p_mw = -50.0");
  const Grid g = load_case(text);
  CHECK(g.buses()[1].p == doctest::Approx(-0.5));
}

TEST_CASE("parse errors name the offending field") {
  SUBCASE("missing reactance") {
    std::string text = case_text();
    text.replace(text.find("x = 0.1\n"), 8, "");
    try {
      load_case(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.field() == "branch[0].x");
    }
  }
  SUBCASE("wrong type") {
    std::string text = case_text();
    text.replace(text.find("x = 0.1"), 7, "x = \"big\"");
    CHECK_THROWS_AS(load_case(text), ParseError);
  }
  SUBCASE("syntax error") { CHECK_THROWS_AS(load_case("[case\nname="), ParseError); }
  SUBCASE("unknown bus kind") {
    std::string text = case_text();
    text.replace(text.find("\"load\""), 6, "\"motor\"");
    CHECK_THROWS_AS(load_case(text), ParseError);
  }
}

TEST_CASE("validation rejects inconsistent cases") {
  SUBCASE("dangling branch") {
    CHECK_THROWS_AS(load_case(case_text("\n[[branch]]\nid = 2\nfrom = 1\nto = 7\nx = 0.1\ncapacity = 1.0\n")),
                    ValidationError);
  }
  SUBCASE("branch ids must be 1..n") {
    CHECK_THROWS_AS(load_case(case_text("\n[[branch]]\nid = 5\nfrom = 1\nto = 2\nx = 0.1\ncapacity = 1.0\n")),
                    ValidationError);
  }
  SUBCASE("non-positive reactance") {
    std::string text = case_text();
    text.replace(text.find("x = 0.1"), 7, "x = 0.0");
    CHECK_THROWS_AS(load_case(text), ValidationError);
  }
  SUBCASE("two slacks") {
    std::string text = case_text();
    text.replace(text.find("\"load\""), 6, "\"slack\"");
    CHECK_THROWS_AS(load_case(text), ValidationError);
  }
  SUBCASE("self loop") {
    CHECK_THROWS_AS(load_case(case_text("\n[[branch]]\nid = 2\nfrom = 2\nto = 2\nx = 0.1\ncapacity = 1.0\n")),
                    ValidationError);
  }
}

TEST_CASE("missing case file reports file not found") {
  try {
    load_case_file("/nonexistent/missing.toml");
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("not found") != std::string::npos);
  }
  CHECK(resolve_case("ieee9").fingerprint() == ieee9().fingerprint());
}

TEST_CASE("fingerprint ignores capacities but not impedances") {
  const Grid& g = ieee9();
  std::vector<Branch> branches = g.branches();
  branches[0].capacity = 7.0;
  const Grid other_cap(g.name(), g.base_mva(), g.buses(), branches);
  CHECK(other_cap.fingerprint() == g.fingerprint());
  branches[0].x *= 2.0;
  const Grid other_x(g.name(), g.base_mva(), g.buses(), branches);
  CHECK(other_x.fingerprint() != g.fingerprint());
}
