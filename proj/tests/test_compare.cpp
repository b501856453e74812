#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gridcascade/compare.hpp"
#include "gridcascade/errors.hpp"
#include "support.hpp"

using namespace gridcascade;

namespace {

CascadeTrace sever_run(Model m) {
  const Grid& g = ieee9();
  const double amount = m == Model::CNM ? -1.0 : -16.0;
  return run(g, make_disturbance(g, {{2, amount}}), m, default_params(g));
}

}  // namespace

TEST_CASE("identical traces compare to zero with full agreement") {
  const CascadeTrace t = sever_run(Model::DCM);
  const ComparisonReport r = compare_traces({t, t});
  REQUIRE(r.pairs.size() == 1);
  CHECK(r.labels == std::vector<std::string>{"DCM", "DCM#2"});
  for (std::size_t s = 0; s < r.pairs[0].rmse.size(); ++s) {
    CHECK(r.pairs[0].rmse[s] == 0.0);
    CHECK(r.pairs[0].sign_agreement[s] == 9);
  }
  CHECK(r.notes.empty());
}

TEST_CASE("pairs are in canonical model order") {
  const CascadeTrace acm = sever_run(Model::ACM);
  const CascadeTrace cnm = sever_run(Model::CNM);
  const CascadeTrace dcm = sever_run(Model::DCM);
  const ComparisonReport r = compare_traces({acm, dcm, cnm});
  REQUIRE(r.pairs.size() == 3);
  CHECK(r.pairs[0].a == "CNM");
  CHECK(r.pairs[0].b == "DCM");
  CHECK(r.pairs[1].a == "CNM");
  CHECK(r.pairs[1].b == "ACM");
  CHECK(r.pairs[2].a == "DCM");
  CHECK(r.pairs[2].b == "ACM");
  // Swapping the input order does not change the numbers.
  const ComparisonReport r2 = compare_traces({cnm, acm, dcm});
  for (std::size_t p = 0; p < 3; ++p) CHECK(r.pairs[p].rmse == r2.pairs[p].rmse);
  CHECK(r.pair("ACM", "DCM").rmse == r.pair("DCM", "ACM").rmse);
  CHECK_THROWS_AS(r.pair("CNM", "XYZ"), std::out_of_range);
}

TEST_CASE("IEEE-9 three-model comparison shape") {
  const ComparisonReport r = compare_traces({sever_run(Model::CNM), sever_run(Model::DCM), sever_run(Model::ACM)});
  CHECK(r.steps == 4);
  // Terminal step: no power anywhere.
  for (const PairComparison& p : r.pairs) CHECK(p.rmse.back() < 1e-9);
  CHECK(r.peak_step() == 3);
  // The non-converged ACM step is surfaced.
  REQUIRE(r.notes.size() == 1);
  CHECK(r.notes[0].find("ACM step 3") != std::string::npos);
  // Step 1: the usual ordering between the models.
  const double cd = r.pair("CNM", "DCM").rmse[0];
  const double da = r.pair("DCM", "ACM").rmse[0];
  const double ac = r.pair("CNM", "ACM").rmse[0];
  CHECK(da < cd);
  CHECK(cd < ac);
  CHECK(r.pair("CNM", "DCM").sign_agreement[0] == 9);
}

TEST_CASE("shorter traces are padded with their terminal step") {
  const Grid& g = ieee9();
  const CascadeTrace quiet = run(g, Eigen::VectorXd::Zero(9), Model::DCM, default_params(g));
  const CascadeTrace severed = sever_run(Model::DCM);
  REQUIRE(quiet.steps.size() == 1);
  const ComparisonReport r = compare_traces({quiet, severed});
  CHECK(r.steps == 4);
  CHECK(r.pairs[0].rmse[0] == 0.0);
  CHECK(aligned_flows(quiet, 3) == quiet.steps[0].flows.p_e);
  CHECK(r.pairs[0].rmse[3] == doctest::Approx(rmse(quiet.steps[0].flows.p_e, severed.steps[3].flows.p_e)));

  // Equal-length traces: padding never enters.
  const ComparisonReport same = compare_traces({severed, sever_run(Model::CNM)});
  CHECK(same.pairs[0].rmse.back() == rmse(severed.terminal().flows.p_e, sever_run(Model::CNM).terminal().flows.p_e));
}

TEST_CASE("traces from different grids are rejected") {
  const CascadeTrace a = sever_run(Model::DCM);
  const Grid two = testing::two_bus();
  const CascadeTrace b = run(two, Eigen::VectorXd::Zero(1), Model::DCM, default_params(two));
  CHECK_THROWS_AS(compare_traces({a, b}), ValidationError);
  CHECK_THROWS_AS(compare_traces({a}), std::invalid_argument);
}

TEST_CASE("flow sign treats tiny values as zero") {
  CHECK(flow_sign(1e-12) == 0);
  CHECK(flow_sign(-0.0) == 0);
  CHECK(flow_sign(-1e-3) == -1);
  CHECK(flow_sign(2.0) == 1);
}
