#include <algorithm>
#include <charconv>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "gridcascade/cli.hpp"
#include "gridcascade/compare.hpp"
#include "gridcascade/disturbance.hpp"
#include "gridcascade/errors.hpp"
#include "gridcascade/io.hpp"
#include "log.hpp"

namespace gridcascade::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string case_spec = "ieee9";
  double sigma = 5e4;
  int m = 9;
  std::string capacities;
  std::string out;
  std::vector<std::string> formats{"json", "csv", "dot"};
};

struct RunOptions {
  std::vector<std::string> models{"dcm"};
  std::string disturb;
  std::string u0;
  double epsilon = 1e-4;
};

struct IdentifyArgs {
  std::string model = "dcm";
  std::vector<int> targets;
  double epsilon = 0.0;  // 0 = model default
  std::vector<double> guess;
  int max_iter = 100;
};

struct CompareOptions {
  std::vector<std::string> traces;
};

struct ReproduceOptions {
  std::string drive = "sever";
  int target = 2;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double parse_double(std::string_view text, const std::string& what) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
    throw UsageError("invalid number '" + std::string(text) + "' in " + what);
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) parts.push_back(item);
  return parts;
}

Eigen::VectorXd parse_vector(const std::string& text, Eigen::Index n, const std::string& what) {
  const std::vector<std::string> parts = split(text, ',');
  if (static_cast<Eigen::Index>(parts.size()) != n)
    throw UsageError(what + " has " + std::to_string(parts.size()) + " entries, the case has " + std::to_string(n) +
                     " branches");
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = parse_double(parts[static_cast<std::size_t>(i)], what);
  return v;
}

Eigen::VectorXd parse_disturbance(const Grid& grid, const RunOptions& opts) {
  if (!opts.u0.empty()) {
    if (!opts.disturb.empty()) throw UsageError("--disturb and --u0 are mutually exclusive");
    return parse_vector(opts.u0, grid.branch_count(), "--u0");
  }
  std::vector<std::pair<int, double>> entries;
  for (const std::string& item : split(opts.disturb, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("disturbance entry '" + item + "' is not of the form ID=VALUE");
    int id = 0;
    const std::string id_text = item.substr(0, eq);
    const auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (ec != std::errc() || ptr != id_text.data() + id_text.size())
      throw UsageError("invalid branch id '" + id_text + "' in --disturb");
    if (id < 1 || id > grid.branch_count()) throw UsageError("--disturb names unknown branch " + id_text);
    entries.emplace_back(id, parse_double(item.substr(eq + 1), "--disturb"));
  }
  return make_disturbance(grid, entries);
}

CascadeParams cascade_params(const Grid& grid, const CommonOptions& common) {
  CascadeParams p = default_params(grid);
  p.trip.sigma = common.sigma;
  p.m = common.m;
  if (!common.capacities.empty()) p.trip.capacities = parse_vector(common.capacities, grid.branch_count(), "--capacities");
  try {
    for (const std::string& w : p.trip.validate()) log::warn("{}", w);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return p;
}

std::string model_key(Model m) { return lower(std::string(to_string(m))); }

bool wants(const CommonOptions& common, const std::string& format) {
  return std::find(common.formats.begin(), common.formats.end(), format) != common.formats.end();
}

void export_trace(ArtifactWriter& w, const CommonOptions& common, const CascadeTrace& trace, const Grid& grid,
                  const std::string& stem) {
  if (wants(common, "json")) w.write(stem + ".json", trace_to_json(trace));
  if (wants(common, "csv")) w.write(stem + ".csv", trace_to_csv(trace));
  if (wants(common, "dot"))
    for (std::size_t s = 0; s < trace.steps.size(); ++s)
      w.write("dot/" + stem + "-step" + std::to_string(s + 1) + ".dot", trace_to_dot(trace, grid, s));
}

std::string id_list(const std::vector<int>& ids) {
  if (ids.empty()) return "-";
  std::string s;
  for (int id : ids) s += (s.empty() ? "" : ",") + std::to_string(id);
  return s;
}

void print_trace(std::ostream& out, const CascadeTrace& trace) {
  out << to_string(trace.model) << " cascade: " << trace.steps.size() << " step(s), " << to_string(trace.termination)
      << "\n";
  for (const CascadeStep& s : trace.steps) {
    out << "  step " << s.label() << ": tripped " << id_list(s.tripped);
    if (!s.flows.converged) out << "  [flow solver did not converge, mismatch " << s.flows.mismatch << "]";
    out << "\n";
  }
  out << "  connected at end: " << id_list(trace.connected_branches())
      << ", max |flow| at end: " << trace.terminal().flows.p_e.cwiseAbs().maxCoeff() << "\n";
}

void print_solution(std::ostream& out, const DisturbanceSolution& sol, const OptProblem& prob) {
  out << to_string(prob.model) << " disturbance on branch(es) " << id_list(prob.targets) << ":";
  for (int id : prob.targets) out << " u0[" << id << "] = " << sol.u0(prob.grid->branch_index(id));
  out << "\n  residual " << sol.residual_norm << " after " << sol.iterations << " iteration(s), cost " << sol.cost
      << (sol.converged ? "" : "  [not converged]") << (sol.positive_increment ? "  [positive increment]" : "")
      << "\n";
}

void print_report(std::ostream& out, const ComparisonReport& report) {
  out << "RMSE of branch flows per step\n  step";
  for (const PairComparison& p : report.pairs) out << std::setw(14) << (p.a + "-" + p.b);
  out << "\n";
  for (int s = 0; s < report.steps; ++s) {
    out << "  " << std::setw(4) << s + 1;
    for (const PairComparison& p : report.pairs)
      out << std::setw(14) << std::fixed << std::setprecision(4) << p.rmse[static_cast<std::size_t>(s)];
    out << "\n";
  }
  out.unsetf(std::ios::floatfield);
  out << std::setprecision(6) << "  peak at step " << report.peak_step() << "\n";
  for (const std::string& n : report.notes) out << "  note: " << n << "\n";
}

void finish_artifacts(std::ostream& out, ArtifactWriter& w) {
  const auto manifest = w.finish();
  out << "wrote " << w.entries().size() << " artifact(s) and " << manifest.string() << "\n";
}

int cmd_run(const CommonOptions& common, const RunOptions& opts, std::ostream& out) {
  const Grid grid = resolve_case(common.case_spec);
  CascadeParams params = cascade_params(grid, common);
  params.epsilon = opts.epsilon;
  const Eigen::VectorXd u0 = parse_disturbance(grid, opts);

  std::set<Model> models;
  for (const std::string& m : opts.models) {
    try {
      models.insert(parse_model(m));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  std::optional<ArtifactWriter> writer;
  if (!common.out.empty()) writer.emplace(common.out);

  int status = ok;
  for (Model model : models) {
    CascadeTrace trace;
    try {
      trace = run(grid, u0, model, params);
    } catch (const CascadeFailure& e) {
      out << "error: " << e.what() << "\n";
      trace = e.partial_trace();
      status = failure;
    }
    if (!trace.steps.empty()) print_trace(out, trace);
    if (writer && !trace.steps.empty()) export_trace(*writer, common, trace, grid, "trace-" + model_key(model));
  }
  if (writer) finish_artifacts(out, *writer);
  return status;
}

OptProblem build_problem(const Grid& grid, const CommonOptions& common, Model model, std::vector<int> targets,
                         double epsilon) {
  if (model == Model::ACM)
    throw UsageError("identification is not available for the ACM; identify under DCM and drive the ACM with the result");
  if (targets.empty()) throw UsageError("at least one --target branch is required");
  for (int id : targets)
    if (id < 1 || id > grid.branch_count()) throw UsageError("unknown target branch " + std::to_string(id));
  OptProblem prob = make_problem(grid, model, std::move(targets));
  const CascadeParams params = cascade_params(grid, common);
  prob.trip = params.trip;
  prob.m = common.m;
  if (epsilon > 0.0) prob.epsilon = epsilon;
  if (prob.m < 2) throw UsageError("--m must be at least 2 for identification");
  return prob;
}

struct Identified {
  DisturbanceSolution sol;
  bool converged = false;
};

Identified solve(const OptProblem& prob, const Eigen::VectorXd& guess, int max_iter) {
  gridcascade::IdentifyOptions io;
  io.max_iter = max_iter;
  try {
    return {identify(prob, guess, io), true};
  } catch (const IdentifyFailure& e) {
    return {e.best_iterate(), false};
  }
}

int cmd_identify(const CommonOptions& common, const IdentifyArgs& opts, std::ostream& out) {
  Model model;
  try {
    model = parse_model(opts.model);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Grid grid = resolve_case(common.case_spec);
  const OptProblem prob = build_problem(grid, common, model, opts.targets, opts.epsilon);

  Eigen::VectorXd guess = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(prob.targets.size()));
  if (!opts.guess.empty()) {
    if (opts.guess.size() != prob.targets.size()) throw UsageError("--guess needs one value per --target");
    for (std::size_t i = 0; i < opts.guess.size(); ++i) guess(static_cast<Eigen::Index>(i)) = opts.guess[i];
  }

  const Identified r = solve(prob, guess, opts.max_iter);
  if (!r.converged) out << "error: no stationary disturbance found; reporting the best iterate\n";
  print_solution(out, r.sol, prob);
  print_trace(out, r.sol.trace);
  if (!common.out.empty()) {
    ArtifactWriter w(common.out);
    w.write("solution-" + model_key(model) + ".json", solution_to_json(r.sol, prob));
    export_trace(w, common, r.sol.trace, grid, "trace-" + model_key(model));
    finish_artifacts(out, w);
  }
  return r.converged ? ok : failure;
}

void export_report(ArtifactWriter& w, const ComparisonReport& report) {
  w.write("report.json", report_to_json(report));
  w.write("report.csv", report_to_csv(report));
  w.write("report-plot.dat", report_plot_data(report));
}

int cmd_compare(const CommonOptions& common, const CompareOptions& opts, std::ostream& out) {
  if (opts.traces.size() < 2) throw UsageError("compare needs at least two trace files");
  std::vector<CascadeTrace> traces;
  for (const std::string& path : opts.traces) traces.push_back(read_trace_file(path));
  const ComparisonReport report = compare_traces(traces);
  print_report(out, report);
  if (!common.out.empty()) {
    ArtifactWriter w(common.out);
    export_report(w, report);
    finish_artifacts(out, w);
  }
  return ok;
}

int cmd_reproduce(const CommonOptions& common, const ReproduceOptions& opts, std::ostream& out) {
  const std::string drive = lower(opts.drive);
  if (drive != "sever" && drive != "identified") throw UsageError("--drive must be 'sever' or 'identified'");
  const Grid grid = resolve_case(common.case_spec);
  const CascadeParams params = cascade_params(grid, common);
  std::optional<ArtifactWriter> writer;
  if (!common.out.empty()) writer.emplace(common.out);

  int status = ok;
  std::map<Model, Eigen::VectorXd> drives;
  for (Model model : {Model::CNM, Model::DCM}) {
    const OptProblem prob = build_problem(grid, common, model, {opts.target}, 0.0);
    const Identified r = solve(prob, Eigen::VectorXd::Zero(1), 100);
    if (!r.converged) {
      out << "error: " << to_string(model) << " identification did not converge; using the best iterate\n";
      status = failure;
    }
    print_solution(out, r.sol, prob);
    if (writer) writer->write("solution-" + model_key(model) + ".json", solution_to_json(r.sol, prob));
    drives[model] = r.sol.u0;
  }

  Eigen::VectorXd flow_drive = drives[Model::DCM];
  if (drive == "sever") {
    const BranchState y0 = initial_state(grid, Model::DCM);
    flow_drive = make_disturbance(grid, {{opts.target, -y0(grid.branch_index(opts.target))}});
  }
  out << "DCM and ACM driven by the " << (drive == "sever" ? "exact-sever" : "identified") << " disturbance "
      << flow_drive(grid.branch_index(opts.target)) << " on branch " << opts.target << "\n";

  std::vector<CascadeTrace> traces;
  for (Model model : {Model::CNM, Model::DCM, Model::ACM}) {
    CascadeParams p = params;
    p.epsilon = model == Model::CNM ? 6e-8 : 1e-4;
    const Eigen::VectorXd& u0 = model == Model::CNM ? drives[Model::CNM] : flow_drive;
    try {
      traces.push_back(run(grid, u0, model, p));
    } catch (const CascadeFailure& e) {
      out << "error: " << e.what() << "\n";
      if (e.partial_trace().steps.empty()) return failure;
      traces.push_back(e.partial_trace());
      status = failure;
    }
    print_trace(out, traces.back());
    if (writer) export_trace(*writer, common, traces.back(), grid, "trace-" + model_key(model));
  }

  const ComparisonReport report = compare_traces(traces);
  print_report(out, report);
  if (writer) {
    export_report(*writer, report);
    finish_artifacts(out, *writer);
  }
  return status;
}

void add_common(CLI::App* sub, CommonOptions& common, bool with_formats = true) {
  sub->add_option("--case", common.case_spec, "Case file (TOML) or 'ieee9' for the built-in case")
      ->capture_default_str();
  sub->add_option("--sigma", common.sigma, "Trip function steepness")->capture_default_str();
  sub->add_option("--m", common.m, "Cascade horizon (maximum number of steps)")->capture_default_str();
  sub->add_option("--capacities", common.capacities, "Comma-separated branch capacities overriding the case");
  sub->add_option("--out", common.out, "Directory for artifacts and manifest.json");
  if (with_formats)
    sub->add_option("--format", common.formats, "Trace export formats")
        ->delimiter(',')
        ->check(CLI::IsMember({"json", "csv", "dot"}))
        ->capture_default_str();
}

nlohmann::json option_schema(const CLI::App* app) {
  nlohmann::json cmd;
  cmd["name"] = app->get_name();
  cmd["description"] = app->get_description();
  nlohmann::json opts = nlohmann::json::array();
  for (const CLI::Option* o : app->get_options()) {
    if (o->get_name() == "--help") continue;
    nlohmann::json jo;
    jo["name"] = o->get_name(false, true);
    jo["description"] = o->get_description();
    jo["default"] = o->get_default_str();
    jo["required"] = o->get_required();
    jo["multiple"] = o->get_expected_max() > 1;
    jo["flag"] = o->get_type_size() == 0;
    opts.push_back(std::move(jo));
  }
  cmd["options"] = std::move(opts);
  nlohmann::json subs = nlohmann::json::array();
  for (const CLI::App* s : app->get_subcommands({})) subs.push_back(option_schema(s));
  if (!subs.empty()) cmd["subcommands"] = std::move(subs);
  return cmd;
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  log::init_from_env();

  CLI::App app{"Cascading-failure simulation and model comparison for power grids", "gridcascade"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML config file");

  CommonOptions common;
  RunOptions run_opts;
  IdentifyArgs id_opts;
  CompareOptions cmp_opts;
  ReproduceOptions rep_opts;

  CLI::App* run_cmd = app.add_subcommand("run", "Simulate a cascade under one or more network models");
  add_common(run_cmd, common);
  run_cmd->add_option("--model", run_opts.models, "Network models: cnm, dcm, acm")->delimiter(',')->capture_default_str();
  run_cmd->add_option("--disturb", run_opts.disturb, "Initial disturbance as ID=VALUE[,ID=VALUE...]");
  run_cmd->add_option("--u0", run_opts.u0, "Initial disturbance as a full comma-separated vector");
  run_cmd->add_option("--epsilon", run_opts.epsilon, "Control weight recorded with the trace")->capture_default_str();

  CLI::App* id_cmd = app.add_subcommand("identify", "Find the worst-case initial disturbance on target branches");
  add_common(id_cmd, common);
  id_cmd->add_option("--model", id_opts.model, "Network model: cnm or dcm")->capture_default_str();
  id_cmd->add_option("--target", id_opts.targets, "Target branch id (repeatable)")->required();
  id_cmd->add_option("--epsilon", id_opts.epsilon, "Control weight (default 1e-4 for DCM, 6e-8 for CNM)");
  id_cmd->add_option("--guess", id_opts.guess, "Starting value per target (default 0)");
  id_cmd->add_option("--max-iter", id_opts.max_iter, "Newton iterations per start")->capture_default_str();

  CLI::App* cmp_cmd = app.add_subcommand("compare", "Per-step RMSE between cascade traces");
  cmp_cmd->add_option("traces", cmp_opts.traces, "Trace JSON files (two or more)");
  cmp_cmd->add_option("--out", common.out, "Directory for report artifacts and manifest.json");

  CLI::App* rep_cmd = app.add_subcommand("reproduce-paper", "Identify, run all three models and compare on IEEE-9");
  add_common(rep_cmd, common);
  rep_cmd->add_option("--drive", rep_opts.drive, "DCM/ACM disturbance: sever or identified")->capture_default_str();
  rep_cmd->add_option("--target", rep_opts.target, "Target branch id")->capture_default_str();

  CLI::App* schema_cmd = app.add_subcommand("schema", "Print the command-line options as JSON");

  std::vector<std::string> argv_store{"gridcascade"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return usage;
  }

  try {
    if (*schema_cmd) {
      out << option_schema(&app).dump(2) << "\n";
      return ok;
    }
    if (*run_cmd) return cmd_run(common, run_opts, out);
    if (*id_cmd) return cmd_identify(common, id_opts, out);
    if (*cmp_cmd) return cmd_compare(common, cmp_opts, out);
    if (*rep_cmd) return cmd_reproduce(common, rep_opts, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return failure;
  }
  return usage;
}

}  // namespace gridcascade::cli
