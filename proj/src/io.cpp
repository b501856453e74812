#include "gridcascade/io.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "gridcascade/errors.hpp"
#include "hash.hpp"

namespace gridcascade {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json to_json_array(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from(const json& j, const std::string& field) {
  if (!j.is_array()) throw ParseError(field, "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].is_null()) {
      v(static_cast<Eigen::Index>(i)) = std::numeric_limits<double>::quiet_NaN();
    } else if (j[i].is_number()) {
      v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    } else {
      throw ParseError(field + "[" + std::to_string(i) + "]", "expected a number");
    }
  }
  return v;
}

const json& field(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(where.empty() ? key : where + "." + key, "missing field");
  return *it;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

json flows_to_json(const FlowSolution& f) {
  json j;
  j["p_e"] = to_json_array(f.p_e);
  if (f.theta) j["theta"] = to_json_array(*f.theta);
  if (f.v_mag) j["v_mag"] = to_json_array(*f.v_mag);
  if (f.q_e) j["q_e"] = to_json_array(*f.q_e);
  j["converged"] = f.converged;
  j["mismatch"] = f.mismatch;
  if (!f.diagnostic.empty()) j["diagnostic"] = f.diagnostic;
  return j;
}

FlowSolution flows_from_json(const json& j, const std::string& where) {
  FlowSolution f;
  f.p_e = vector_from(field(j, "p_e", where), where + ".p_e");
  if (j.contains("theta")) f.theta = vector_from(j["theta"], where + ".theta");
  if (j.contains("v_mag")) f.v_mag = vector_from(j["v_mag"], where + ".v_mag");
  if (j.contains("q_e")) f.q_e = vector_from(j["q_e"], where + ".q_e");
  f.converged = j.value("converged", true);
  f.mismatch = j.value("mismatch", 0.0);
  f.diagnostic = j.value("diagnostic", std::string());
  return f;
}

json trace_json(const CascadeTrace& trace) {
  json j;
  j["format"] = "gridcascade-trace";
  j["version"] = kFormatVersion;
  j["model"] = to_string(trace.model);
  j["case"] = {{"name", trace.case_name}, {"fingerprint", trace.grid_fingerprint}};
  j["params"] = {{"sigma", trace.sigma},
                 {"epsilon", trace.epsilon},
                 {"m", trace.m},
                 {"connectivity_tol", trace.connectivity_tol},
                 {"capacities", to_json_array(trace.capacities)}};
  j["disturbance"] = to_json_array(trace.disturbance);
  j["termination"] = to_string(trace.termination);
  json steps = json::array();
  for (const CascadeStep& s : trace.steps) {
    steps.push_back({{"step", s.label()},
                     {"k", s.k},
                     {"state", to_json_array(s.state)},
                     {"flows", flows_to_json(s.flows)},
                     {"tripped", s.tripped}});
  }
  j["steps"] = std::move(steps);
  j["final_state"] = to_json_array(trace.final_state);
  return j;
}

}  // namespace

std::string trace_to_json(const CascadeTrace& trace) { return trace_json(trace).dump(2) + "\n"; }

CascadeTrace trace_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("trace", std::string("invalid JSON: ") + e.what());
  }
  if (j.value("format", std::string()) != "gridcascade-trace") throw ParseError("format", "not a gridcascade trace");

  CascadeTrace t;
  try {
    t.model = parse_model(field(j, "model", "").get<std::string>());
    const json& c = field(j, "case", "");
    t.case_name = c.value("name", std::string());
    t.grid_fingerprint = field(c, "fingerprint", "case").get<std::string>();
    const json& p = field(j, "params", "");
    t.sigma = field(p, "sigma", "params").get<double>();
    t.epsilon = field(p, "epsilon", "params").get<double>();
    t.m = field(p, "m", "params").get<int>();
    t.connectivity_tol = p.value("connectivity_tol", kDefaultConnectivityTol);
    t.capacities = vector_from(field(p, "capacities", "params"), "params.capacities");
    t.disturbance = vector_from(field(j, "disturbance", ""), "disturbance");
    const std::string term = field(j, "termination", "").get<std::string>();
    if (term == "fixpoint") {
      t.termination = Termination::fixpoint;
    } else if (term == "max_steps") {
      t.termination = Termination::max_steps;
    } else {
      throw ParseError("termination", "unknown value '" + term + "'");
    }
    const json& steps = field(j, "steps", "");
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const std::string where = "steps[" + std::to_string(i) + "]";
      CascadeStep s;
      s.k = field(steps[i], "k", where).get<int>();
      s.state = vector_from(field(steps[i], "state", where), where + ".state");
      s.flows = flows_from_json(field(steps[i], "flows", where), where + ".flows");
      s.tripped = steps[i].value("tripped", std::vector<int>{});
      t.steps.push_back(std::move(s));
    }
    t.final_state = vector_from(field(j, "final_state", ""), "final_state");
  } catch (const json::type_error& e) {
    throw ParseError("trace", std::string("wrong value type: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError("model", e.what());
  }
  if (t.steps.empty()) throw ParseError("steps", "trace has no steps");
  return t;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string() + ": file not found");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

CascadeTrace read_trace_file(const std::filesystem::path& path) { return trace_from_json(read_text_file(path)); }

std::string trace_to_csv(const CascadeTrace& trace) {
  std::ostringstream os;
  os << "step,branch_id,state,flow\n";
  for (const CascadeStep& s : trace.steps)
    for (Eigen::Index i = 0; i < s.state.size(); ++i)
      os << s.label() << ',' << i + 1 << ',' << fmt(s.state(i)) << ',' << fmt(s.flows.p_e(i)) << '\n';
  return os.str();
}

std::string trace_to_dot(const CascadeTrace& trace, const Grid& grid, std::size_t step) {
  if (step >= trace.steps.size()) throw std::out_of_range("trace has no step index " + std::to_string(step));
  const CascadeStep& s = trace.steps[step];
  if (s.state.size() != grid.branch_count()) throw DimensionError("trace does not match the grid");

  std::ostringstream os;
  os << "digraph \"" << grid.name() << " " << to_string(trace.model) << " step " << s.label() << "\" {\n";
  os << "  node [style=filled];\n";
  for (const Bus& b : grid.buses()) {
    const char* color = b.kind == BusKind::slack ? "gold" : b.kind == BusKind::generator ? "lightgreen" : "lightblue";
    os << "  " << b.id << " [label=\"" << b.id << "\", fillcolor=" << color << "];\n";
  }
  for (Eigen::Index k = 0; k < grid.branch_count(); ++k) {
    if (!(s.state(k) > trace.connectivity_tol)) continue;
    const Branch& br = grid.branches()[static_cast<std::size_t>(k)];
    const double p = s.flows.p_e(k);
    const bool forward = p >= 0.0;
    os << "  " << (forward ? br.from : br.to) << " -> " << (forward ? br.to : br.from) << " [label=\"" << br.id
       << ": " << fmt(std::abs(p)) << "\"";
    if (flow_sign(p) == 0) os << ", arrowhead=none";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

std::string solution_to_json(const DisturbanceSolution& sol, const OptProblem& prob) {
  json j;
  j["format"] = "gridcascade-disturbance";
  j["version"] = kFormatVersion;
  j["model"] = to_string(prob.model);
  j["targets"] = prob.targets;
  j["epsilon"] = prob.epsilon;
  j["m"] = prob.m;
  j["u0"] = to_json_array(sol.u0);
  j["converged"] = sol.converged;
  j["residual_norm"] = sol.residual_norm;
  j["iterations"] = sol.iterations;
  j["start"] = sol.start;
  j["cost"] = sol.cost;
  j["positive_increment"] = sol.positive_increment;
  j["residual_history"] = sol.residual_history;
  j["trace"] = trace_json(sol.trace);
  return j.dump(2) + "\n";
}

std::string report_to_json(const ComparisonReport& report) {
  json j;
  j["format"] = "gridcascade-report";
  j["version"] = kFormatVersion;
  j["traces"] = report.labels;
  j["steps"] = report.steps;
  j["branches"] = report.branches;
  json pairs = json::array();
  for (const PairComparison& p : report.pairs)
    pairs.push_back({{"a", p.a}, {"b", p.b}, {"rmse", p.rmse}, {"sign_agreement", p.sign_agreement}});
  j["pairs"] = std::move(pairs);
  j["peak_step"] = report.peak_step();
  j["notes"] = report.notes;
  return j.dump(2) + "\n";
}

std::string report_to_csv(const ComparisonReport& report) {
  std::ostringstream os;
  os << "pair,step,rmse,sign_agreement\n";
  for (const PairComparison& p : report.pairs)
    for (std::size_t s = 0; s < p.rmse.size(); ++s)
      os << p.a << '-' << p.b << ',' << s + 1 << ',' << fmt(p.rmse[s]) << ',' << p.sign_agreement[s] << '\n';
  return os.str();
}

std::string report_plot_data(const ComparisonReport& report) {
  std::ostringstream os;
  os << "# step";
  for (const PairComparison& p : report.pairs) os << ' ' << p.a << '-' << p.b;
  os << '\n';
  for (int s = 0; s < report.steps; ++s) {
    os << s + 1;
    for (const PairComparison& p : report.pairs) os << ' ' << fmt(p.rmse[static_cast<std::size_t>(s)]);
    os << '\n';
  }
  return os.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

ArtifactWriter::ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

void ArtifactWriter::write(const std::string& relative, std::string_view content) {
  write_file_atomic(dir_ / relative, content);
  Entry e{relative, detail::sha256_hex(content), content.size()};
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& x) { return x.path == relative; });
  if (it != entries_.end()) {
    *it = std::move(e);
  } else {
    entries_.push_back(std::move(e));
  }
}

std::filesystem::path ArtifactWriter::finish() {
  std::vector<Entry> sorted = entries_;
  std::sort(sorted.begin(), sorted.end(), [](const Entry& a, const Entry& b) { return a.path < b.path; });
  json j;
  j["format"] = "gridcascade-manifest";
  j["version"] = kFormatVersion;
  json arts = json::array();
  for (const Entry& e : sorted) arts.push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  j["artifacts"] = std::move(arts);
  const std::filesystem::path out = dir_ / "manifest.json";
  write_file_atomic(out, j.dump(2) + "\n");
  return out;
}

}  // namespace gridcascade
