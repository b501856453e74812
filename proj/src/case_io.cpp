#include <charconv>
#include <fstream>
#include <sstream>

#include <toml.hpp>

#include "gridcascade/errors.hpp"
#include "gridcascade/grid.hpp"

namespace gridcascade {

namespace {

std::string path_of(std::string_view section, std::size_t index, std::string_view key) {
  return std::string(section) + "[" + std::to_string(index) + "]." + std::string(key);
}

double number_field(const toml::table& t, std::string_view key, const std::string& path) {
  const toml::node* node = t.get(key);
  if (node == nullptr) throw ParseError(path, "missing field");
  if (auto v = node->value<double>(); v && (node->is_integer() || node->is_floating_point())) return *v;
  throw ParseError(path, "expected a number");
}

int integer_field(const toml::table& t, std::string_view key, const std::string& path) {
  const toml::node* node = t.get(key);
  if (node == nullptr) throw ParseError(path, "missing field");
  if (!node->is_integer()) throw ParseError(path, "expected an integer");
  return static_cast<int>(*node->value<std::int64_t>());
}

std::string string_field(const toml::table& t, std::string_view key, const std::string& path) {
  const toml::node* node = t.get(key);
  if (node == nullptr) throw ParseError(path, "missing field");
  if (!node->is_string()) throw ParseError(path, "expected a string");
  return *node->value<std::string>();
}

/// Per-unit field `key`, or `<alt>` given in physical units (MW / MVAr) converted by base_mva.
double pu_field(const toml::table& t, std::string_view key, std::string_view alt, double base_mva,
                const std::string& path_prefix, double fallback) {
  if (t.contains(key)) return number_field(t, key, path_prefix + std::string(key));
  if (t.contains(alt)) return number_field(t, alt, path_prefix + std::string(alt)) / base_mva;
  return fallback;
}

const toml::array* array_of_tables(const toml::table& root, std::string_view key) {
  const toml::node* node = root.get(key);
  if (node == nullptr) return nullptr;
  const toml::array* arr = node->as_array();
  if (arr == nullptr || !arr->is_array_of_tables()) throw ParseError(std::string(key), "expected [[" + std::string(key) + "]] tables");
  return arr;
}

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  // TOML floats need a decimal point or exponent.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Grid load_case(std::string_view document) {
  toml::table root;
  try {
    root = toml::parse(document);
  } catch (const toml::parse_error& e) {
    std::ostringstream where;
    where << "line " << e.source().begin.line;
    throw ParseError(where.str(), std::string(e.description()));
  }

  const toml::table* head = root["case"].as_table();
  if (head == nullptr) throw ParseError("case", "missing [case] section");
  const std::string name = head->contains("name") ? string_field(*head, "name", "case.name") : std::string("unnamed");
  const double base_mva = number_field(*head, "base_mva", "case.base_mva");
  if (!(base_mva > 0.0)) throw ParseError("case.base_mva", "must be positive");

  std::vector<Bus> buses;
  if (const toml::array* arr = array_of_tables(root, "bus")) {
    std::size_t i = 0;
    for (const toml::node& node : *arr) {
      const toml::table& t = *node.as_table();
      const std::string prefix = path_of("bus", i, "");
      Bus b;
      b.id = integer_field(t, "id", prefix + "id");
      b.kind = parse_bus_kind(string_field(t, "kind", prefix + "kind"));
      b.p = pu_field(t, "p", "p_mw", base_mva, prefix, 0.0);
      b.q = pu_field(t, "q", "q_mvar", base_mva, prefix, 0.0);
      b.v_set = t.contains("v_set") ? number_field(t, "v_set", prefix + "v_set") : 1.0;
      buses.push_back(b);
      ++i;
    }
  }
  if (buses.empty()) throw ParseError("bus", "no [[bus]] entries");

  std::vector<Branch> branches;
  if (const toml::array* arr = array_of_tables(root, "branch")) {
    std::size_t i = 0;
    for (const toml::node& node : *arr) {
      const toml::table& t = *node.as_table();
      const std::string prefix = path_of("branch", i, "");
      Branch br;
      br.id = integer_field(t, "id", prefix + "id");
      br.from = integer_field(t, "from", prefix + "from");
      br.to = integer_field(t, "to", prefix + "to");
      br.r = t.contains("r") ? number_field(t, "r", prefix + "r") : 0.0;
      br.x = number_field(t, "x", prefix + "x");
      br.capacity = number_field(t, "capacity", prefix + "capacity");
      branches.push_back(br);
      ++i;
    }
  }

  return Grid(name, base_mva, std::move(buses), std::move(branches));
}

Grid load_case_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open case file '" + path.string() + "': file not found or unreadable");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_case(ss.str());
}

std::string serialize_case(const Grid& grid) {
  std::ostringstream os;
  os << "[case]\n"
     << "name = " << quote(grid.name()) << "\n"
     << "base_mva = " << fmt_double(grid.base_mva()) << "\n";
  for (const Bus& b : grid.buses()) {
    os << "\n[[bus]]\n"
       << "id = " << b.id << "\n"
       << "kind = " << quote(to_string(b.kind)) << "\n"
       << "p = " << fmt_double(b.p) << "\n"
       << "q = " << fmt_double(b.q) << "\n"
       << "v_set = " << fmt_double(b.v_set) << "\n";
  }
  for (const Branch& br : grid.branches()) {
    os << "\n[[branch]]\n"
       << "id = " << br.id << "\n"
       << "from = " << br.from << "\n"
       << "to = " << br.to << "\n"
       << "r = " << fmt_double(br.r) << "\n"
       << "x = " << fmt_double(br.x) << "\n"
       << "capacity = " << fmt_double(br.capacity) << "\n";
  }
  return os.str();
}

Grid resolve_case(std::string_view spec) {
  if (spec == "ieee9") return ieee9();
  return load_case_file(std::filesystem::path(spec));
}

}  // namespace gridcascade
