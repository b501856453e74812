#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gridcascade/cascade.hpp"
#include "gridcascade/compare.hpp"
#include "gridcascade/disturbance.hpp"

namespace gridcascade {

std::string trace_to_json(const CascadeTrace& trace);
CascadeTrace trace_from_json(std::string_view text);
CascadeTrace read_trace_file(const std::filesystem::path& path);

/// Flat table with header "step,branch_id,state,flow".
std::string trace_to_csv(const CascadeTrace& trace);

/// Graphviz digraph of one step (0-based index). Buses are coloured by kind, edges point along the
/// flow, and branches at or below the connectivity tolerance are left out.
std::string trace_to_dot(const CascadeTrace& trace, const Grid& grid, std::size_t step);

std::string solution_to_json(const DisturbanceSolution& sol, const OptProblem& prob);

std::string report_to_json(const ComparisonReport& report);
/// Header "pair,step,rmse,sign_agreement".
std::string report_to_csv(const ComparisonReport& report);
/// Whitespace-separated columns: step followed by one RMSE column per pair.
std::string report_plot_data(const ComparisonReport& report);

std::string read_text_file(const std::filesystem::path& path);

/// Writes files under a directory through a temp file and rename, and records a SHA-256 for each.
/// `finish` writes manifest.json listing every artifact in path order.
class ArtifactWriter {
 public:
  struct Entry {
    std::string path;
    std::string sha256;
    std::size_t bytes = 0;
  };

  explicit ArtifactWriter(std::filesystem::path dir);

  void write(const std::string& relative, std::string_view content);
  std::filesystem::path finish();
  const std::vector<Entry>& entries() const { return entries_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<Entry> entries_;
};

void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace gridcascade
