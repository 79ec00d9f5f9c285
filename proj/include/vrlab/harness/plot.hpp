#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vrlab {

// Column-oriented view of one metrics CSV; missing cells stay unset.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<double>>> rows;  // numeric cells
  std::vector<std::string> events;                       // the trailing event column

  int column_index(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

// Mean and population std across seeds, inner-joined on the step column over
// rows where the plotted value is present.
struct ArmSeries {
  std::string arm;
  std::vector<int64_t> steps;
  std::vector<double> mean;
  std::vector<double> stddev;
};

struct PlotSpec {
  std::string kind = "return";   // "return" or "fau"
  std::string module = "critic"; // for fau: encoder | actor | critic
  std::string out_path = "plot.svg";
  std::string title;
};

// Groups metrics.csv paths by arm (the grandparent directory name, i.e.
// <arm>/seed<k>/metrics.csv) and aggregates the plotted column per arm.
std::vector<ArmSeries> aggregate_for_plot(const std::vector<std::string>& csv_paths,
                                          const PlotSpec& spec);

// Deterministic SVG: mean line per arm plus a translucent +/- std band.
void plot_csvs(const std::vector<std::string>& csv_paths, const PlotSpec& spec);

// Expands a path or '*' glob into the matching metrics.csv files. A directory
// argument finds every metrics.csv beneath it.
std::vector<std::string> find_metric_files(const std::string& pattern);

std::string render_svg(const std::vector<ArmSeries>& series, const PlotSpec& spec);

}  // namespace vrlab
