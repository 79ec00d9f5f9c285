#include "vrlab/harness/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vrlab/errors.hpp"

namespace vrlab {

namespace fs = std::filesystem;

int CsvTable::column_index(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("csv: cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(f, line)) throw ConfigError("csv: empty file " + path);
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.columns.push_back(cell);
  }
  const size_t ncol = t.columns.size();
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::optional<double>> row;
    std::string event;
    size_t start = 0, col = 0;
    while (col < ncol) {
      size_t end = line.find(',', start);
      std::string cell = end == std::string::npos ? line.substr(start) : line.substr(start, end - start);
      if (col == ncol - 1) {
        event = cell;
      } else if (!cell.empty()) {
        row.push_back(std::stod(cell));
      } else {
        row.push_back(std::nullopt);
      }
      start = end == std::string::npos ? line.size() : end + 1;
      col += 1;
      if (end == std::string::npos) break;
    }
    row.resize(ncol - 1);
    t.rows.push_back(std::move(row));
    t.events.push_back(std::move(event));
  }
  return t;
}

namespace {

std::string value_column(const PlotSpec& spec) {
  if (spec.kind == "return") return "episode_return";
  if (spec.kind == "fau") {
    if (spec.module != "encoder" && spec.module != "actor" && spec.module != "critic")
      throw ConfigError("plot: module must be encoder|actor|critic");
    return "phi_" + spec.module;
  }
  throw ConfigError("plot: kind must be return or fau");
}

std::string arm_of(const std::string& csv_path) {
  const fs::path p(csv_path);
  auto parent = p.parent_path();           // .../arm/seedN
  auto grand = parent.parent_path();       // .../arm
  if (grand.filename().empty()) return "all";
  return grand.filename().string();
}

}  // namespace

std::vector<ArmSeries> aggregate_for_plot(const std::vector<std::string>& csv_paths,
                                          const PlotSpec& spec) {
  if (csv_paths.empty()) throw ConfigError("plot: no csv files given");
  const std::string col = value_column(spec);

  // arm -> per-seed series of (step, value)
  std::map<std::string, std::vector<std::map<int64_t, double>>> by_arm;
  std::vector<std::string> offenders;
  for (const auto& path : csv_paths) {
    CsvTable t = read_csv(path);
    const int ci = t.column_index(col);
    const int si = t.column_index("step");
    if (ci < 0 || si < 0) {
      offenders.push_back(path);
      continue;
    }
    std::map<int64_t, double> series;
    for (const auto& row : t.rows) {
      if (row[si] && row[ci]) series[static_cast<int64_t>(*row[si])] = *row[ci];
    }
    by_arm[arm_of(path)].push_back(std::move(series));
  }
  if (!offenders.empty()) {
    std::string msg = "plot: missing column '" + col + "' in:";
    for (const auto& o : offenders) msg += " " + o;
    throw ConfigError(msg);
  }

  std::vector<ArmSeries> out;
  for (auto& [arm, seeds] : by_arm) {
    // steps present in every seed of the arm
    std::map<int64_t, int> counts;
    for (const auto& s : seeds)
      for (const auto& [step, _] : s) counts[step] += 1;
    ArmSeries series;
    series.arm = arm;
    for (const auto& [step, n] : counts) {
      if (n != static_cast<int>(seeds.size())) continue;
      double sum = 0.0, sq = 0.0;
      for (const auto& s : seeds) {
        const double v = s.at(step);
        sum += v;
        sq += v * v;
      }
      const double mean = sum / seeds.size();
      const double var = std::max(0.0, sq / seeds.size() - mean * mean);
      series.steps.push_back(step);
      series.mean.push_back(mean);
      series.stddev.push_back(std::sqrt(var));
    }
    out.push_back(std::move(series));
  }
  return out;
}

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fnum(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Round up/down to a "nice" tick spacing.
double nice_step(double span, int target_ticks) {
  if (span <= 0) return 1.0;
  const double raw = span / target_ticks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

std::string axis_label(double v) {
  char buf[40];
  if (std::fabs(v) >= 1000 && std::fabs(std::round(v) - v) < 1e-9)
    std::snprintf(buf, sizeof(buf), "%g", v);
  else
    std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

std::string render_svg(const std::vector<ArmSeries>& series, const PlotSpec& spec) {
  constexpr double W = 860, H = 480;
  constexpr double ML = 70, MR = 180, MT = 40, MB = 50;
  const double plot_w = W - ML - MR, plot_h = H - MT - MB;

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series) {
    for (size_t i = 0; i < s.steps.size(); ++i) {
      const double x = static_cast<double>(s.steps[i]);
      const double lo = s.mean[i] - s.stddev[i];
      const double hi = s.mean[i] + s.stddev[i];
      if (first) {
        xmin = xmax = x;
        ymin = lo;
        ymax = hi;
        first = false;
      } else {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, lo);
        ymax = std::max(ymax, hi);
      }
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) {
    ymax += 0.5;
    ymin -= 0.5;
  }
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto sx = [&](double x) { return ML + (x - xmin) / (xmax - xmin) * plot_w; };
  auto sy = [&](double y) { return MT + (1.0 - (y - ymin) / (ymax - ymin)) * plot_h; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  o << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  if (!spec.title.empty())
    o << "<text x=\"" << ML << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">"
      << spec.title << "</text>\n";

  // axes + ticks
  o << "<g stroke=\"#333\" stroke-width=\"1\">\n";
  o << "<line x1=\"" << ML << "\" y1=\"" << MT + plot_h << "\" x2=\"" << ML + plot_w << "\" y2=\""
    << MT + plot_h << "\"/>\n";
  o << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\"" << MT + plot_h
    << "\"/>\n</g>\n";
  o << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  const double xstep = nice_step(xmax - xmin, 6);
  for (double x = std::ceil(xmin / xstep) * xstep; x <= xmax + 1e-9; x += xstep) {
    o << "<line x1=\"" << fnum(sx(x)) << "\" y1=\"" << fnum(MT + plot_h) << "\" x2=\"" << fnum(sx(x))
      << "\" y2=\"" << fnum(MT + plot_h + 4) << "\" stroke=\"#333\"/>\n";
    o << "<text x=\"" << fnum(sx(x)) << "\" y=\"" << fnum(MT + plot_h + 16)
      << "\" text-anchor=\"middle\">" << axis_label(x) << "</text>\n";
  }
  const double ystep = nice_step(ymax - ymin, 5);
  for (double y = std::ceil(ymin / ystep) * ystep; y <= ymax + 1e-9; y += ystep) {
    o << "<line x1=\"" << fnum(ML - 4) << "\" y1=\"" << fnum(sy(y)) << "\" x2=\"" << fnum(ML)
      << "\" y2=\"" << fnum(sy(y)) << "\" stroke=\"#333\"/>\n";
    o << "<text x=\"" << fnum(ML - 8) << "\" y=\"" << fnum(sy(y) + 4)
      << "\" text-anchor=\"end\">" << axis_label(y) << "</text>\n";
  }
  o << "<text x=\"" << fnum(ML + plot_w / 2) << "\" y=\"" << fnum(H - 12)
    << "\" text-anchor=\"middle\">env step</text>\n";
  o << "</g>\n";

  // bands then lines, one color per arm
  int color = 0;
  for (const auto& s : series) {
    const char* c = kPalette[color % 8];
    if (s.steps.size() >= 2) {
      std::ostringstream pts;
      for (size_t i = 0; i < s.steps.size(); ++i)
        pts << fnum(sx(static_cast<double>(s.steps[i]))) << "," << fnum(sy(s.mean[i] + s.stddev[i]))
            << " ";
      for (size_t i = s.steps.size(); i-- > 0;)
        pts << fnum(sx(static_cast<double>(s.steps[i]))) << "," << fnum(sy(s.mean[i] - s.stddev[i]))
            << " ";
      o << "<polygon points=\"" << pts.str() << "\" fill=\"" << c
        << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
    }
    std::ostringstream pts;
    for (size_t i = 0; i < s.steps.size(); ++i)
      pts << fnum(sx(static_cast<double>(s.steps[i]))) << "," << fnum(sy(s.mean[i])) << " ";
    o << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << c
      << "\" stroke-width=\"1.8\"/>\n";
    color += 1;
  }

  // legend
  o << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  color = 0;
  double ly = MT + 10;
  for (const auto& s : series) {
    const char* c = kPalette[color % 8];
    o << "<line x1=\"" << fnum(ML + plot_w + 12) << "\" y1=\"" << fnum(ly) << "\" x2=\""
      << fnum(ML + plot_w + 36) << "\" y2=\"" << fnum(ly) << "\" stroke=\"" << c
      << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << fnum(ML + plot_w + 42) << "\" y=\"" << fnum(ly + 4) << "\">" << s.arm
      << "</text>\n";
    ly += 18;
    color += 1;
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

void plot_csvs(const std::vector<std::string>& csv_paths, const PlotSpec& spec) {
  auto series = aggregate_for_plot(csv_paths, spec);
  std::ofstream f(spec.out_path, std::ios::binary);
  if (!f) throw RunAborted("plot: cannot open " + spec.out_path);
  f << render_svg(series, spec);
}

std::vector<std::string> find_metric_files(const std::string& pattern) {
  std::vector<std::string> out;
  if (pattern.find('*') == std::string::npos) {
    fs::path p(pattern);
    if (fs::is_directory(p)) {
      for (const auto& e : fs::recursive_directory_iterator(p))
        if (e.is_regular_file() && e.path().filename() == "metrics.csv")
          out.push_back(e.path().string());
    } else if (fs::is_regular_file(p)) {
      out.push_back(p.string());
    }
  } else {
    // one-level '*' glob: expand against the parent directory tree
    const fs::path p(pattern);
    const fs::path parent = p.parent_path().empty() ? fs::path(".") : p.parent_path();
    // match each component with '*' treated as "any run of characters"
    auto match = [](const std::string& pat, const std::string& text) {
      // iterative wildcard match supporting '*' only
      size_t pi = 0, ti = 0, star = std::string::npos, mark = 0;
      while (ti < text.size()) {
        if (pi < pat.size() && (pat[pi] == text[ti])) {
          ++pi;
          ++ti;
        } else if (pi < pat.size() && pat[pi] == '*') {
          star = pi++;
          mark = ti;
        } else if (star != std::string::npos) {
          pi = star + 1;
          ti = ++mark;
        } else {
          return false;
        }
      }
      while (pi < pat.size() && pat[pi] == '*') ++pi;
      return pi == pat.size();
    };
    std::error_code ec;
    for (fs::recursive_directory_iterator it(fs::path("."), ec), end; it != end && !ec; ++it) {
      if (!it->is_regular_file()) continue;
      const std::string path = it->path().lexically_normal().string();
      std::string norm = fs::path(pattern).lexically_normal().string();
      if (match(norm, path) || match(norm, it->path().string())) out.push_back(it->path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace vrlab
