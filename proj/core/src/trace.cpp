#include "homeostat/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "homeostat/error.hpp"

namespace homeostat {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::analytic: return "analytic";
    case Provenance::simulated: return "simulated";
    case Provenance::kinetics: return "kinetics";
  }
  return "unknown";
}

const std::vector<double>& OccupancyTrace::series(const NodeId& node) const {
  const auto it = std::find(nodes.begin(), nodes.end(), node);
  if (it == nodes.end()) throw InvalidArgument("trace has no node " + node.to_string());
  return mean.at(static_cast<std::size_t>(it - nodes.begin()));
}

namespace {

std::vector<double> interpolate(const std::vector<double>& x, const std::vector<double>& y,
                                const std::vector<double>& at) {
  std::vector<double> out;
  out.reserve(at.size());
  for (double t : at) {
    if (t <= x.front()) {
      out.push_back(y.front());
      continue;
    }
    if (t >= x.back()) {
      out.push_back(y.back());
      continue;
    }
    const auto hi = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), t) - x.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - x[lo]) / (x[hi] - x[lo]);
    out.push_back((1.0 - w) * y[lo] + w * y[hi]);
  }
  return out;
}

}  // namespace

OccupancyTrace resample(const OccupancyTrace& trace, const std::vector<double>& times) {
  if (trace.times.empty()) throw InvalidArgument("cannot resample an empty trace");
  OccupancyTrace out = trace;
  out.times = times;
  auto remap = [&](std::vector<std::vector<double>>& field) {
    for (auto& s : field) s = interpolate(trace.times, s, times);
  };
  remap(out.mean);
  remap(out.variance);
  remap(out.standard_error);
  return out;
}

std::string format_number(double x) {
  if (x == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string column_name(const NodeId& node) {
  return "node_" + std::to_string(node.compartment) + "_" + std::to_string(node.type);
}

TraceTable to_table(const OccupancyTrace& trace, TraceField field) {
  TraceTable table;
  table.metadata = trace.metadata;
  table.metadata.insert(table.metadata.begin(), {"provenance", to_string(trace.provenance)});
  for (const auto& n : trace.nodes) table.columns.push_back(column_name(n));
  table.times = trace.times;
  table.values = field == TraceField::mean ? trace.mean : trace.standard_error;
  if (table.values.size() != table.columns.size()) {
    throw InvalidArgument("trace has no values for the requested field");
  }
  return table;
}

void write_csv(std::ostream& out, const OccupancyTrace& trace, TraceField field) {
  const TraceTable table = to_table(trace, field);
  for (const auto& [key, value] : table.metadata) out << "# " << key << '=' << value << '\n';
  out << 't';
  for (const auto& c : table.columns) out << ',' << c;
  out << '\n';
  for (std::size_t m = 0; m < table.times.size(); ++m) {
    out << format_number(table.times[m]);
    for (const auto& s : table.values) out << ',' << format_number(s[m]);
    out << '\n';
  }
}

TraceTable read_csv(std::istream& in) {
  TraceTable table;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto eq = line.find('=');
      std::string key = line.substr(1, eq == std::string::npos ? std::string::npos : eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      table.metadata.emplace_back(key, eq == std::string::npos ? "" : line.substr(eq + 1));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (!have_header) {
      if (cells.empty() || cells.front() != "t") {
        throw ConfigError("trace CSV line " + std::to_string(line_no) + ": header must start with 't'");
      }
      table.columns.assign(cells.begin() + 1, cells.end());
      table.values.assign(table.columns.size(), {});
      have_header = true;
      continue;
    }
    if (cells.size() != table.columns.size() + 1) {
      throw ConfigError("trace CSV line " + std::to_string(line_no) + ": expected " +
                        std::to_string(table.columns.size() + 1) + " cells");
    }
    try {
      table.times.push_back(std::stod(cells[0]));
      for (std::size_t c = 0; c < table.columns.size(); ++c) {
        table.values[c].push_back(std::stod(cells[c + 1]));
      }
    } catch (const std::logic_error&) {
      throw ConfigError("trace CSV line " + std::to_string(line_no) + ": malformed number");
    }
  }
  if (!have_header) throw ConfigError("trace CSV has no header");
  return table;
}

AgreementStats compare_traces(const TraceTable& reference, const TraceTable& candidate,
                              const TraceTable* candidate_se, double k) {
  auto same_shape = [](const TraceTable& a, const TraceTable& b) {
    if (a.columns != b.columns || a.times.size() != b.times.size()) return false;
    for (std::size_t m = 0; m < a.times.size(); ++m) {
      if (std::abs(a.times[m] - b.times[m]) > 1e-9 * std::max(1.0, std::abs(a.times[m]))) {
        return false;
      }
    }
    return true;
  };
  if (!same_shape(reference, candidate) || (candidate_se && !same_shape(candidate, *candidate_se))) {
    throw InvalidArgument("traces differ in columns or time grid");
  }
  AgreementStats stats;
  for (std::size_t c = 0; c < reference.columns.size(); ++c) {
    double peak = 0.0;
    double worst = 0.0;
    for (std::size_t m = 0; m < reference.times.size(); ++m) {
      const double diff = std::abs(candidate.values[c][m] - reference.values[c][m]);
      peak = std::max(peak, std::abs(reference.values[c][m]));
      worst = std::max(worst, diff);
      ++stats.cells;
      if (candidate_se) {
        const double se = candidate_se->values[c][m];
        if ((se > 0.0 && diff <= k * se) || (se == 0.0 && diff <= 1e-12)) ++stats.within;
      }
    }
    stats.max_abs_difference = std::max(stats.max_abs_difference, worst);
    if (peak > 0.0) {
      stats.max_relative_difference = std::max(stats.max_relative_difference, worst / peak);
    } else if (worst > 0.0) {
      stats.max_relative_difference = std::max(stats.max_relative_difference, worst);
    }
  }
  stats.fraction = stats.cells ? static_cast<double>(stats.within) / static_cast<double>(stats.cells) : 0.0;
  return stats;
}

}  // namespace homeostat
