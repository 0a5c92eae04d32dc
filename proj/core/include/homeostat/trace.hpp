#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "homeostat/network.hpp"

namespace homeostat {

enum class Provenance { analytic, simulated, kinetics };
std::string to_string(Provenance p);

// Per-node time series of mean occupancy. Values are indexed [node][time].
// Simulated traces also carry the across-replication variance and standard
// error; other provenances leave those empty.
struct OccupancyTrace {
  Provenance provenance = Provenance::analytic;
  std::vector<double> times;
  std::vector<NodeId> nodes;
  std::vector<std::vector<double>> mean;
  std::vector<std::vector<double>> variance;
  std::vector<std::vector<double>> standard_error;
  std::size_t replications = 0;
  std::vector<std::pair<std::string, std::string>> metadata;

  std::size_t node_count() const noexcept { return nodes.size(); }
  std::size_t time_count() const noexcept { return times.size(); }
  const std::vector<double>& series(const NodeId& node) const;
};

// Linear interpolation of every series onto new times (clamped at the ends).
OccupancyTrace resample(const OccupancyTrace& trace, const std::vector<double>& times);

// %.12g formatting shared by every output file.
std::string format_number(double x);
std::string column_name(const NodeId& node);

enum class TraceField { mean, standard_error };

// Wide CSV: '#'-prefixed metadata lines, then a header "t,node_<c>_<v>,...",
// then one row per time.
void write_csv(std::ostream& out, const OccupancyTrace& trace, TraceField field = TraceField::mean);

struct TraceTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;        // node columns, excluding t
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // [column][time]
};

TraceTable read_csv(std::istream& in);
TraceTable to_table(const OccupancyTrace& trace, TraceField field = TraceField::mean);

struct AgreementStats {
  std::size_t cells = 0;
  std::size_t within = 0;        // cells with |candidate - reference| <= k * se
  double fraction = 0.0;
  double max_abs_difference = 0.0;
  // max over columns of max_t |diff| / max_t |reference|.
  double max_relative_difference = 0.0;
};

// Cell-wise agreement between a reference trace and a candidate with standard
// errors. Cells with zero standard error count as within only when the
// difference is below 1e-12. Shapes (columns and times) must match.
AgreementStats compare_traces(const TraceTable& reference, const TraceTable& candidate,
                              const TraceTable* candidate_se, double k);

}  // namespace homeostat
