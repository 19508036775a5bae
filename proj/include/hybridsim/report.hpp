#pragma once

#include "hybridsim/coordinator.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace hybridsim::report {

void write_timeseries(std::ostream& out, const SimulationResult& r);
void write_events(std::ostream& out, const SimulationResult& r);
void write_timing(std::ostream& out, const SimulationResult& r);
/// Writes timeseries.csv, events.log and timing.txt into `dir` (created if needed).
void write_run(const std::string& dir, const SimulationResult& r);

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<double> column(const std::string& name) const;
    bool has(const std::string& name) const;
};

Table read_csv(std::istream& in);
Table read_csv_file(const std::string& path);
/// key -> value pairs of timing.txt.
std::map<std::string, double> read_timing(const std::string& path);

struct QuantityDiff {
    std::string name;
    double max_abs = 0.0;
    double mean_abs = 0.0;
    std::size_t samples = 0;
    bool pass = true;
};

struct Comparison {
    std::vector<QuantityDiff> diffs;
    double wall_ratio = 0.0;                 // total(a) / total(b); 0 when unknown
    std::vector<std::string> stall_notes;    // final motor status disagreements
    bool pass = true;
};

/// Compares rows present at the same time stamps (t >= t_from). An empty
/// quantity list means every shared column except time and stage.
Comparison compare(const Table& a, const Table& b, const std::vector<std::string>& quantities, double tol,
                   double t_from = -1.0);
void print_comparison(std::ostream& out, const Comparison& c, double tol);

} // namespace hybridsim::report
