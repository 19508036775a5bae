#include "hybridsim/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace hybridsim::report {

void write_timeseries(std::ostream& out, const SimulationResult& r) {
    for (std::size_t k = 0; k < r.columns.size(); ++k) out << (k ? "," : "") << r.columns[k];
    out << "\n";
    const auto stage_col = r.columns.size() - 1;
    for (const auto& row : r.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) out << ',';
            if (k == stage_col) out << static_cast<int>(row[k]);
            else if (k == 0) out << fmt::format("{:.6f}", row[k]);
            else out << fmt::format("{:.17g}", row[k]);
        }
        out << "\n";
    }
}

void write_events(std::ostream& out, const SimulationResult& r) {
    out << "# mode " << to_string(r.mode) << "\n";
    for (const auto& line : r.log) out << line << "\n";
    out << "# EMT signals: t_emt kind target delivered_at phasor_target applied\n";
    for (const auto& e : r.events)
        out << fmt::format("signal {:.6f} {} {} {:.4f} {} {}\n", e.signal.t_emt, to_string(e.signal.kind), e.signal.target,
                           e.t_delivered, e.phasor_target.empty() ? "-" : e.phasor_target, e.applied ? 1 : 0);
    for (const auto& [id, st] : r.phasor_stalled) out << "final phasor " << id << ' ' << (st ? "stalled" : "running") << "\n";
    for (const auto& [id, st] : r.emt_stalled) out << "final emt " << id << ' ' << (st ? "stalled" : "running") << "\n";
    if (r.t_switch) out << fmt::format("switch {:.4f}\n", *r.t_switch);
}

void write_timing(std::ostream& out, const SimulationResult& r) {
    out << fmt::format("stage1_s {:.6f}\nstage2_s {:.6f}\nstage3_s {:.6f}\ntotal_s {:.6f}\n", r.timing.stage1,
                       r.timing.stage2, r.timing.stage3, r.timing.total);
    if (r.t_stage2) out << fmt::format("t_stage2 {:.4f}\n", *r.t_stage2);
    if (r.t_switch) out << fmt::format("t_switch {:.4f}\n", *r.t_switch);
    out << fmt::format("warmup_residual {:.6e}\n", r.warmup_residual);
}

void write_run(const std::string& dir, const SimulationResult& r) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(std::filesystem::path(dir) / name);
        if (!f) throw std::runtime_error("cannot write " + (std::filesystem::path(dir) / name).string());
        return f;
    };
    auto ts = open("timeseries.csv");
    write_timeseries(ts, r);
    auto ev = open("events.log");
    write_events(ev, r);
    auto tm = open("timing.txt");
    write_timing(tm, r);
}

bool Table::has(const std::string& name) const { return std::find(columns.begin(), columns.end(), name) != columns.end(); }

std::vector<double> Table::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw std::out_of_range("no column '" + name + "'");
    const auto k = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r.at(k));
    return out;
}

Table read_csv(std::istream& in) {
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty CSV");
    std::stringstream hs(line);
    for (std::string c; std::getline(hs, c, ',');) t.columns.push_back(c);
    long n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) row.push_back(std::stod(c));
        if (row.size() != t.columns.size()) throw std::runtime_error(fmt::format("CSV line {}: wrong field count", n));
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table read_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    return read_csv(f);
}

std::map<std::string, double> read_timing(const std::string& path) {
    std::map<std::string, double> out;
    std::ifstream f(path);
    std::string k;
    double v = 0.0;
    while (f >> k >> v) out[k] = v;
    return out;
}

Comparison compare(const Table& a, const Table& b, const std::vector<std::string>& quantities, double tol, double t_from) {
    Comparison c;
    std::vector<std::string> q = quantities;
    if (q.empty())
        for (const auto& name : a.columns)
            if (name != "time_s" && name != "stage" && b.has(name)) q.push_back(name);
    const auto ta = a.column("time_s");
    const auto tb = b.column("time_s");
    // Pair rows by time stamp.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::size_t j = 0;
    for (std::size_t i = 0; i < ta.size(); ++i) {
        if (ta[i] < t_from - 1e-9) continue;
        while (j < tb.size() && tb[j] < ta[i] - 1e-7) ++j;
        if (j < tb.size() && std::abs(tb[j] - ta[i]) <= 1e-7) pairs.push_back({i, j});
    }
    for (const auto& name : q) {
        const auto xa = a.column(name);
        const auto xb = b.column(name);
        QuantityDiff d;
        d.name = name;
        for (const auto& [i, k] : pairs) {
            const double e = std::abs(xa[i] - xb[k]);
            d.max_abs = std::max(d.max_abs, e);
            d.mean_abs += e;
        }
        d.samples = pairs.size();
        if (d.samples) d.mean_abs /= static_cast<double>(d.samples);
        d.pass = d.max_abs < tol;
        if (!d.pass) c.pass = false;
        c.diffs.push_back(d);
    }
    for (const auto& name : a.columns) {
        if (name.rfind("status_", 0) != 0 || !b.has(name) || a.rows.empty() || b.rows.empty()) continue;
        const double fa = a.column(name).back();
        const double fb = b.column(name).back();
        if (fa != fb)
            c.stall_notes.push_back(fmt::format("{}: final status differs ({} vs {})", name, fa == 0.0 ? "stalled" : "running",
                                                fb == 0.0 ? "stalled" : "running"));
    }
    return c;
}

void print_comparison(std::ostream& out, const Comparison& c, double tol) {
    out << fmt::format("{:<24} {:>14} {:>14} {:>8}  {}\n", "quantity", "max_abs", "mean_abs", "samples", "verdict");
    for (const auto& d : c.diffs)
        out << fmt::format("{:<24} {:>14.6e} {:>14.6e} {:>8}  {}\n", d.name, d.max_abs, d.mean_abs, d.samples,
                           d.pass ? "ok" : "FAIL");
    if (c.wall_ratio > 0.0) out << fmt::format("wall-clock ratio (a/b): {:.4f}\n", c.wall_ratio);
    for (const auto& n : c.stall_notes) out << "stall pattern: " << n << "\n";
    out << fmt::format("verdict: {} (tolerance {:g})\n", c.pass ? "PASS" : "FAIL", tol);
}

} // namespace hybridsim::report
