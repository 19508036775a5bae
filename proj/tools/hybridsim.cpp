// Command-line front end: run, compare, validate.
#include "hybridsim/case.hpp"
#include "hybridsim/coordinator.hpp"
#include "hybridsim/report.hpp"

#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>

using namespace hybridsim;

namespace {

int cmd_run(const std::string& path, const std::string& mode, const std::string& out, std::optional<double> t_end,
            std::optional<double> dt_ts, std::optional<double> dt_emt, std::optional<bool> sw, bool no_reconcile,
            bool dump, const std::string& transport) {
    CaseData c = load_case(path);
    if (t_end) c.config.t_end = *t_end;
    if (dt_ts) c.config.dt_ts = *dt_ts;
    if (dt_emt) c.config.dt_emt = *dt_emt;
    if (sw) c.config.switching = *sw;
    if (no_reconcile) c.config.reconcile = false;
    const auto problems = validate_case(c);
    if (!problems.empty()) {
        for (const auto& p : problems) std::cerr << path << ": " << p << "\n";
        return 2;
    }
    RunOptions opt;
    opt.mode = parse_run_mode(mode);
    opt.transport = transport == "tcp" ? TransportKind::tcp : TransportKind::inproc;
    std::filesystem::create_directories(out);
    if (dump) opt.waveform_path = (std::filesystem::path(out) / "waveforms.csv").string();
    const auto r = run_simulation(c, opt);
    report::write_run(out, r);
    std::cout << "mode " << to_string(r.mode) << ": " << r.rows.size() << " rows, total " << r.timing.total << " s";
    if (r.t_switch) std::cout << ", switched at " << *r.t_switch << " s";
    std::cout << "\n";
    return 0;
}

int cmd_compare(const std::string& a, const std::string& b, const std::vector<std::string>& q, double tol, double t_from) {
    namespace fs = std::filesystem;
    const auto ta = report::read_csv_file((fs::path(a) / "timeseries.csv").string());
    const auto tb = report::read_csv_file((fs::path(b) / "timeseries.csv").string());
    auto c = report::compare(ta, tb, q, tol, t_from);
    const auto wa = report::read_timing((fs::path(a) / "timing.txt").string());
    const auto wb = report::read_timing((fs::path(b) / "timing.txt").string());
    if (wa.contains("total_s") && wb.contains("total_s") && wb.at("total_s") > 0.0)
        c.wall_ratio = wa.at("total_s") / wb.at("total_s");
    report::print_comparison(std::cout, c, tol);
    return c.pass ? 0 : 1;
}

int cmd_validate(const std::string& path) {
    const CaseData c = load_case(path);
    const auto problems = validate_case(c);
    if (problems.empty()) {
        std::cout << path << ": ok\n";
        return 0;
    }
    for (const auto& p : problems) std::cout << path << ": " << p << "\n";
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::warn);
    if (const char* lvl = std::getenv("HYBRIDSIM_LOG")) spdlog::cfg::helpers::load_levels(lvl);

    CLI::App app{"Hybrid EMT/phasor simulation with mode switching"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Simulate a case");
    std::string case_path, mode = "hybrid_switch", out = "out", transport = "inproc";
    std::optional<double> t_end, dt_ts, dt_emt;
    bool sw_on = false, sw_off = false, no_reconcile = false, dump = false;
    long seed = 0;
    run->add_option("case", case_path, "Case file")->required()->check(CLI::ExistingFile);
    run->add_option("--mode", mode, "Run mode")
        ->check(CLI::IsMember({"ts_only", "hybrid_no_switch", "hybrid_switch", "emt_only"}));
    run->add_option("--out", out, "Output directory");
    run->add_option("--t-end", t_end, "End time (s)");
    run->add_option("--dt-ts", dt_ts, "Phasor / interaction step (s)");
    run->add_option("--dt-emt", dt_emt, "EMT step (s)");
    auto* on = run->add_flag("--switch", sw_on, "Enable mode switching");
    run->add_flag("--no-switch", sw_off, "Disable mode switching")->excludes(on);
    run->add_flag("--no-event-reconcile", no_reconcile, "Do not pass EMT events to the phasor model");
    run->add_flag("--dump-waveforms", dump, "Write EMT samples to waveforms.csv");
    run->add_option("--transport", transport, "EMT link")->check(CLI::IsMember({"inproc", "tcp"}));
    run->add_option("--seed", seed, "Reserved; the engines are deterministic");

    auto* cmp = app.add_subcommand("compare", "Compare two run directories");
    std::string dir_a, dir_b;
    std::vector<std::string> quantities;
    double tol = 0.01, t_from = -1.0;
    cmp->add_option("run_a", dir_a)->required()->check(CLI::ExistingDirectory);
    cmp->add_option("run_b", dir_b)->required()->check(CLI::ExistingDirectory);
    cmp->add_option("-q,--quantity", quantities, "Columns to compare (default: all shared)");
    cmp->add_option("--tol", tol, "Pass/fail tolerance on max abs difference");
    cmp->add_option("--from", t_from, "Only compare rows at or after this time");

    auto* val = app.add_subcommand("validate", "Check a case file");
    std::string val_path;
    val->add_option("case", val_path)->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) {
            std::optional<bool> sw;
            if (sw_on) sw = true;
            if (sw_off) sw = false;
            return cmd_run(case_path, mode, out, t_end, dt_ts, dt_emt, sw, no_reconcile, dump, transport);
        }
        if (*cmp) return cmd_compare(dir_a, dir_b, quantities, tol, t_from);
        if (*val) return cmd_validate(val_path);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
