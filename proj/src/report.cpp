#include "parrep/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace parrep {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

namespace {

void provenance(std::ostream& out, const char* kind, const RunReport& r) {
    out << "# parrep " << kind << " schema=" << csv_schema << "\n"
        << "# version=" << version << "\n"
        << "# seed=" << r.seed << "\n"
        << "# config_hash=" << r.config_hash << "\n"
        << "# model_id=" << r.model_id << "\n"
        << "# algorithm=" << to_string(r.algorithm) << "\n"
        << "# replicas=" << r.replicas << "\n";
}

std::string label_text(const Label& l) {
    std::string s;
    for (std::size_t i = 0; i < l.size(); ++i) s += (i ? "|" : "") + format_number(l[i]);
    return s;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw FileError(p.string());
    return f;
}

}  // namespace

void write_summary_csv(std::ostream& out, const RunReport& r) {
    provenance(out, "summary", r);
    out << "# clock=" << format_number(r.clock) << "\n"
        << "# steps=" << r.steps << "\n"
        << "# events=" << r.events << "\n"
        << "# rate_integral=" << format_number(r.rate_integral) << "\n"
        << "# cycles=" << r.cycles.size() << "\n";
    out << "observable,estimate,std_error,batches,batch_size,virtual_cost\n";
    for (std::size_t k = 0; k < r.names.size(); ++k) {
        const auto& e = r.estimates[k];
        out << r.names[k] << ',' << format_number(e.estimate) << ',' << format_number(e.std_error) << ','
            << e.batches << ',' << e.batch_size << ',' << r.virtual_cost << "\n";
    }
}

void write_cycles_csv(std::ostream& out, const RunReport& r) {
    provenance(out, "cycles", r);
    out << "cycle,label,decorrelation_time,decorrelation_steps,dephase_cost,dephase_restarts,parallel,stage_time,"
           "winner,first_exit,parallel_cost,clock,steps,rate_integral,events";
    for (const auto& n : r.names) out << ",F_" << n;
    out << "\n";
    for (const auto& c : r.cycles) {
        out << c.cycle << ',' << label_text(c.label) << ',' << format_number(c.decorrelation_time) << ','
            << c.decorrelation_steps << ',' << c.dephase_cost << ',' << c.dephase_restarts << ',' << (c.parallel ? 1 : 0)
            << ',' << format_number(c.stage_time) << ',' << c.winner << ',' << format_number(c.first_exit) << ','
            << c.parallel_cost << ',' << format_number(c.clock) << ',' << format_number(c.steps) << ','
            << format_number(c.rate_integral) << ',' << c.events;
        for (double v : c.contribution) out << ',' << format_number(v);
        out << "\n";
    }
}

void write_sweep_csv(std::ostream& out, const SweepResult& s) {
    provenance(out, "sweep", s.points.empty() ? s.serial : s.points.front().report);
    out << "# serial_events=" << s.serial.events << "\n"
        << "# serial_rate_integral=" << format_number(s.serial.rate_integral) << "\n";
    out << "replicas,threshold,dephasing";
    for (const auto& n : s.serial.names) out << ',' << n << "_estimate," << n << "_std_error";
    out << ",clock,cycles,virtual_cost,speedup\n";
    for (const auto& p : s.points) {
        out << p.replicas << ',' << (p.threshold ? format_number(*p.threshold) : "") << ',' << to_string(p.dephasing);
        for (const auto& e : p.report.estimates) out << ',' << format_number(e.estimate) << ',' << format_number(e.std_error);
        out << ',' << format_number(p.report.clock) << ',' << p.report.cycles.size() << ',' << p.report.virtual_cost
            << ',' << format_number(p.speedup) << "\n";
    }
}

void write_report(const std::filesystem::path& dir, const RunReport& report) {
    std::filesystem::create_directories(dir);
    auto summary = open_out(dir / "summary.csv");
    write_summary_csv(summary, report);
    auto cycles = open_out(dir / "cycles.csv");
    write_cycles_csv(cycles, report);
    if (!summary || !cycles) throw FileError(dir.string());
}

}  // namespace parrep
