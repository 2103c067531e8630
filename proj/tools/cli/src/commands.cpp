#include "ftle_cli/commands.hpp"

#include "ftle/errors.hpp"
#include "ftle/format.hpp"
#include "ftle/otd.hpp"
#include "ftle/version.hpp"

#include <fstream>
#include <iostream>
#include <memory>

namespace ftle::cli {

namespace {

/// Opens `path` for writing, or hands back `fallback` for "-".
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : path_(path) {
        if (path == "-") {
            os_ = &fallback;
        } else {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw Error("cannot open '" + path + "' for writing");
            os_ = file_.get();
        }
    }

    std::ostream& stream() { return *os_; }

    void finish() {
        os_->flush();
        if (!*os_) throw Error("failed writing '" + path_ + "'");
    }

private:
    std::string path_;
    std::unique_ptr<std::ofstream> file_;
    std::ostream* os_ = nullptr;
};

void write_header(std::ostream& os, const std::string& kind, const RunConfig& cfg) {
    os << "# ftle-" << kind << " version=" << kVersion << '\n';
    for (const auto& [k, v] : header_entries(cfg)) os << "# config." << k << '=' << v << '\n';
}

/// Cauchy-Green eigenvalues at every step after t0.
struct StrainHistory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> eigenvalues;
};

StrainHistory strain_history(const RunConfig& cfg) {
    const auto& sys = *cfg.system;
    StrainHistory h;
    deformation_gradient_variational(sys, *cfg.z0, cfg.integrator, [&](double t, const State&, const Matrix& grad) {
        h.times.push_back(t);
        h.eigenvalues.push_back(cauchy_green(grad, StrainSide::right).eigenvalues);
    });
    return h;
}

std::string pair_name(std::size_t r) { return std::to_string(r) + "-" + std::to_string(r + 1); }

void write_crossing_summary(std::ostream& os, const CrossingReport& rep) {
    os << "# crossing pair=" << pair_name(rep.first) << " crossed=" << (rep.crossed ? "true" : "false")
       << " min_gap=" << format_double(rep.min_gap) << " t_min_gap=" << format_double(rep.t_min_gap)
       << " events=" << rep.events.size() << '\n';
    for (const auto& ev : rep.events) {
        os << "# crossing_event pair=" << pair_name(rep.first) << " t=" << format_double(ev.t)
           << " relative_gap=" << format_double(ev.relative_gap) << '\n';
    }
}

}  // namespace

int cmd_field(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    ScanOptions options;
    options.workers = cfg.workers;
    options.fd = cfg.fd;
    options.crossing_flags = cfg.crossing_flags;
    options.crossing_threshold = cfg.crossing_threshold;
    options.crossing_rule = cfg.crossing_rule;

    FieldSlice slice = cfg.reduced ? scan_reduced(*cfg.system, *cfg.grid, cfg.ranks.front(), cfg.integrator, options)
                                   : scan_full(*cfg.system, *cfg.grid, cfg.method, cfg.integrator, options);
    for (const auto& [k, v] : header_entries(cfg)) slice.metadata.emplace_back("config." + k, v);

    write_field(slice, cfg.output);
    if (!cfg.raw_output.empty()) write_field_raw(slice.values, cfg.raw_output);

    const std::size_t flagged = slice.flagged_count();
    out << "wrote " << slice.values.rows() << "x" << slice.values.cols() << " field to " << cfg.output;
    if (flagged) out << " (" << flagged << " flagged points)";
    out << '\n';
    if (flagged && cfg.strict) {
        std::map<std::string, std::size_t> by_reason;
        for (PointFlag f : slice.flags) {
            if (f != PointFlag::ok) ++by_reason[to_string(f)];
        }
        err << "strict mode: " << flagged << " of " << slice.flags.size() << " points flagged:";
        for (const auto& [reason, count] : by_reason) err << ' ' << reason << '=' << count;
        err << '\n';
        return 1;
    }
    return 0;
}

int cmd_trace(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    const auto& sys = *cfg.system;
    const double t0 = cfg.integrator.t0;
    const StrainHistory history = strain_history(cfg);

    // Gamma_i(t) per rank, sampled at the same steps as the full history (t0 excluded).
    std::vector<std::vector<Eigen::VectorXd>> gammas;
    for (const Eigen::Index r : cfg.ranks) {
        std::vector<Eigen::VectorXd> series;
        PipelineOptions options;
        options.observer = [&](double t, const State&, const Matrix&, const Matrix& phi) {
            series.push_back(reduced_ftle(ReducedFundamental{phi, t0, t - t0}).exponents);
        };
        reduced_ftle_pipeline(sys, *cfg.z0, r, cfg.integrator, options);
        gammas.push_back(std::move(series));
    }

    std::vector<CrossingReport> reports;
    for (const Eigen::Index r : cfg.ranks) {
        if (r < sys.dimension()) {
            reports.push_back(detect_crossing(history.times, history.eigenvalues, static_cast<std::size_t>(r),
                                              cfg.crossing_threshold, cfg.crossing_rule));
        }
    }

    Sink sink(cfg.output, out);
    auto& os = sink.stream();
    write_header(os, "trace", cfg);
    for (const auto& rep : reports) write_crossing_summary(os, rep);
    os << "# columns=t";
    for (Eigen::Index i = 1; i <= cfg.exponent_count; ++i) os << ",Lambda_" << i;
    for (const Eigen::Index r : cfg.ranks) {
        for (Eigen::Index i = 1; i <= r; ++i) os << ",Gamma_r" << r << '_' << i;
    }
    os << '\n';
    for (std::size_t s = 0; s < history.times.size(); ++s) {
        if ((s + 1) % cfg.stride != 0 && s + 1 != history.times.size()) continue;
        const double t = history.times[s];
        StrainSpectrum spectrum;
        spectrum.eigenvalues = history.eigenvalues[s];
        const auto lambda = ftle(spectrum, t - t0, static_cast<int>(cfg.exponent_count)).exponents;
        os << format_double(t);
        for (Eigen::Index i = 0; i < lambda.size(); ++i) os << ',' << format_double(lambda(i));
        for (const auto& series : gammas) {
            const auto& g = series[s];
            for (Eigen::Index i = 0; i < g.size(); ++i) os << ',' << format_double(g(i));
        }
        os << '\n';
    }
    sink.finish();
    return 0;
}

int cmd_diag(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    const StrainHistory history = strain_history(cfg);
    std::vector<CrossingReport> reports;
    for (const std::size_t p : cfg.pairs) {
        reports.push_back(
            detect_crossing(history.times, history.eigenvalues, p, cfg.crossing_threshold, cfg.crossing_rule));
    }

    Sink sink(cfg.output, out);
    auto& os = sink.stream();
    write_header(os, "diag", cfg);
    for (const auto& rep : reports) write_crossing_summary(os, rep);
    os << "# columns=t,pair,relative_gap,flagged\n";
    for (std::size_t s = 0; s < history.times.size(); ++s) {
        if ((s + 1) % cfg.stride != 0 && s + 1 != history.times.size()) continue;
        for (const auto& rep : reports) {
            bool flagged = false;
            for (const auto& ev : rep.events) flagged = flagged || ev.t == rep.times[s];
            os << format_double(rep.times[s]) << ',' << pair_name(rep.first) << ','
               << format_double(rep.relative_gaps[s]) << ',' << (flagged ? 1 : 0) << '\n';
        }
    }
    sink.finish();
    return 0;
}

int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    const auto rows = benchmark_scaling(cfg.n_list, cfg.ranks.front(), cfg.integrator, cfg.repeats);

    Sink sink(cfg.output, out);
    auto& os = sink.stream();
    write_header(os, "bench", cfg);
    os << "# system=random stable tridiagonal linear\n";
    if (rows.size() >= 2) {
        std::vector<double> n, full, reduced;
        for (const auto& row : rows) {
            n.push_back(static_cast<double>(row.n));
            full.push_back(row.full_seconds);
            reduced.push_back(row.reduced_seconds);
        }
        os << "# loglog_slope.full=" << format_double(loglog_slope(n, full)) << '\n';
        os << "# loglog_slope.reduced=" << format_double(loglog_slope(n, reduced)) << '\n';
    }
    write_cost_table(rows, os);
    sink.finish();
    return 0;
}

}  // namespace ftle::cli
