#include "quench/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "quench/channel.hpp"
#include "quench/entanglement.hpp"
#include "quench/errors.hpp"

namespace quench::cli {

namespace {

const std::map<std::string, Scenario>& scenario_table() {
    static const std::map<std::string, Scenario> table{
        {"kernel", Scenario::kernel},         {"solve", Scenario::solve},
        {"rates", Scenario::rates},           {"bloch-cat", Scenario::bloch_cat},
        {"bell-channel", Scenario::bell_channel}, {"boundstate", Scenario::boundstate},
        {"sweep", Scenario::sweep},           {"figure", Scenario::figure},
    };
    return table;
}

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr const char* trajectory_header = "t,re_p,im_p,abs_p2,gamma,S,r_x,r_y,r_z";

bool figure_uses_bell(const std::string& name) { return name.rfind("fig3", 0) == 0 || name.rfind("fig4", 0) == 0; }

void require_positive(double v, const char* name) {
    if (!(std::isfinite(v) && v > 0.0)) throw ConfigError(std::string(name) + " must be a positive number");
}

// Row-level invariant checks behind --validate.
void validate_trajectory_row(channel::cplx p, const channel::BlochVector& b, std::size_t k) {
    auto fail = [&](const std::string& what) {
        throw NumericalError("validation failed at node " + std::to_string(k) + ": " + what);
    };
    if (!(std::abs(p) <= 1.0 + 1e-6)) fail("|p| exceeds 1 + 1e-6");
    if (!(b.norm() <= 1.0 + 1e-9)) fail("Bloch vector longer than 1");
    try {
        channel::evolve_single(channel::DensityMatrix2::cat_state(), p).validate();
    } catch (const DomainError& e) {
        fail(e.what());
    }
}

void validate_bell_row(channel::cplx p, const entanglement::ChannelMetrics& m, std::size_t k) {
    auto fail = [&](const std::string& what) {
        throw NumericalError("validation failed at node " + std::to_string(k) + ": " + what);
    };
    try {
        const auto rho = entanglement::evolve_pair(entanglement::DensityMatrix4::bell_phi_plus(), p, p);
        rho.validate();
        const auto x = entanglement::as_x_state(rho, 1e-12);
        x.validate();
    } catch (const std::exception& e) {
        fail(e.what());
    }
    if (!(m.concurrence >= 0.0 && m.concurrence <= 1.0)) fail("concurrence outside [0, 1]");
    if (!(m.fidelity >= 1.0 / 3.0 && m.fidelity <= 1.0)) fail("fidelity outside [1/3, 1]");
}

void write_trajectory(const SeriesSpec& spec, bool bell, bool prefix, const RunConfig& cfg, std::ostream& out) {
    const auto traj = amplitude::solve_amplitude(spec.kernel(), spec.grid(), spec.options());
    const auto r = amplitude::rates(traj);
    const auto cat = channel::DensityMatrix2::cat_state();
    for (const std::size_t k : sample_indices(traj.grid, cfg.sampling, cfg.points_per_decade, cfg.linear_points)) {
        const auto p = traj.p[k];
        const auto b = channel::bloch(cat, p);
        if (cfg.validate_rows) validate_trajectory_row(p, b, k);
        if (prefix) out << format_number(spec.s) << ',' << format_number(spec.eta0) << ',';
        out << format_number(traj.grid.time(k)) << ',' << format_number(p.real()) << ','
            << format_number(p.imag()) << ',' << format_number(std::norm(p)) << ',';
        if (r.defined[k]) out << format_number(r.gamma[k]) << ',' << format_number(r.shift[k]);
        else out << ',';
        out << ',' << format_number(b.rx) << ',' << format_number(b.ry) << ',' << format_number(b.rz);
        if (bell) {
            const auto m = entanglement::bell_channel_metrics(p);
            if (cfg.validate_rows) validate_bell_row(p, m, k);
            out << ',' << format_number(m.concurrence) << ',' << format_number(m.fidelity);
        }
        out << '\n';
    }
}

SeriesSpec series_from(const RunConfig& cfg) {
    return {*cfg.s, *cfg.eta0, cfg.omega0, cfg.dt, cfg.t_max, cfg.truncate_tail, cfg.tail_epsilon};
}

std::vector<double> parse_list(const std::string& text, const char* name) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || ptr != item.data() + item.size()) {
            throw ConfigError(std::string("cannot parse ") + name + " entry '" + item + "'");
        }
        out.push_back(v);
    }
    return out;
}

} // namespace

std::optional<Scenario> parse_scenario(const std::string& name) {
    const auto& t = scenario_table();
    const auto it = t.find(name);
    if (it == t.end()) return std::nullopt;
    return it->second;
}

std::string scenario_name(Scenario s) {
    for (const auto& [name, value] : scenario_table())
        if (value == s) return name;
    return "unknown";
}

void RunConfig::validate() const {
    require_positive(dt, "dt");
    require_positive(t_max, "t-max");
    if (!std::isfinite(omega0)) throw ConfigError("omega0 must be finite");
    if (points_per_decade < 1) throw ConfigError("points-per-decade must be >= 1");
    if (linear_points < 2) throw ConfigError("linear-points must be >= 2");
    if (!(tail_epsilon > 0.0 && tail_epsilon < 1.0)) throw ConfigError("tail-epsilon must lie in (0, 1)");
    if (t_max < dt) throw ConfigError("t-max must be at least one step dt");

    switch (scenario) {
    case Scenario::figure:
        if (figure.empty()) throw ConfigError("figure scenario needs a name (fig1a ... fig4b)");
        if (figure_preset(figure).empty()) throw ConfigError("unknown figure '" + figure + "'");
        return;
    case Scenario::sweep:
        if (sweep_s.empty()) throw ConfigError("sweep needs --s-list");
        if (sweep_eta0.empty()) throw ConfigError("sweep needs --eta0-list");
        for (double v : sweep_s) require_positive(v, "s-list entries");
        for (double v : sweep_eta0)
            if (!(std::isfinite(v) && v >= 0.0)) throw ConfigError("eta0-list entries must be >= 0");
        return;
    default:
        if (!s) throw ConfigError(scenario_name(scenario) + " needs --s");
        if (!eta0) throw ConfigError(scenario_name(scenario) + " needs --eta0");
        require_positive(*s, "s");
        if (!(std::isfinite(*eta0) && *eta0 >= 0.0)) throw ConfigError("eta0 must be >= 0");
        return;
    }
}

std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& help_out) {
    RunConfig cfg;
    CLI::App app{"Exact single- and two-qubit dynamics under zero-temperature amplitude damping", "quench"};
    app.set_config("--config", "", "flat key=value file; command-line flags take precedence");
    app.allow_config_extras(false);

    std::string scenario = "solve";
    std::string sampling = "log";
    std::string s_list, eta0_list;
    std::string determinism = "true";
    double s = 0.0, eta0 = 0.0;
    app.add_option("scenario", scenario, "kernel|solve|rates|bloch-cat|bell-channel|boundstate|sweep|figure")
        ->required();
    app.add_option("figure", cfg.figure, "figure preset for the figure scenario (fig1a ... fig4b)");
    auto* s_opt = app.add_option("--s", s, "spectral power s");
    auto* eta_opt = app.add_option("--eta0", eta0, "coupling strength eta0");
    app.add_option("--omega0", cfg.omega0, "qubit level separation in units of omega_c");
    app.add_option("--dt", cfg.dt, "solver step in units of 1/omega_c");
    app.add_option("--t-max", cfg.t_max, "horizon in units of 1/omega_c");
    app.add_option("-o,--output", cfg.output_path, "output file, '-' for stdout");
    app.add_option("--sampling", sampling, "output sampling: log|linear");
    app.add_option("--points-per-decade", cfg.points_per_decade, "log sampling density");
    app.add_option("--linear-points", cfg.linear_points, "row count for linear sampling");
    app.add_option("--seed", cfg.seed, "seed for oracle optimisers");
    app.add_option("--determinism", determinism, "true: run sweep rows on one thread");
    app.add_flag("--validate", cfg.validate_rows, "re-check state invariants on every emitted row");
    app.add_flag("--truncate-tail", cfg.truncate_tail, "drop kernel history below tail-epsilon * f(0)");
    app.add_option("--tail-epsilon", cfg.tail_epsilon, "relative kernel cutoff for --truncate-tail");
    app.add_option("--s-list", s_list, "comma-separated s values for sweep");
    app.add_option("--eta0-list", eta0_list, "comma-separated eta0 values for sweep");
    app.add_option("--threads", cfg.threads, "sweep worker threads (0: all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        help_out << app.help();
        return std::nullopt;
    } catch (const CLI::ParseError& e) {
        throw ConfigError(e.what());
    }

    const auto sc = parse_scenario(scenario);
    if (!sc) throw ConfigError("unknown scenario '" + scenario + "'");
    cfg.scenario = *sc;
    if (sampling == "log") cfg.sampling = Sampling::log;
    else if (sampling == "linear") cfg.sampling = Sampling::linear;
    else throw ConfigError("sampling must be log or linear");
    if (determinism == "true" || determinism == "1") cfg.determinism = true;
    else if (determinism == "false" || determinism == "0") cfg.determinism = false;
    else throw ConfigError("determinism must be true or false");
    if (s_opt->count() > 0) cfg.s = s;
    if (eta_opt->count() > 0) cfg.eta0 = eta0;
    cfg.sweep_s = parse_list(s_list, "s-list");
    cfg.sweep_eta0 = parse_list(eta0_list, "eta0-list");
    cfg.validate();
    return cfg;
}

std::string format_number(double v) {
    if (v == 0.0) v = 0.0; // drop the sign of -0
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf.data(), ptr);
}

std::vector<std::size_t> sample_indices(const amplitude::TimeGrid& grid, Sampling mode, int points_per_decade,
                                        int linear_points) {
    std::vector<std::size_t> idx{0};
    const std::size_t n = grid.n_steps;
    if (mode == Sampling::linear) {
        const auto count = static_cast<std::size_t>(std::max(linear_points, 2));
        for (std::size_t i = 1; i < count; ++i) {
            idx.push_back(static_cast<std::size_t>(
                std::llround(static_cast<double>(i) * static_cast<double>(n) / static_cast<double>(count - 1))));
        }
    } else {
        // Targets 10^(i / ppd) in units of dt, i.e. nodes k = 10^(i/ppd).
        const double decades = std::log10(static_cast<double>(n));
        const auto total = static_cast<long long>(std::floor(decades * points_per_decade + 1e-9));
        for (long long i = 0; i <= total; ++i) {
            const double k = std::pow(10.0, static_cast<double>(i) / points_per_decade);
            idx.push_back(std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(k))));
        }
        idx.push_back(n);
    }
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
}

spectral::KernelSpec SeriesSpec::kernel() const { return {{s, eta0, 1.0}, omega0}; }

amplitude::TimeGrid SeriesSpec::grid() const { return amplitude::TimeGrid::from_horizon(dt, t_max); }

amplitude::SolverOptions SeriesSpec::options() const { return {truncate_tail, tail_epsilon}; }

std::vector<SweepRow> sweep(const std::vector<SeriesSpec>& cells, int points_per_decade, unsigned threads) {
    std::vector<SweepRow> rows(cells.size());
    auto compute = [&](std::size_t i) {
        SweepRow& row = rows[i];
        row.cell = cells[i];
        try {
            const auto traj = amplitude::solve_amplitude(row.cell.kernel(), row.cell.grid(), row.cell.options());
            row.bound = amplitude::bound_state_analysis(row.cell.kernel());
            const double horizon = traj.grid.t_max();
            double sum_p = 0.0, sum_c = 0.0, sum_f = 0.0;
            std::size_t count = 0;
            for (const std::size_t k : sample_indices(traj.grid, Sampling::log, points_per_decade, 2)) {
                if (traj.grid.time(k) < 0.1 * horizon) continue;
                const auto m = entanglement::bell_channel_metrics(traj.p[k]);
                sum_p += std::abs(traj.p[k]);
                sum_c += m.concurrence;
                sum_f += m.fidelity;
                ++count;
            }
            row.steady_abs_p = sum_p / static_cast<double>(count);
            row.concurrence = sum_c / static_cast<double>(count);
            row.fidelity = sum_f / static_cast<double>(count);
            row.end_abs_p = std::abs(traj.p.back());
            const double target = row.bound.exists ? row.bound.residue_z : 0.0;
            row.agree = std::abs(row.end_abs_p - target) < agreement_tolerance;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    };

    const unsigned workers =
        std::max(1u, std::min<unsigned>(threads == 0 ? std::thread::hardware_concurrency() : threads,
                                        static_cast<unsigned>(cells.size())));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) compute(i);
        });
    }
    for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) compute(i);
    for (auto& t : pool) t.join();
    return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
    out << "s,eta0,steady_abs_p,end_abs_p,C,F,exists,omega_b,residue_z,agree,error\n";
    for (const auto& row : rows) {
        out << format_number(row.cell.s) << ',' << format_number(row.cell.eta0) << ',';
        if (row.error.empty()) {
            out << format_number(row.steady_abs_p) << ',' << format_number(row.end_abs_p) << ','
                << format_number(row.concurrence) << ',' << format_number(row.fidelity) << ','
                << (row.bound.exists ? "true" : "false") << ',';
            if (row.bound.exists) out << format_number(row.bound.omega_b) << ',' << format_number(row.bound.residue_z);
            else out << ',';
            out << ',' << (row.agree ? "true" : "false") << ",\n";
        } else {
            std::string msg = row.error;
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            out << ",,,,,,,," << msg << '\n';
        }
    }
}

std::vector<SeriesSpec> figure_preset(const std::string& name) {
    constexpr double w0 = 0.1;
    // Super-Ohmic weak coupling relaxes on a ~1e5 / omega_c scale; a coarser step
    // with kernel-tail truncation keeps that series tractable.
    const SeriesSpec super_ohmic_weak{3.0, 0.01, w0, 0.05, 3e5, true, 1e-8};
    if (name == "fig1a") return {{0.5, 0.01, w0}};
    if (name == "fig1b") return {{0.5, 0.5, w0}};
    if (name == "fig2") return {{0.5, 0.01, w0}, {0.5, 0.5, w0}};
    if (name == "fig3a" || name == "fig3b") return {{0.5, 0.01, w0}, {1.0, 0.01, w0}, super_ohmic_weak};
    if (name == "fig4a" || name == "fig4b") return {{0.5, 0.5, w0}, {1.0, 0.5, w0}, {3.0, 0.5, w0}};
    return {};
}

void run(const RunConfig& cfg, std::ostream& out) {
    cfg.validate();
    switch (cfg.scenario) {
    case Scenario::kernel: {
        const SeriesSpec spec = series_from(cfg);
        const auto grid = spec.grid();
        out << "t,re_f,im_f,abs_f\n";
        for (const std::size_t k : sample_indices(grid, cfg.sampling, cfg.points_per_decade, cfg.linear_points)) {
            const auto f = spectral::kernel_closed_form(spec.kernel(), grid.time(k));
            out << format_number(grid.time(k)) << ',' << format_number(f.real()) << ',' << format_number(f.imag())
                << ',' << format_number(std::abs(f)) << '\n';
        }
        return;
    }
    case Scenario::solve:
    case Scenario::rates:
    case Scenario::bloch_cat:
        out << trajectory_header << '\n';
        write_trajectory(series_from(cfg), false, false, cfg, out);
        return;
    case Scenario::bell_channel:
        out << trajectory_header << ",C,F\n";
        write_trajectory(series_from(cfg), true, false, cfg, out);
        return;
    case Scenario::boundstate: {
        const SeriesSpec spec = series_from(cfg);
        const auto bs = amplitude::bound_state_analysis(spec.kernel());
        out << "s=" << format_number(spec.s) << '\n'
            << "eta0=" << format_number(spec.eta0) << '\n'
            << "omega0=" << format_number(spec.omega0) << '\n'
            << "inverse_moment=" << format_number(spectral::bath_inverse_moment(spec.kernel().spectral)) << '\n'
            << "exists=" << (bs.exists ? "true" : "false") << '\n';
        if (bs.exists) {
            out << "omega_b=" << format_number(bs.omega_b) << '\n'
                << "residue_z=" << format_number(bs.residue_z) << '\n';
        }
        return;
    }
    case Scenario::sweep: {
        std::vector<SeriesSpec> cells;
        for (double s : cfg.sweep_s)
            for (double eta0 : cfg.sweep_eta0)
                cells.push_back({s, eta0, cfg.omega0, cfg.dt, cfg.t_max, cfg.truncate_tail, cfg.tail_epsilon});
        write_sweep_csv(sweep(cells, cfg.points_per_decade, cfg.determinism ? 1u : cfg.threads), out);
        return;
    }
    case Scenario::figure: {
        const bool bell = figure_uses_bell(cfg.figure);
        out << "s,eta0," << trajectory_header << (bell ? ",C,F" : "") << '\n';
        for (const auto& series : figure_preset(cfg.figure)) write_trajectory(series, bell, true, cfg, out);
        return;
    }
    }
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    try {
        const auto cfg = parse_args(argc, argv, out);
        if (!cfg) return 0;
        std::ostringstream buffer;
        run(*cfg, buffer);
        if (cfg->output_path == "-") {
            out << buffer.str();
            out.flush();
            if (!out) throw IoError("failed writing to standard output");
        } else {
            std::ofstream file(cfg->output_path, std::ios::binary | std::ios::trunc);
            if (!file) throw IoError("cannot open '" + cfg->output_path + "' for writing");
            file << buffer.str();
            file.close();
            if (!file) throw IoError("failed writing '" + cfg->output_path + "'");
        }
        return 0;
    } catch (const ConfigError& e) {
        err << "quench: config error: " << e.what() << '\n';
        return 1;
    } catch (const IoError& e) {
        err << "quench: I/O error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "quench: numerical failure: " << e.what() << '\n';
        return 2;
    }
}

} // namespace quench::cli
