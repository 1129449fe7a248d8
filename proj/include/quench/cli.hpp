// cli.hpp: scenario runner behind the `quench` command-line tool.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "quench/amplitude.hpp"

namespace quench::cli {

enum class Scenario { kernel, solve, rates, bloch_cat, bell_channel, boundstate, sweep, figure };
enum class Sampling { linear, log };

std::optional<Scenario> parse_scenario(const std::string& name);
std::string scenario_name(Scenario s);

struct RunConfig {
    Scenario scenario{Scenario::solve};
    std::optional<double> s;
    std::optional<double> eta0;
    double omega0{0.1};
    double dt{0.01};
    double t_max{1000.0};
    std::string figure;
    std::string output_path{"-"};
    Sampling sampling{Sampling::log};
    int points_per_decade{200};
    int linear_points{1000};
    std::uint64_t seed{0x5eed};
    bool determinism{true};
    bool validate_rows{false};
    bool truncate_tail{false};
    double tail_epsilon{1e-8};
    std::vector<double> sweep_s;
    std::vector<double> sweep_eta0;
    unsigned threads{0};  // 0: hardware concurrency

    // Throws ConfigError for anything the selected scenario cannot run with.
    void validate() const;
};

// Parses argv with flags > config file (--config, flat key=value) > defaults.
// Throws ConfigError on malformed input. Returns nullopt after --help.
std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& help_out);

// Shortest decimal string that round-trips to the same double.
std::string format_number(double v);

// Grid nodes to emit: t = 0 plus nearest nodes to log-spaced targets from dt to
// t_max (deduplicated), or evenly spaced nodes in linear mode.
std::vector<std::size_t> sample_indices(const amplitude::TimeGrid& grid, Sampling mode, int points_per_decade,
                                        int linear_points);

// One trajectory run: bath, horizon and solver options.
struct SeriesSpec {
    double s{1.0};
    double eta0{0.0};
    double omega0{0.1};
    double dt{0.01};
    double t_max{1000.0};
    bool truncate_tail{false};
    double tail_epsilon{1e-8};

    spectral::KernelSpec kernel() const;
    amplitude::TimeGrid grid() const;
    amplitude::SolverOptions options() const;
};

inline constexpr double agreement_tolerance = 5e-2;

struct SweepRow {
    SeriesSpec cell;
    double steady_abs_p{0.0};  // mean |p| over the last decade of log samples
    double end_abs_p{0.0};     // |p(t_max)|
    double concurrence{0.0};   // mean over the same samples
    double fidelity{0.0};
    amplitude::BoundStateResult bound;
    bool agree{false};
    std::string error;  // nonempty when the row failed
};

// Rows run in parallel on `threads` workers; output order follows `cells`.
std::vector<SweepRow> sweep(const std::vector<SeriesSpec>& cells, int points_per_decade, unsigned threads);

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

// Named reproduction presets (fig1a ... fig4b). Empty for unknown names.
std::vector<SeriesSpec> figure_preset(const std::string& name);

// Renders the scenario output. Throws NumericalError / DomainError from the
// numerics and ConfigError for invalid config.
void run(const RunConfig& config, std::ostream& out);

// Full CLI behaviour: parse, run, write. Returns the exit status
// (0 ok, 1 config, 2 numerical, 3 I/O).
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace quench::cli
