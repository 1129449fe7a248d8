// amplitude.hpp: survival amplitude p(t) of the excited level.
//
// p obeys the linear Volterra integro-differential equation
//
//     dp/dt = -int_0^t f(t - tau) p(tau) dtau,   p(0) = 1,
//
// with f the bath memory kernel from spectral.hpp. Everything else in the
// library (Kraus maps, Bloch vectors, two-qubit metrics) is a function of p.
#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "quench/spectral.hpp"

namespace quench::amplitude {

using cplx = std::complex<double>;

struct TimeGrid {
    double dt{0.01};
    std::size_t n_steps{100000};

    double t_max() const { return dt * static_cast<double>(n_steps); }
    double time(std::size_t k) const { return dt * static_cast<double>(k); }
    void validate() const;

    // Largest grid with the given step whose horizon does not exceed t_max
    // by more than half a step.
    static TimeGrid from_horizon(double dt, double t_max);
};

struct SolverOptions {
    // Drop history older than T_mem, where |f(T_mem)| < tail_epsilon * f(0).
    bool truncate_tail{false};
    double tail_epsilon{1e-8};
};

struct AmplitudeTrajectory {
    TimeGrid grid;
    std::vector<cplx> p;     // p(t_k), k = 0..n_steps
    std::vector<cplx> pdot;  // right-hand side evaluated at the accepted p(t_k)
};

// Second-order predictor-corrector with trapezoidal convolution quadrature.
// Throws InstabilityError if |p| exceeds 1 + 1e-3 (step too coarse for f(0)).
AmplitudeTrajectory solve_amplitude(const spectral::KernelSpec& spec, const TimeGrid& grid,
                                    const SolverOptions& options = {});

// Number of kernel samples retained by the solver under `options`
// (n_steps + 1 when truncation is off).
std::size_t memory_length(const spectral::KernelSpec& spec, const TimeGrid& grid,
                          const SolverOptions& options);

struct RateTrajectory {
    std::vector<double> gamma;  // -Re(pdot / p)
    std::vector<double> shift;  // -Im(pdot / p)
    std::vector<bool> defined;  // false where |p| < p_floor
};

inline constexpr double default_p_floor = 1e-8;

RateTrajectory rates(const AmplitudeTrajectory& traj, double p_floor = default_p_floor);

// Time of the first sign change of gamma after it first becomes nonzero,
// located by linear interpolation between grid nodes. Only defined samples
// are considered.
std::optional<double> first_rate_sign_change(const AmplitudeTrajectory& traj, const RateTrajectory& r);

struct BoundStateResult {
    bool exists{false};
    double omega_b{0.0};    // only meaningful when exists
    double residue_z{0.0};  // only meaningful when exists
};

// Laplace-domain analysis: a real pole below the bath continuum exists iff
// omega0 < int J(w)/w dw. Its location solves
//     omega_b = omega0 - int_0^inf J(w) / (w - omega_b) dw
// and its weight is Z = [1 + int_0^inf J(w) / (w - omega_b)^2 dw]^-1, so
// |p(t)| -> Z at long times.
BoundStateResult bound_state_analysis(const spectral::KernelSpec& spec, double tol = 1e-10);

struct ConvergenceReport {
    double max_deviation{0.0};         // max |p_dt - p_dt/2| over shared nodes
    double refined_deviation{0.0};     // max |p_dt/2 - p_dt/4| over shared nodes
    std::optional<double> order;       // log2(max_deviation / refined_deviation)
};

ConvergenceReport convergence_report(const spectral::KernelSpec& spec, const TimeGrid& grid,
                                     const SolverOptions& options = {});

} // namespace quench::amplitude
