#include "quench/amplitude.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "quench/errors.hpp"
#include "quench/quadrature.hpp"

namespace quench::amplitude {

namespace {

constexpr double instability_threshold = 1.0 + 1e-3;

// Steps are processed in blocks; history older than the block start is swept
// once per block into per-step accumulators, so the kernel window for a block
// stays in cache. Every accumulator sums over j in increasing order.
constexpr std::size_t block_size = 64;

} // namespace

void TimeGrid::validate() const {
    if (!(std::isfinite(dt) && dt > 0.0)) throw DomainError("time step dt must be > 0");
    if (n_steps < 1) throw DomainError("time grid needs at least one step");
}

TimeGrid TimeGrid::from_horizon(double dt, double t_max) {
    if (!(std::isfinite(dt) && dt > 0.0)) throw DomainError("time step dt must be > 0");
    if (!(std::isfinite(t_max) && t_max > 0.0)) throw DomainError("horizon t_max must be > 0");
    const auto n = static_cast<std::size_t>(std::llround(t_max / dt));
    return TimeGrid{dt, std::max<std::size_t>(n, 1)};
}

std::size_t memory_length(const spectral::KernelSpec& spec, const TimeGrid& grid, const SolverOptions& options) {
    const std::size_t full = grid.n_steps + 1;
    if (!options.truncate_tail) return full;
    // |f(t)| = f(0) (1 + (w_c t)^2)^(-(s+1)/2) is monotone, so invert it directly.
    const auto& sp = spec.spectral;
    const double ratio = std::pow(options.tail_epsilon, -2.0 / (sp.s + 1.0));
    const double t_mem = std::sqrt(std::max(ratio - 1.0, 0.0)) / sp.omega_c;
    const double steps = std::ceil(t_mem / grid.dt) + 1.0;
    if (steps >= static_cast<double>(full)) return full;
    return static_cast<std::size_t>(steps);
}

AmplitudeTrajectory solve_amplitude(const spectral::KernelSpec& spec, const TimeGrid& grid,
                                    const SolverOptions& options) {
    spec.validate();
    grid.validate();
    const std::size_t n_nodes = grid.n_steps + 1;
    const double dt = grid.dt;
    const std::size_t memory = memory_length(spec, grid, options);

    std::vector<double> fr(memory), fi(memory);
    for (std::size_t m = 0; m < memory; ++m) {
        const cplx f = spectral::kernel_closed_form(spec, grid.time(m));
        fr[m] = f.real();
        fi[m] = f.imag();
    }
    const cplx f0{fr[0], fi[0]};

    std::vector<double> pr(n_nodes, 0.0), pi(n_nodes, 0.0);
    AmplitudeTrajectory out{grid, std::vector<cplx>(n_nodes), std::vector<cplx>(n_nodes)};
    pr[0] = 1.0;
    out.p[0] = {1.0, 0.0};
    out.pdot[0] = {0.0, 0.0};

    // Lags m = n - j are kept only while m < memory.
    auto lag_ok = [&](std::size_t n, std::size_t j) { return n - j < memory; };
    auto term = [&](std::size_t n, std::size_t j) {
        const std::size_t m = n - j;
        return cplx{fr[m] * pr[j] - fi[m] * pi[j], fr[m] * pi[j] + fi[m] * pr[j]};
    };

    std::array<double, block_size> acc_r{}, acc_i{};
    for (std::size_t n0 = 1; n0 < n_nodes; n0 += block_size) {
        const std::size_t width = std::min(block_size, n_nodes - n0);
        const std::size_t n_last = n0 + width - 1;

        // Old history j in [j_common, n0) lies within memory for every step of the block.
        const std::size_t j_common = (n_last >= memory) ? std::max<std::size_t>(1, n_last - memory + 1) : 1;
        acc_r.fill(0.0);
        acc_i.fill(0.0);
        for (std::size_t j = j_common; j < n0; ++j) {
            const double xr = pr[j];
            const double xi = pi[j];
            const double* __restrict kr = fr.data() + (n0 - j);
            const double* __restrict ki = fi.data() + (n0 - j);
            for (std::size_t b = 0; b < width; ++b) {
                acc_r[b] += kr[b] * xr - ki[b] * xi;
                acc_i[b] += kr[b] * xi + ki[b] * xr;
            }
        }

        for (std::size_t b = 0; b < width; ++b) {
            const std::size_t n = n0 + b;
            // History part of the trapezoid: dt [f_n p_0 / 2 + sum_{j=1}^{n-1} f_{n-j} p_j].
            const std::size_t j_lo = (n >= memory) ? n - memory + 1 : 1;
            cplx history{0.0, 0.0};
            if (lag_ok(n, 0)) history += 0.5 * cplx{fr[n], fi[n]};
            for (std::size_t j = j_lo; j < std::min(j_common, n0); ++j) history += term(n, j);
            history += cplx{acc_r[b], acc_i[b]};
            for (std::size_t j = std::max(n0, j_lo); j < n; ++j) history += term(n, j);
            history *= dt;

            const cplx p_prev = out.p[n - 1];
            const cplx pdot_prev = out.pdot[n - 1];
            const cplx p_pred = p_prev + dt * pdot_prev;
            const cplx pdot_pred = -(history + 0.5 * dt * f0 * p_pred);
            const cplx p_new = p_prev + 0.5 * dt * (pdot_prev + pdot_pred);

            if (!(std::abs(p_new) <= instability_threshold)) {
                std::ostringstream msg;
                msg << "solve_amplitude: |p| = " << std::abs(p_new) << " at t = " << grid.time(n)
                    << " exceeds 1 + 1e-3; dt = " << dt << " is too large for f(0) = " << f0.real();
                throw InstabilityError(msg.str());
            }
            out.p[n] = p_new;
            out.pdot[n] = -(history + 0.5 * dt * f0 * p_new);
            pr[n] = p_new.real();
            pi[n] = p_new.imag();
        }
    }
    return out;
}

RateTrajectory rates(const AmplitudeTrajectory& traj, double p_floor) {
    if (!(p_floor > 0.0)) throw DomainError("rates: p_floor must be > 0");
    const std::size_t n = traj.p.size();
    RateTrajectory r{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<bool>(n, false)};
    for (std::size_t k = 0; k < n; ++k) {
        if (std::abs(traj.p[k]) < p_floor) continue;
        const cplx ratio = traj.pdot[k] / traj.p[k];
        r.gamma[k] = -ratio.real();
        r.shift[k] = -ratio.imag();
        r.defined[k] = true;
    }
    return r;
}

std::optional<double> first_rate_sign_change(const AmplitudeTrajectory& traj, const RateTrajectory& r) {
    std::optional<std::size_t> last;
    for (std::size_t k = 0; k < r.gamma.size(); ++k) {
        if (!r.defined[k] || r.gamma[k] == 0.0) continue;
        if (last && (r.gamma[*last] > 0.0) != (r.gamma[k] > 0.0)) {
            const double g0 = r.gamma[*last];
            const double g1 = r.gamma[k];
            const double t0 = traj.grid.time(*last);
            const double t1 = traj.grid.time(k);
            return t0 + (t1 - t0) * g0 / (g0 - g1);
        }
        last = k;
    }
    return std::nullopt;
}

namespace {

// int_0^inf J(w) / (w - wb)^power dw for wb < 0, power in {1, 2}.
double resolvent_moment(const spectral::SpectralParams& sp, double wb, int power, double tol) {
    const double es = spectral::eta_s(sp);
    const double denom_floor = -wb / sp.omega_c;
    // Beyond x = 1 the denominator exceeds 1, so the tail is at most
    // prefactor * Gamma(s + 1, X).
    const double prefactor = es * std::pow(sp.omega_c, 2.0 - power);
    const double x_max = spectral::tail_cutoff(sp.s, prefactor, 0.1 * tol);
    auto integrand = [&](double x) -> cplx {
        const double d = x + denom_floor;
        return {prefactor * std::pow(x, sp.s) * std::exp(-x) / std::pow(d, power), 0.0};
    };
    // Panels of unit width plus a geometric refinement toward x = 0, where the
    // integrand may be sharply peaked when wb is close to the band edge.
    std::vector<double> cuts{0.0};
    for (double c = std::min(1.0, std::max(denom_floor, 1e-12)); c < 1.0; c *= 4.0) cuts.push_back(c);
    for (double c = 1.0; c < x_max; c += 1.0) cuts.push_back(c);
    cuts.push_back(x_max);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    const double budget = 0.9 * tol / static_cast<double>(cuts.size() - 1);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        sum += quad::integrate(integrand, cuts[i], cuts[i + 1], budget).value.real();
    }
    return sum;
}

} // namespace

BoundStateResult bound_state_analysis(const spectral::KernelSpec& spec, double tol) {
    if (!(tol > 0.0)) throw DomainError("bound_state_analysis: tol must be > 0");
    spec.validate();
    const auto& sp = spec.spectral;
    if (!(spec.omega0 < spectral::bath_inverse_moment(sp))) return {};

    // g is strictly increasing on (-inf, 0) with g(0-) > 0 by the test above.
    auto g = [&](double wb) { return wb - spec.omega0 + resolvent_moment(sp, wb, 1, tol); };
    double width = sp.omega_c;
    while (g(-width) >= 0.0) {
        width *= 2.0;
        if (width > 1e12 * sp.omega_c) throw BracketError("bound_state_analysis: could not bracket the pole");
    }
    double lo = -width;
    double hi = 0.0;
    const double x_tol = 1e-10 * sp.omega_c;
    while (hi - lo > x_tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (g(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    const double wb = 0.5 * (lo + hi);
    if (!(wb < 0.0)) throw BracketError("bound_state_analysis: pole collapsed onto the band edge");
    const double z = 1.0 / (1.0 + resolvent_moment(sp, wb, 2, tol));
    return {true, wb, z};
}

ConvergenceReport convergence_report(const spectral::KernelSpec& spec, const TimeGrid& grid,
                                     const SolverOptions& options) {
    grid.validate();
    const TimeGrid half{grid.dt / 2.0, grid.n_steps * 2};
    const TimeGrid quarter{grid.dt / 4.0, grid.n_steps * 4};
    const auto coarse = solve_amplitude(spec, grid, options);
    const auto mid = solve_amplitude(spec, half, options);
    const auto fine = solve_amplitude(spec, quarter, options);

    ConvergenceReport rep;
    for (std::size_t k = 0; k <= grid.n_steps; ++k) {
        rep.max_deviation = std::max(rep.max_deviation, std::abs(coarse.p[k] - mid.p[2 * k]));
    }
    for (std::size_t k = 0; k <= half.n_steps; ++k) {
        rep.refined_deviation = std::max(rep.refined_deviation, std::abs(mid.p[k] - fine.p[2 * k]));
    }
    if (rep.max_deviation > 0.0 && rep.refined_deviation > 0.0) {
        rep.order = std::log2(rep.max_deviation / rep.refined_deviation);
    }
    return rep;
}

} // namespace quench::amplitude
