#include "quench/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "quench/errors.hpp"
#include "quench/quadrature.hpp"

namespace quench::spectral {

void SpectralParams::validate() const {
    if (!(std::isfinite(s) && s > 0.0)) throw DomainError("spectral power s must be finite and > 0");
    if (!(std::isfinite(eta0) && eta0 >= 0.0)) throw DomainError("coupling eta0 must be finite and >= 0");
    if (!(std::isfinite(omega_c) && omega_c > 0.0)) throw DomainError("cutoff omega_c must be finite and > 0");
}

void KernelSpec::validate() const {
    spectral.validate();
    if (!std::isfinite(omega0)) throw DomainError("omega0 must be finite");
}

double eta_s(const SpectralParams& params) {
    params.validate();
    return params.eta0 * std::pow(std::numbers::e / params.s, params.s);
}

double spectral_density(const SpectralParams& params, double omega) {
    if (!(omega >= 0.0)) throw DomainError("spectral_density: omega must be >= 0");
    const double x = omega / params.omega_c;
    if (x == 0.0) return 0.0;
    return eta_s(params) * params.omega_c * std::pow(x, params.s) * std::exp(-x);
}

std::complex<double> kernel_closed_form(const KernelSpec& spec, double t) {
    const auto& sp = spec.spectral;
    const double f0 = eta_s(sp) * std::tgamma(sp.s + 1.0) * sp.omega_c * sp.omega_c;
    // (1 + i w_c t)^-(s+1) in polar form; the argument atan(w_c t) stays inside
    // (-pi/2, pi/2), so this is the principal branch.
    const double wt = sp.omega_c * t;
    const double modulus = f0 * std::pow(1.0 + wt * wt, -0.5 * (sp.s + 1.0));
    const double phase = spec.omega0 * t - (sp.s + 1.0) * std::atan(wt);
    return std::polar(modulus, phase);
}

double tail_cutoff(double s, double prefactor, double tail) {
    if (prefactor <= 0.0) return 1.0;
    const double a = s + 1.0;
    double x = std::max(2.0 * a, 1.0);
    auto bound = [&](double X) {
        return prefactor * std::exp((a - 1.0) * std::log(X) - X) * X / (X - a + 1.0);
    };
    while (bound(x) > tail) x *= 1.25;
    return x;
}

std::complex<double> kernel_quadrature(const KernelSpec& spec, double t, double tol) {
    if (!(tol > 0.0)) throw DomainError("kernel_quadrature: tol must be > 0");
    spec.validate();
    const auto& sp = spec.spectral;
    const double scale = eta_s(sp) * sp.omega_c * sp.omega_c;
    if (scale == 0.0) return {0.0, 0.0};

    // Substitute w = w_c x; truncate where the tail weight drops below tol / 10.
    const double x_max = tail_cutoff(sp.s, scale, 0.1 * tol);
    const double wt = sp.omega_c * t;
    const double panel = std::min(1.0, std::abs(wt) > 0.0 ? std::numbers::pi / std::abs(wt) : 1.0);
    auto integrand = [&](double x) {
        const double amp = scale * std::pow(x, sp.s) * std::exp(-x);
        return std::polar(amp, (spec.omega0 - sp.omega_c * x) * t);
    };

    const auto n_panels = static_cast<std::size_t>(std::ceil(x_max / panel));
    const double budget = 0.9 * tol / static_cast<double>(n_panels);
    std::complex<double> sum{0.0, 0.0};
    double error = 0.0;
    for (std::size_t k = 0; k < n_panels; ++k) {
        const double a = static_cast<double>(k) * panel;
        const double b = std::min(x_max, a + panel);
        try {
            const auto est = quad::integrate(integrand, a, b, budget);
            sum += est.value;
            error += est.error;
        } catch (const QuadratureError& e) {
            throw QuadratureError("kernel_quadrature did not converge", error + e.achieved_error());
        }
    }
    return sum;
}

double bath_inverse_moment(const SpectralParams& params) {
    return eta_s(params) * std::tgamma(params.s) * params.omega_c;
}

} // namespace quench::spectral
