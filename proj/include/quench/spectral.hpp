// spectral.hpp: power-law bath with exponential cutoff and its memory kernel.
//
// J(w) = eta_s * w * (w / w_c)^(s - 1) * exp(-w / w_c),  eta_s = eta0 * (e / s)^s
//
// The (e/s)^s normalisation pins the peak of J at w = s * w_c to eta0 * w_c for
// every s. Frequencies are in units of w_c and times in units of 1 / w_c; the
// omega_c field is kept explicit so the formulas stay dimensionally honest.
#pragma once

#include <complex>

namespace quench::spectral {

struct SpectralParams {
    double s{1.0};        // power: sub-Ohmic < 1 < super-Ohmic
    double eta0{0.0};     // coupling strength
    double omega_c{1.0};  // cutoff frequency

    // Throws DomainError unless s > 0, eta0 >= 0, omega_c > 0 (all finite).
    void validate() const;
};

struct KernelSpec {
    SpectralParams spectral;
    double omega0{0.1};  // qubit level separation

    void validate() const;
};

double eta_s(const SpectralParams& params);

// Evaluated as eta_s * w_c * x^s * exp(-x) with x = w / w_c so that w = 0 is
// exactly 0 for s < 1. Negative omega throws DomainError.
double spectral_density(const SpectralParams& params, double omega);

// f(t) = int_0^inf J(w) exp(i (w0 - w) t) dw
//      = eta_s Gamma(s+1) w_c^2 exp(i w0 t) / (1 + i w_c t)^(s+1)
std::complex<double> kernel_closed_form(const KernelSpec& spec, double t);

// Direct numerical integration of the defining integral, used as an oracle for
// kernel_closed_form. Throws QuadratureError if |error| cannot be pushed
// below tol.
std::complex<double> kernel_quadrature(const KernelSpec& spec, double t, double tol);

// int_0^inf J(w) / w dw = eta_s Gamma(s) w_c.
double bath_inverse_moment(const SpectralParams& params);

// Upper cutoff X (in units of w_c) such that the spectral weight beyond X,
// int_X^inf x^s e^{-x} dx, is bounded by `tail` after multiplication by
// `prefactor`. Uses Gamma(a, X) <= X^(a-1) e^{-X} X / (X - a + 1) for X > a - 1.
double tail_cutoff(double s, double prefactor, double tail);

} // namespace quench::spectral
