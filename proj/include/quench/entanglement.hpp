// entanglement.hpp: two qubits under independent local amplitude damping.
//
// Basis order {|00>, |01>, |10>, |11>}, qubit A is the left factor.
#pragma once

#include <array>
#include <complex>
#include <cstdint>

#include <Eigen/Dense>

namespace quench::entanglement {

using cplx = std::complex<double>;

struct DensityMatrix4 {
    Eigen::Matrix4cd m{Eigen::Matrix4cd::Zero()};

    // Hermitian and unit trace to 1e-12, eigenvalues >= -1e-9.
    void validate() const;

    static DensityMatrix4 bell_phi_plus();
    static DensityMatrix4 bell_psi_plus();
    static DensityMatrix4 maximally_mixed();
    static DensityMatrix4 werner(double w);
};

struct XState {
    std::array<double, 4> d{};  // rho11, rho22, rho33, rho44
    cplx a{0.0, 0.0};           // rho14
    cplx b{0.0, 0.0};           // rho23

    DensityMatrix4 embed() const;
    void validate() const;
};

struct ChannelMetrics {
    double concurrence{0.0};
    double fidelity{0.0};
};

// Literal four-term Kraus sum over E_i^A (x) E_j^B on the dense matrix.
DensityMatrix4 evolve_pair(const DensityMatrix4& rho0, cplx p_a, cplx p_b);

// Throws ShapeError if any entry off the main and anti-diagonal reaches tol.
XState as_x_state(const DensityMatrix4& rho, double tol = 1e-12);

double concurrence_x(const XState& x);
double fidelity_x(const XState& x);

// General two-qubit concurrence from the eigenvalues of rho (Y(x)Y) rho* (Y(x)Y).
double wootters_concurrence(const DensityMatrix4& rho);

struct FefOptions {
    int starts{32};
    std::uint64_t seed{0x5eed};
};

// max over maximally entangled |e> = (I (x) U)|Phi+> of <e|rho|e>, by
// multi-start Nelder-Mead over the three Euler angles of U in SU(2).
double fully_entangled_fraction(const DensityMatrix4& rho, const FefOptions& options = {});

// Identical qubits starting in |Phi+>: C = |p|^4, F = [1 + max(1 + |p|^4, |p|^2 q^2)] / 3.
ChannelMetrics bell_channel_metrics(cplx p);

} // namespace quench::entanglement
