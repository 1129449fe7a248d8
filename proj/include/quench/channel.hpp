// channel.hpp: single-qubit amplitude-damping map parametrised by p(t).
//
// Basis {|0>, |1>} with |0> the upper level. In the interaction picture the
// map at time t has Kraus elements
//     E1 = [[p, 0], [0, 1]],   E2 = [[0, 0], [q, 0]],   q = sqrt(1 - |p|^2).
#pragma once

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace quench::channel {

using cplx = std::complex<double>;

struct DensityMatrix2 {
    double rho11{1.0};
    double rho22{0.0};
    cplx rho12{0.0, 0.0};

    Eigen::Matrix2cd matrix() const;
    static DensityMatrix2 from_matrix(const Eigen::Matrix2cd& m);

    // Throws DomainError on trace, sign or positivity violations beyond 1e-12.
    void validate() const;

    static DensityMatrix2 cat_state();
};

struct KrausPair {
    cplx p;
    double q;  // real and nonnegative; a phase on E2 would not be observable

    Eigen::Matrix2cd e1() const;
    Eigen::Matrix2cd e2() const;
};

// |p| <= 1 + 1e-6 is accepted; values above 1 are rescaled onto the unit
// circle and counted in clamp_count(). Larger |p| throws DomainError.
KrausPair kraus_pair(cplx p);

// Number of times kraus_pair has clamped a slightly super-unit |p|.
std::size_t clamp_count();

DensityMatrix2 evolve_single(const DensityMatrix2& rho0, cplx p);

struct BlochVector {
    double rx{0.0};
    double ry{0.0};
    double rz{0.0};

    double norm() const;
};

BlochVector bloch(const DensityMatrix2& rho0, cplx p);

// Pauli expectation values Tr(rho sigma).
BlochVector pauli_expectations(const DensityMatrix2& rho);

} // namespace quench::channel
