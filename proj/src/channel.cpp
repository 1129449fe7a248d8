#include "quench/channel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "quench/errors.hpp"

namespace quench::channel {

namespace {

constexpr double state_tol = 1e-12;
constexpr double clamp_tol = 1e-6;

std::atomic<std::size_t> clamp_counter{0};

} // namespace

Eigen::Matrix2cd DensityMatrix2::matrix() const {
    Eigen::Matrix2cd m;
    m << cplx{rho11, 0.0}, rho12, std::conj(rho12), cplx{rho22, 0.0};
    return m;
}

DensityMatrix2 DensityMatrix2::from_matrix(const Eigen::Matrix2cd& m) {
    return {m(0, 0).real(), m(1, 1).real(), m(0, 1)};
}

void DensityMatrix2::validate() const {
    if (!(std::isfinite(rho11) && std::isfinite(rho22) && std::isfinite(rho12.real()) &&
          std::isfinite(rho12.imag()))) {
        throw DomainError("density matrix has non-finite entries");
    }
    if (std::abs(rho11 + rho22 - 1.0) > state_tol) throw DomainError("density matrix trace differs from 1");
    if (rho11 < -state_tol || rho22 < -state_tol) throw DomainError("density matrix has negative population");
    if (rho11 * rho22 - std::norm(rho12) < -state_tol) throw DomainError("density matrix is not positive");
}

DensityMatrix2 DensityMatrix2::cat_state() { return {0.5, 0.5, {0.5, 0.0}}; }

Eigen::Matrix2cd KrausPair::e1() const {
    Eigen::Matrix2cd m;
    m << p, 0.0, 0.0, 1.0;
    return m;
}

Eigen::Matrix2cd KrausPair::e2() const {
    Eigen::Matrix2cd m;
    m << 0.0, 0.0, q, 0.0;
    return m;
}

KrausPair kraus_pair(cplx p) {
    const double mag = std::abs(p);
    if (!std::isfinite(mag) || mag > 1.0 + clamp_tol) throw DomainError("kraus_pair: |p| exceeds 1");
    if (mag > 1.0) {
        p /= mag;
        clamp_counter.fetch_add(1, std::memory_order_relaxed);
    }
    return {p, std::sqrt(std::max(0.0, 1.0 - std::norm(p)))};
}

std::size_t clamp_count() { return clamp_counter.load(std::memory_order_relaxed); }

DensityMatrix2 evolve_single(const DensityMatrix2& rho0, cplx p) {
    rho0.validate();
    const KrausPair k = kraus_pair(p);
    const Eigen::Matrix2cd r = rho0.matrix();
    const Eigen::Matrix2cd e1 = k.e1();
    const Eigen::Matrix2cd e2 = k.e2();
    const Eigen::Matrix2cd out = e1 * r * e1.adjoint() + e2 * r * e2.adjoint();
    return DensityMatrix2::from_matrix(out);
}

double BlochVector::norm() const { return std::sqrt(rx * rx + ry * ry + rz * rz); }

BlochVector bloch(const DensityMatrix2& rho0, cplx p) {
    rho0.validate();
    const KrausPair k = kraus_pair(p);
    const cplx coherence = k.p * rho0.rho12;
    return {2.0 * coherence.real(), -2.0 * coherence.imag(), 2.0 * std::norm(k.p) * rho0.rho11 - 1.0};
}

BlochVector pauli_expectations(const DensityMatrix2& rho) {
    // Tr(rho X) = 2 Re rho12, Tr(rho Y) = -2 Im rho12, Tr(rho Z) = rho11 - rho22.
    return {2.0 * rho.rho12.real(), -2.0 * rho.rho12.imag(), rho.rho11 - rho.rho22};
}

} // namespace quench::channel
