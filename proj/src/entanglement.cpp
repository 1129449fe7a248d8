#include "quench/entanglement.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "quench/channel.hpp"
#include "quench/errors.hpp"

namespace quench::entanglement {

namespace {

constexpr double trace_tol = 1e-12;
constexpr double positivity_tol = 1e-9;

Eigen::Matrix4cd kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    Eigen::Matrix4cd out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

bool on_x(int i, int j) { return i == j || i + j == 3; }

// Minimal Nelder-Mead on R^3.
using Point = std::array<double, 3>;

std::pair<Point, double> nelder_mead(const std::function<double(const Point&)>& f, Point start, double step) {
    std::array<Point, 4> simplex;
    std::array<double, 4> val;
    simplex[0] = start;
    for (int i = 0; i < 3; ++i) {
        simplex[i + 1] = start;
        simplex[i + 1][i] += step;
    }
    for (int i = 0; i < 4; ++i) val[i] = f(simplex[i]);

    auto lerp = [](const Point& a, const Point& b, double t) {
        Point r;
        for (int i = 0; i < 3; ++i) r[i] = a[i] + t * (b[i] - a[i]);
        return r;
    };

    for (int iter = 0; iter < 4000; ++iter) {
        std::array<int, 4> order{0, 1, 2, 3};
        std::sort(order.begin(), order.end(), [&](int x, int y) { return val[x] < val[y]; });
        std::array<Point, 4> s2;
        std::array<double, 4> v2;
        for (int i = 0; i < 4; ++i) {
            s2[i] = simplex[order[i]];
            v2[i] = val[order[i]];
        }
        simplex = s2;
        val = v2;

        double size = 0.0;
        for (int i = 1; i < 4; ++i)
            for (int k = 0; k < 3; ++k) size = std::max(size, std::abs(simplex[i][k] - simplex[0][k]));
        if (val[3] - val[0] < 1e-15 && size < 1e-9) break;

        Point centroid{0.0, 0.0, 0.0};
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) centroid[k] += simplex[i][k] / 3.0;

        const Point reflected = lerp(centroid, simplex[3], -1.0);
        const double fr = f(reflected);
        if (fr < val[0]) {
            const Point expanded = lerp(centroid, simplex[3], -2.0);
            const double fe = f(expanded);
            if (fe < fr) {
                simplex[3] = expanded;
                val[3] = fe;
            } else {
                simplex[3] = reflected;
                val[3] = fr;
            }
        } else if (fr < val[2]) {
            simplex[3] = reflected;
            val[3] = fr;
        } else {
            const bool outside = fr < val[3];
            const Point contracted = outside ? lerp(centroid, reflected, 0.5) : lerp(centroid, simplex[3], 0.5);
            const double fc = f(contracted);
            if (fc < std::min(fr, val[3])) {
                simplex[3] = contracted;
                val[3] = fc;
            } else {
                for (int i = 1; i < 4; ++i) {
                    simplex[i] = lerp(simplex[0], simplex[i], 0.5);
                    val[i] = f(simplex[i]);
                }
            }
        }
    }
    const auto best = std::min_element(val.begin(), val.end()) - val.begin();
    return {simplex[best], val[best]};
}

} // namespace

void DensityMatrix4::validate() const {
    if (!m.allFinite()) throw DomainError("density matrix has non-finite entries");
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > trace_tol) throw DomainError("density matrix is not Hermitian");
    if (std::abs(m.trace() - cplx{1.0, 0.0}) > trace_tol) throw DomainError("density matrix trace differs from 1");
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("density matrix eigensolver failed");
    if (es.eigenvalues().minCoeff() < -positivity_tol) throw DomainError("density matrix is not positive");
}

DensityMatrix4 DensityMatrix4::bell_phi_plus() {
    DensityMatrix4 r;
    r.m(0, 0) = r.m(0, 3) = r.m(3, 0) = r.m(3, 3) = 0.5;
    return r;
}

DensityMatrix4 DensityMatrix4::bell_psi_plus() {
    DensityMatrix4 r;
    r.m(1, 1) = r.m(1, 2) = r.m(2, 1) = r.m(2, 2) = 0.5;
    return r;
}

DensityMatrix4 DensityMatrix4::maximally_mixed() {
    DensityMatrix4 r;
    r.m = 0.25 * Eigen::Matrix4cd::Identity();
    return r;
}

DensityMatrix4 DensityMatrix4::werner(double w) {
    DensityMatrix4 r;
    r.m = w * bell_phi_plus().m + (1.0 - w) * maximally_mixed().m;
    return r;
}

DensityMatrix4 XState::embed() const {
    DensityMatrix4 r;
    for (int i = 0; i < 4; ++i) r.m(i, i) = d[static_cast<std::size_t>(i)];
    r.m(0, 3) = a;
    r.m(3, 0) = std::conj(a);
    r.m(1, 2) = b;
    r.m(2, 1) = std::conj(b);
    return r;
}

void XState::validate() const {
    double sum = 0.0;
    for (double v : d) {
        if (!std::isfinite(v) || v < -positivity_tol) throw DomainError("X state has a negative population");
        sum += v;
    }
    if (std::abs(sum - 1.0) > trace_tol) throw DomainError("X state trace differs from 1");
    if (d[0] * d[3] < std::norm(a) - positivity_tol) throw DomainError("X state outer block is not positive");
    if (d[1] * d[2] < std::norm(b) - positivity_tol) throw DomainError("X state inner block is not positive");
}

DensityMatrix4 evolve_pair(const DensityMatrix4& rho0, cplx p_a, cplx p_b) {
    rho0.validate();
    const channel::KrausPair ka = channel::kraus_pair(p_a);
    const channel::KrausPair kb = channel::kraus_pair(p_b);
    const std::array<Eigen::Matrix2cd, 2> ea{ka.e1(), ka.e2()};
    const std::array<Eigen::Matrix2cd, 2> eb{kb.e1(), kb.e2()};
    DensityMatrix4 out;
    for (const auto& a : ea) {
        for (const auto& b : eb) {
            const Eigen::Matrix4cd k = kron(a, b);
            out.m += k * rho0.m * k.adjoint();
        }
    }
    return out;
}

XState as_x_state(const DensityMatrix4& rho, double tol) {
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            if (!on_x(i, j) && !(std::abs(rho.m(i, j)) < tol)) {
                throw ShapeError("as_x_state: matrix has weight outside the X pattern");
            }
        }
    }
    XState x;
    for (int i = 0; i < 4; ++i) x.d[static_cast<std::size_t>(i)] = rho.m(i, i).real();
    x.a = rho.m(0, 3);
    x.b = rho.m(1, 2);
    return x;
}

double concurrence_x(const XState& x) {
    const double outer = std::abs(x.a) - std::sqrt(std::max(0.0, x.d[1] * x.d[2]));
    const double inner = std::abs(x.b) - std::sqrt(std::max(0.0, x.d[0] * x.d[3]));
    return 2.0 * std::max({0.0, outer, inner});
}

double fidelity_x(const XState& x) {
    const double outer = x.d[0] + x.d[3] + 2.0 * std::abs(x.a);
    const double inner = x.d[1] + x.d[2] + 2.0 * std::abs(x.b);
    return (1.0 + std::max(outer, inner)) / 3.0;
}

double wootters_concurrence(const DensityMatrix4& rho) {
    Eigen::Matrix2cd y;
    y << 0.0, cplx{0.0, -1.0}, cplx{0.0, 1.0}, 0.0;
    const Eigen::Matrix4cd yy = kron(y, y);
    const Eigen::Matrix4cd flipped = yy * rho.m.conjugate() * yy;
    const Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(rho.m * flipped, false);
    if (es.info() != Eigen::Success) throw NumericalError("wootters_concurrence: eigensolver failed");
    std::array<double, 4> lam;
    for (int i = 0; i < 4; ++i) lam[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, es.eigenvalues()(i).real()));
    std::sort(lam.begin(), lam.end(), std::greater<>());
    return std::max(0.0, lam[0] - lam[1] - lam[2] - lam[3]);
}

double fully_entangled_fraction(const DensityMatrix4& rho, const FefOptions& options) {
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    // (I (x) U)|Phi+> has components U(b, a) / sqrt(2) on |ab>.
    auto overlap = [&](const Point& angles) {
        const cplx ea = std::polar(1.0, 0.5 * angles[0]);
        const cplx ec = std::polar(1.0, 0.5 * angles[2]);
        const double cb = std::cos(0.5 * angles[1]);
        const double sb = std::sin(0.5 * angles[1]);
        // U = Rz(a) Ry(b) Rz(c)
        Eigen::Matrix2cd u;
        u << std::conj(ea) * cb * std::conj(ec), -std::conj(ea) * sb * ec, ea * sb * std::conj(ec), ea * cb * ec;
        Eigen::Vector4cd e;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) e(2 * a + b) = u(b, a) * inv_sqrt2;
        return -(e.adjoint() * rho.m * e)(0, 0).real();
    };

    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    double best = -2.0;
    for (int k = 0; k < std::max(1, options.starts); ++k) {
        const Point start{angle(rng), angle(rng), angle(rng)};
        const auto [x, v] = nelder_mead(overlap, start, 0.5);
        // A second pass from the converged point guards against a collapsed simplex.
        const auto [x2, v2] = nelder_mead(overlap, x, 0.05);
        best = std::max({best, -v, -v2});
    }
    return best;
}

ChannelMetrics bell_channel_metrics(cplx p) {
    const channel::KrausPair k = channel::kraus_pair(p);
    const double x = std::norm(k.p);
    const double c = x * x;
    const double f = (1.0 + std::max(1.0 + c, x * k.q * k.q)) / 3.0;
    return {c, f};
}

} // namespace quench::entanglement
