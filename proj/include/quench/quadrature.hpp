// quadrature.hpp: adaptive Gauss-Kronrod (7/15) with an absolute error target.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include "quench/errors.hpp"

namespace quench::quad {

struct Estimate {
    std::complex<double> value;
    double error;
};

namespace detail {

inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the 7-point rule living on the odd Kronrod nodes.
inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
Estimate gk15(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const std::complex<double> fc = f(c);
    std::complex<double> kronrod = kronrod_weights[7] * fc;
    std::complex<double> gauss = gauss_weights[3] * fc;
    for (std::size_t i = 0; i < 7; ++i) {
        const double dx = h * kronrod_nodes[i];
        const std::complex<double> pair = f(c - dx) + f(c + dx);
        kronrod += kronrod_weights[i] * pair;
        if (i % 2 == 1) gauss += gauss_weights[i / 2] * pair;
    }
    return {kronrod * h, std::abs((kronrod - gauss) * h)};
}

} // namespace detail

// Integrates a complex-valued f over [a, b] by bisection until the summed
// error estimate is below abs_tol. Throws QuadratureError when the panel
// budget is exhausted.
template <class F>
Estimate integrate(F&& f, double a, double b, double abs_tol, std::size_t max_panels = 20000) {
    struct Panel {
        double a, b;
        Estimate est;
    };
    std::vector<Panel> panels;
    panels.push_back({a, b, detail::gk15(f, a, b)});
    double total_error = panels.front().est.error;

    while (total_error > abs_tol) {
        if (panels.size() >= max_panels) {
            throw QuadratureError("adaptive quadrature did not converge", total_error);
        }
        std::size_t worst = 0;
        for (std::size_t i = 1; i < panels.size(); ++i) {
            if (panels[i].est.error > panels[worst].est.error) worst = i;
        }
        const Panel w = panels[worst];
        const double mid = 0.5 * (w.a + w.b);
        if (!(mid > w.a && mid < w.b)) {
            throw QuadratureError("adaptive quadrature hit floating-point resolution", total_error);
        }
        Panel left{w.a, mid, detail::gk15(f, w.a, mid)};
        Panel right{mid, w.b, detail::gk15(f, mid, w.b)};
        total_error += left.est.error + right.est.error - w.est.error;
        panels[worst] = left;
        panels.push_back(right);
    }

    // Sum in interval order so the result does not depend on refinement history.
    std::sort(panels.begin(), panels.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
    Estimate out{{0.0, 0.0}, 0.0};
    for (const auto& p : panels) {
        out.value += p.est.value;
        out.error += p.est.error;
    }
    return out;
}

} // namespace quench::quad
