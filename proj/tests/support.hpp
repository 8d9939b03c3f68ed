#pragma once

// Independent oracles shared by the unit and acceptance suites.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <Eigen/Dense>

#include "mdqed/green.hpp"
#include "mdqed/material.hpp"

namespace oracle {

using cplx = std::complex<double>;

namespace detail {

inline double trampoline(double x, void* p) { return (*static_cast<std::function<double(double)>*>(p))(x); }

struct Workspace {
    explicit Workspace(std::size_t n) : w(gsl_integration_workspace_alloc(n)) {}
    ~Workspace() { gsl_integration_workspace_free(w); }
    gsl_integration_workspace* w;
};

inline void quiet() {
    static bool done = false;
    if (!done) {
        gsl_set_error_handler_off();
        done = true;
    }
}

} // namespace detail

// int_0^inf f(t) sin(omega t) dt via GSL QAWF.
inline double sine_transform(std::function<double(double)> f, double omega, double eps = 1e-11) {
    detail::quiet();
    detail::Workspace a(4000), c(4000);
    gsl_integration_qawo_table* tab = gsl_integration_qawo_table_alloc(omega, 1.0, GSL_INTEG_SINE, 60);
    gsl_function F{&detail::trampoline, &f};
    double result = 0.0, err = 0.0;
    gsl_integration_qawf(&F, 0.0, eps, 4000, a.w, c.w, tab, &result, &err);
    gsl_integration_qawo_table_free(tab);
    return result;
}

// Principal value of int_a^b f(x) / (x - c) dx via GSL QAWC.
inline double cauchy_pv(std::function<double(double)> f, double a, double b, double c, double eps = 1e-11) {
    detail::quiet();
    detail::Workspace ws(4000);
    gsl_function F{&detail::trampoline, &f};
    double result = 0.0, err = 0.0;
    gsl_integration_qawc(&F, a, b, c, 0.0, eps, 4000, ws.w, &result, &err);
    return result;
}

// Ordinary integral over [a, inf) via GSL QAGIU.
inline double integral_to_inf(std::function<double(double)> f, double a, double eps = 1e-11) {
    detail::quiet();
    detail::Workspace ws(4000);
    gsl_function F{&detail::trampoline, &f};
    double result = 0.0, err = 0.0;
    gsl_integration_qagiu(&F, a, 0.0, eps, 4000, ws.w, &result, &err);
    return result;
}

// Ordinary integral over [a, b] via GSL QAGS.
inline double integral(std::function<double(double)> f, double a, double b, double eps = 1e-12) {
    detail::quiet();
    detail::Workspace ws(4000);
    gsl_function F{&detail::trampoline, &f};
    double result = 0.0, err = 0.0;
    gsl_integration_qags(&F, a, b, 0.0, eps, 4000, ws.w, &result, &err);
    return result;
}

// Closed form of (1/2pi) int_0^inf chi_i(x) / (w - x) dx for Lorentz terms:
// chi_i splits into four simple poles, each integrated with a principal log.
inline cplx lorentz_z(const mdqed::Susceptibility& s, cplx w, bool upper_limit) {
    const cplx i(0.0, 1.0);
    cplx total = 0.0;
    auto log_minus_w = [&]() -> cplx {
        if (upper_limit && w.real() > 0) return cplx(std::log(w.real()), -mdqed::pi);
        return std::log(-w);
    };
    const cplx lmw = log_minus_w();
    for (const auto& t : s.terms) {
        const cplx root = std::sqrt(cplx(t.resonance * t.resonance - 0.25 * t.damping * t.damping, 0.0));
        const cplx p1 = root - 0.5 * i * t.damping, p2 = -root - 0.5 * i * t.damping;
        const cplx a = -t.strength / (p1 - p2) / (2.0 * i);
        const cplx b = t.strength / (std::conj(p1) - std::conj(p2)) / (2.0 * i);
        const cplx q[4] = {p1, p2, std::conj(p1), std::conj(p2)};
        const cplx c[4] = {a, -a, b, -b};
        for (int k = 0; k < 4; ++k) total += c[k] * (lmw - std::log(-q[k])) / (w - q[k]);
    }
    return total / (2.0 * mdqed::pi);
}

// Tensor-product Gauss-Legendre integral of f over an axis-aligned box, with
// the nodes taken from GSL's fixed tables.
template <class F>
auto box_integral(const mdqed::Vec3& lo, const mdqed::Vec3& hi, std::size_t n, F&& f) {
    gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(n);
    std::array<std::vector<double>, 3> x, w;
    for (int a = 0; a < 3; ++a) {
        x[a].resize(n);
        w[a].resize(n);
        for (std::size_t i = 0; i < n; ++i) gsl_integration_glfixed_point(lo[a], hi[a], i, &x[a][i], &w[a][i], t);
    }
    gsl_integration_glfixed_table_free(t);
    decltype(f(mdqed::Vec3::Zero())) sum{};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                sum += (w[0][i] * w[1][j] * w[2][k]) * f(mdqed::Vec3(x[0][i], x[1][j], x[2][k]));
    return sum;
}

// Raw double sum over photonic mode pairs,
//   (4 e^2 / eps0 V) sum sqrt(w_n^3 w_n') u_n(R) W_nn' u_n'(R) / ([w - w_n (1 + W_h)] [w - w_n']),
// with W from an independent GSL product rule and closed-form Z.
inline mdqed::Mat3c brute_force_dyadic(const mdqed::CavityGeometry& g, const mdqed::MediumLayout& lay, const mdqed::Vec3& R,
                                       const mdqed::Frequency& f, const mdqed::ModeBasisConfig& c, std::size_t pts = 20) {
    using namespace mdqed;
    const auto modes = photon_modes(enumerate_modes(g, c));
    const std::size_t P = modes.size();
    Eigen::MatrixXcd W = Eigen::MatrixXcd::Zero(P, P);
    cplx wh = 0.0;
    for (const auto& r : lay.regions) {
        const cplx ze = lorentz_z(r.electric, f.w, f.upper_limit), zm = lorentz_z(r.magnetic, f.w, f.upper_limit);
        wh += r.box.volume() / g.volume() * (ze + zm);
        Eigen::MatrixXd uu = Eigen::MatrixXd::Zero(P, P), ss = Eigen::MatrixXd::Zero(P, P);
        gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(pts);
        std::array<std::vector<double>, 3> xs, ws;
        for (int a = 0; a < 3; ++a) {
            xs[a].resize(pts);
            ws[a].resize(pts);
            for (std::size_t i = 0; i < pts; ++i)
                gsl_integration_glfixed_point(r.box.lo[a], r.box.hi[a], i, &xs[a][i], &ws[a][i], t);
        }
        gsl_integration_glfixed_table_free(t);
        Eigen::MatrixXd U(3, P), S(3, P);
        for (std::size_t i = 0; i < pts; ++i)
            for (std::size_t j = 0; j < pts; ++j)
                for (std::size_t k = 0; k < pts; ++k) {
                    const Vec3 x(xs[0][i], xs[1][j], xs[2][k]);
                    for (std::size_t p = 0; p < P; ++p) {
                        U.col(p) = mode_function(g, modes[p].n, modes[p].lambda, FieldKind::u, x);
                        S.col(p) = mode_function(g, modes[p].n, modes[p].lambda, FieldKind::s, x);
                    }
                    const double w = ws[0][i] * ws[1][j] * ws[2][k];
                    uu += w * U.transpose() * U;
                    ss += w * S.transpose() * S;
                }
        for (std::size_t a = 0; a < P; ++a)
            for (std::size_t b = 0; b < P; ++b)
                W(a, b) += 8.0 / g.volume() * std::sqrt(modes[b].omega / modes[a].omega) * (ze * uu(a, b) + zm * ss(a, b));
    }
    Mat3c G = Mat3c::Zero();
    for (std::size_t a = 0; a < P; ++a) {
        const Vec3 ua = mode_function(g, modes[a].n, modes[a].lambda, FieldKind::u, R);
        const cplx da = f.w - modes[a].omega * (1.0 + wh);
        for (std::size_t b = 0; b < P; ++b) {
            const Vec3 ub = mode_function(g, modes[b].n, modes[b].lambda, FieldKind::u, R);
            const cplx db = f.w - modes[b].omega;
            const double num = std::sqrt(std::pow(modes[a].omega, 3) * modes[b].omega);
            G += (num * W(a, b) / (da * db)) * (ua * ub.transpose()).cast<cplx>();
        }
    }
    return 4.0 / g.volume() * G;
}

} // namespace oracle
