#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "mdqed/quadrature.hpp"
#include "mdqed/units.hpp"

namespace mdqed {

// chi(w) = strength / (resonance^2 - w^2 - i damping w)
struct LorentzOscillator {
    double strength = 0.0;   // omega_p^2
    double resonance = 1.0;  // omega_T
    double damping = 0.1;    // gamma

    void validate() const {
        require(strength >= 0, ErrorCode::invalid_argument, "Lorentz strength must be non-negative");
        require(resonance > 0, ErrorCode::invalid_argument, "Lorentz resonance must be positive");
        require(damping > 0, ErrorCode::invalid_argument, "Lorentz damping must be positive");
    }
};

// Additive sum of Lorentz terms. No terms means an identically zero response.
struct Susceptibility {
    std::vector<LorentzOscillator> terms;

    static Susceptibility zero() { return {}; }
    static Susceptibility lorentz(double strength, double resonance, double damping) {
        return Susceptibility{{LorentzOscillator{strength, resonance, damping}}};
    }

    bool is_zero() const {
        for (const auto& t : terms)
            if (t.strength > 0) return false;
        return true;
    }
    void validate() const {
        for (const auto& t : terms) t.validate();
    }
    Susceptibility scaled(double factor) const {
        Susceptibility out = *this;
        for (auto& t : out.terms) t.strength *= factor;
        return out;
    }
};

enum class ResponseKind { electric, magnetic };

inline cplx chi_freq(const Susceptibility& s, cplx w) {
    cplx sum = 0.0;
    for (const auto& t : s.terms) sum += t.strength / (t.resonance * t.resonance - w * w - I * t.damping * w);
    return sum;
}

inline cplx chi_freq(const Susceptibility& s, double omega) { return chi_freq(s, cplx(omega, 0.0)); }

inline double chi_imag(const Susceptibility& s, double omega) {
    double sum = 0.0;
    for (const auto& t : s.terms) {
        const double a = t.resonance * t.resonance - omega * omega;
        const double b = t.damping * omega;
        sum += t.strength * b / (a * a + b * b);
    }
    return sum;
}

inline double chi_time(const Susceptibility& s, double t) {
    if (t <= 0) return 0.0;
    double sum = 0.0;
    for (const auto& o : s.terms) {
        const double half = 0.5 * o.damping;
        const double disc = o.resonance * o.resonance - half * half;
        if (disc > 1e-14 * o.resonance * o.resonance) {
            const double w = std::sqrt(disc);
            sum += o.strength * std::exp(-half * t) * std::sin(w * t) / w;
        } else if (disc < -1e-14 * o.resonance * o.resonance) {
            // overdamped: sinh branch written as a difference of decaying exponentials
            const double w = std::sqrt(-disc);
            sum += o.strength * 0.5 * (std::exp(-(half - w) * t) - std::exp(-(half + w) * t)) / w;
        } else {
            sum += o.strength * t * std::exp(-half * t);
        }
    }
    return sum;
}

inline double coupling_f_squared(const Susceptibility& s, double omega, const UnitsConfig& units = {},
                                 double c = 1.0) {
    require(omega >= 0, ErrorCode::invalid_argument, "coupling function needs omega >= 0");
    if (omega == 0.0) return 0.0;
    return units.hbar * c * c * c * units.eps0 * chi_imag(s, omega) / (4.0 * pi * pi * omega * omega);
}

inline double coupling_g_squared(const Susceptibility& s, double omega, const UnitsConfig& units = {},
                                 double c = 1.0) {
    require(omega >= 0, ErrorCode::invalid_argument, "coupling function needs omega >= 0");
    if (omega == 0.0) return 0.0;
    return units.hbar * c * c * c * chi_imag(s, omega) / (4.0 * pi * pi * units.mu0 * omega * omega);
}

struct CauchyOptions {
    double window = 0.5;       // half-width of the subtraction window, relative to Re w
    double tail_factor = 50.0; // analytic tail beyond tail_factor * max(resonances, |w|)
    double tol = 1e-12;
};

// Asymptotic power-law tail h(x) ~ sum_k coef_k x^-power_k.
struct PowerTail {
    std::vector<std::pair<double, int>> terms;
};

namespace detail {

// int_L^inf x^-p / (w - x) dx for |w| < L.
inline cplx power_tail_integral(int p, cplx w, double L) {
    cplx sum = 0.0, wk = 1.0;
    for (int j = 0; j < 400; ++j) {
        const cplx term = wk / ((p + j) * std::pow(L, p + j));
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
        wk *= w;
    }
    return -sum;
}

} // namespace detail

// Computes int_0^inf h(x) / (w - x) dx. With `upper_limit`, w is real and the
// integral is the boundary value from the upper half-plane.
inline cplx cauchy_half_line(const std::function<double(double)>& h, cplx w, bool upper_limit,
                             const std::vector<double>& features, const PowerTail& tail, const CauchyOptions& opt = {}) {
    double scale = std::abs(w);
    for (double f : features) scale = std::max(scale, std::abs(f));
    require(scale > 0, ErrorCode::invalid_argument, "cauchy integral needs a nonzero scale");
    const double big = opt.tail_factor * scale;

    const double x0 = w.real();
    const bool on_axis = w.imag() == 0.0;
    if (on_axis && x0 > 0) {
        require(upper_limit, ErrorCode::on_axis, "argument lies on the positive real axis; request the w + i0 limit");
    }

    auto plain = [&](double a, double b) -> cplx {
        if (b <= a) return 0.0;
        auto f = [&](double x) -> cplx { return h(x) / (w - x); };
        return integrate_adaptive(f, a, b, features, opt.tol);
    };

    cplx total = 0.0;
    if (x0 > 0) {
        const double hw = std::min(opt.window, 1.0) * x0;
        const double a = x0 - hw, b = x0 + hw;
        const double h0 = h(x0);
        total += plain(0.0, a);
        auto sub = [&](double x) -> cplx { return (h(x) - h0) / (w - x); };
        std::vector<double> inner = features;
        inner.push_back(x0);
        total += integrate_adaptive(sub, a, b, inner, opt.tol);
        cplx logterm;
        if (on_axis) {
            logterm = cplx(0.0, -pi);  // log(h) - log(-h + i0)
        } else {
            logterm = std::log(w - a) - std::log(w - b);
        }
        total += h0 * logterm;
        total += plain(b, big);
    } else {
        total += plain(0.0, big);
    }
    for (const auto& [coef, power] : tail.terms) total += coef * detail::power_tail_integral(power, w, big);
    return total;
}

namespace detail {

inline std::vector<double> resonance_features(const Susceptibility& s) {
    std::vector<double> out;
    for (const auto& t : s.terms) {
        out.push_back(t.resonance);
        out.push_back(std::max(t.resonance - 2.0 * t.damping, 0.5 * t.resonance));
        out.push_back(t.resonance + 2.0 * t.damping);
    }
    return out;
}

inline PowerTail chi_imag_tail(const Susceptibility& s) {
    double a3 = 0.0, a5 = 0.0;
    for (const auto& t : s.terms) {
        a3 += t.strength * t.damping;
        a5 += t.strength * t.damping * (2.0 * t.resonance * t.resonance - t.damping * t.damping);
    }
    return PowerTail{{{a3, 3}, {a5, 5}}};
}

} // namespace detail

// Z(w) = (1/2pi) int_0^inf chi_i(x) / (w - x) dx
inline cplx z_function(const Susceptibility& s, const Frequency& freq, const CauchyOptions& opt = {}) {
    if (s.is_zero()) return 0.0;
    const cplx w = freq.w;
    if (freq.upper_limit) {
        require(w.imag() == 0.0, ErrorCode::invalid_argument, "upper-limit evaluation expects a real frequency");
    } else {
        require(!(w.imag() == 0.0 && w.real() > 0.0), ErrorCode::on_axis,
                "Z evaluated on the positive real axis without the w + i0 limit flag");
    }
    auto h = [&s](double x) { return chi_imag(s, x); };
    return cauchy_half_line(h, w, freq.upper_limit, detail::resonance_features(s), detail::chi_imag_tail(s), opt) /
           (2.0 * pi);
}

inline cplx z_function(const Susceptibility& s, cplx w, const CauchyOptions& opt = {}) {
    return z_function(s, Frequency::at(w), opt);
}

// Real part of chi reconstructed from its imaginary part on the half line.
inline double kramers_kronig_real(const Susceptibility& s, double omega, const CauchyOptions& opt = {}) {
    require(omega > 0, ErrorCode::invalid_argument, "Kramers-Kronig reconstruction needs omega > 0");
    if (s.is_zero()) return 0.0;
    auto h = [&s](double x) { return chi_imag(s, x); };
    const auto feats = detail::resonance_features(s);
    const auto tail = detail::chi_imag_tail(s);
    const cplx plus = cauchy_half_line(h, cplx(omega, 0.0), true, feats, tail, opt);
    const cplx minus = cauchy_half_line(h, cplx(-omega, 0.0), false, feats, tail, opt);
    return (-plus.real() - minus.real()) / pi;
}

} // namespace mdqed
