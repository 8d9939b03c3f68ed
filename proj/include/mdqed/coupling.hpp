#pragma once

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mdqed/geometry.hpp"
#include "mdqed/layout.hpp"
#include "mdqed/material.hpp"

namespace mdqed {

// Gauss-Legendre order that resolves products of two modes up to index nmax on
// an interval of the given length inside a side of length L.
inline std::size_t resolving_points(int configured, int nmax, double length, double L) {
    const double kappa = 2.0 * nmax * pi / L;
    const double need = 0.7 * kappa * 0.5 * length + 12.0;
    return static_cast<std::size_t>(std::max<double>(configured, std::ceil(need)));
}

// Separable overlap integrals of the trigonometric factors over a union of boxes.
//   ff(a, n, m) = int f_a(n, r) f_a(m, r) d^3r
//   gg(a, n, m) = int g_a(n, r) g_a(m, r) d^3r
class OverlapTables {
public:
    OverlapTables() = default;

    OverlapTables(const CavityGeometry& geom, const std::vector<Box>& boxes, const std::array<int, 3>& nmax,
                  int min_points)
        : nmax_(nmax) {
        for (const auto& b : boxes) {
            std::array<AxisTable, 3> axes;
            for (int a = 0; a < 3; ++a) axes[a] = build_axis(geom.L[a], b.lo[a], b.hi[a], nmax[a], min_points);
            boxes_.push_back(std::move(axes));
        }
    }

    double ff(int alpha, const ModeIndex& n, const ModeIndex& m) const { return product(alpha, n, m, true); }
    double gg(int alpha, const ModeIndex& n, const ModeIndex& m) const { return product(alpha, n, m, false); }

    const std::array<int, 3>& nmax() const { return nmax_; }
    bool empty() const { return boxes_.empty(); }

private:
    struct AxisTable {
        int stride = 0;
        std::vector<double> ss, cc;
        double s(int n, int m) const { return ss[n * stride + m]; }
        double c(int n, int m) const { return cc[n * stride + m]; }
    };

    static AxisTable build_axis(double L, double lo, double hi, int nmax, int min_points) {
        AxisTable t;
        t.stride = nmax + 1;
        t.ss.assign(t.stride * t.stride, 0.0);
        t.cc.assign(t.stride * t.stride, 0.0);
        const auto rule = gauss_legendre(resolving_points(min_points, nmax, hi - lo, L), lo, hi);
        const std::size_t q = rule.size();
        std::vector<double> sv(t.stride * q), cv(t.stride * q);
        for (int n = 0; n <= nmax; ++n)
            for (std::size_t i = 0; i < q; ++i) {
                const double arg = n * pi * rule.nodes[i] / L;
                sv[n * q + i] = std::sin(arg);
                cv[n * q + i] = std::cos(arg);
            }
        for (int n = 0; n <= nmax; ++n)
            for (int m = n; m <= nmax; ++m) {
                double s = 0.0, c = 0.0;
                for (std::size_t i = 0; i < q; ++i) {
                    s += rule.weights[i] * sv[n * q + i] * sv[m * q + i];
                    c += rule.weights[i] * cv[n * q + i] * cv[m * q + i];
                }
                t.ss[n * t.stride + m] = t.ss[m * t.stride + n] = s;
                t.cc[n * t.stride + m] = t.cc[m * t.stride + n] = c;
            }
        return t;
    }

    double product(int alpha, const ModeIndex& n, const ModeIndex& m, bool f_type) const {
        for (int a = 0; a < 3; ++a)
            require(n[a] <= nmax_[a] && m[a] <= nmax_[a], ErrorCode::mode_index, "mode outside overlap table range");
        double sum = 0.0;
        for (const auto& axes : boxes_) {
            double p = 1.0;
            for (int a = 0; a < 3; ++a) {
                const bool cosine = (a == alpha) == f_type;
                p *= cosine ? axes[a].c(n[a], m[a]) : axes[a].s(n[a], m[a]);
            }
            sum += p;
        }
        return sum;
    }

    std::array<int, 3> nmax_{0, 0, 0};
    std::vector<std::array<AxisTable, 3>> boxes_;
};

inline std::array<int, 3> max_indices(const std::vector<PhotonMode>& modes) {
    std::array<int, 3> m{1, 1, 1};
    for (const auto& p : modes)
        for (int a = 0; a < 3; ++a) m[a] = std::max(m[a], p.n[a]);
    return m;
}

inline std::vector<OverlapTables> region_tables(const CavityGeometry& geom, const MediumLayout& layout,
                                                const std::array<int, 3>& nmax, int min_points) {
    std::vector<OverlapTables> out;
    out.reserve(layout.regions.size());
    for (std::size_t i = 0; i < layout.regions.size(); ++i)
        out.emplace_back(geom, layout.domain(i), nmax, min_points);
    return out;
}

// (8/V) int u_p . u_q and (8/V) int s_p . s_q over one region's medium domain.
struct RegionOverlap {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
};

inline double overlap_uu(const OverlapTables& t, const PhotonMode& p, const PhotonMode& q) {
    double s = 0.0;
    for (int a = 0; a < 3; ++a) s += p.e[a] * q.e[a] * t.ff(a, p.n, q.n);
    return s;
}

inline double overlap_ss(const OverlapTables& t, const PhotonMode& p, const PhotonMode& q) {
    double s = 0.0;
    for (int a = 0; a < 3; ++a) s += p.sigma[a] * q.sigma[a] * t.gg(a, p.n, q.n);
    return s;
}

inline std::vector<RegionOverlap> region_overlaps(const CavityGeometry& geom, const MediumLayout& layout,
                                                  const std::vector<PhotonMode>& modes, int min_points) {
    const auto tables = region_tables(geom, layout, max_indices(modes), min_points);
    const double norm = 8.0 / geom.volume();
    const auto P = static_cast<Eigen::Index>(modes.size());
    std::vector<RegionOverlap> out;
    for (const auto& t : tables) {
        RegionOverlap r{Eigen::MatrixXd::Zero(P, P), Eigen::MatrixXd::Zero(P, P)};
        for (Eigen::Index i = 0; i < P; ++i)
            for (Eigen::Index j = i; j < P; ++j) {
                r.A(i, j) = r.A(j, i) = norm * overlap_uu(t, modes[i], modes[j]);
                r.B(i, j) = r.B(j, i) = norm * overlap_ss(t, modes[i], modes[j]);
            }
        out.push_back(std::move(r));
    }
    return out;
}

struct RegionResponse {
    cplx ze = 0.0;
    cplx zm = 0.0;
};

inline std::vector<RegionResponse> region_responses(const MediumLayout& layout, const Frequency& freq,
                                                    const CauchyOptions& opt = {}) {
    std::vector<RegionResponse> out;
    for (const auto& r : layout.regions) out.push_back({z_function(r.electric, freq, opt), z_function(r.magnetic, freq, opt)});
    return out;
}

inline PhotonMode make_photon_mode(const CavityGeometry& geom, const ModeIndex& n, int lambda,
                                   const ModeBasisConfig& cfg) {
    require(lambda == 1 || lambda == 2, ErrorCode::mode_index, "photonic branch must be 1 or 2");
    const auto pol = polarization_basis(geom, n, cfg.polarization_rotation);
    const Vec3 e = lambda == 1 ? pol.e1 : pol.e2;
    return {n, lambda, mode_frequency(geom, n), pol.khat, e, pol.khat.cross(e)};
}

inline cplx overlap_W(const CavityGeometry& geom, const MediumLayout& layout, const ModeIndex& n, int lambda,
                      const ModeIndex& np, int lambdap, const Frequency& freq, const ModeBasisConfig& cfg) {
    layout.validate(geom);
    const auto p = make_photon_mode(geom, n, lambda, cfg);
    const auto q = make_photon_mode(geom, np, lambdap, cfg);
    if (layout.empty()) return 0.0;
    const auto resp = region_responses(layout, freq);
    std::array<int, 3> nmax;
    for (int a = 0; a < 3; ++a) nmax[a] = std::max(n[a], np[a]);
    const auto tables = region_tables(geom, layout, nmax, cfg.quadrature_points);
    cplx sum = 0.0;
    for (std::size_t i = 0; i < tables.size(); ++i)
        sum += resp[i].ze * overlap_uu(tables[i], p, q) + resp[i].zm * overlap_ss(tables[i], p, q);
    return 8.0 / geom.volume() * std::sqrt(q.omega / p.omega) * sum;
}

struct CouplingMatrix {
    Eigen::MatrixXcd W;
    std::vector<PhotonMode> modes;
    Frequency freq;
};

inline CouplingMatrix coupling_matrix(const CavityGeometry& geom, const MediumLayout& layout,
                                      const std::vector<PhotonMode>& modes, const Frequency& freq,
                                      const ModeBasisConfig& cfg) {
    layout.validate(geom);
    const auto P = static_cast<Eigen::Index>(modes.size());
    CouplingMatrix out{Eigen::MatrixXcd::Zero(P, P), modes, freq};
    if (layout.empty()) return out;
    const auto resp = region_responses(layout, freq);
    const auto ov = region_overlaps(geom, layout, modes, cfg.quadrature_points);
    for (std::size_t i = 0; i < ov.size(); ++i)
        out.W += resp[i].ze * ov[i].A.cast<cplx>() + resp[i].zm * ov[i].B.cast<cplx>();
    for (Eigen::Index a = 0; a < P; ++a)
        for (Eigen::Index b = 0; b < P; ++b) out.W(a, b) *= std::sqrt(modes[b].omega / modes[a].omega);
    return out;
}

// Volume-fraction estimate of the diagonal of W.
inline cplx homogeneous_W(const CavityGeometry& geom, const MediumLayout& layout, const Frequency& freq,
                          const CauchyOptions& opt = {}) {
    cplx sum = 0.0;
    for (std::size_t i = 0; i < layout.regions.size(); ++i) {
        const auto& r = layout.regions[i];
        sum += layout.medium_volume(i) / geom.volume() * (z_function(r.electric, freq, opt) + z_function(r.magnetic, freq, opt));
    }
    return sum;
}

// Photon/medium couplings at one medium frequency.
//   Q = i sqrt(32 hbar w_n / (eps0 V^2)) sum_i f_i(w_k) int_{region i} u . v
//   L = sqrt(32 hbar mu0 w_n / V^2) sum_i g_i(w_k) int_{region i} s . s
inline std::pair<cplx, cplx> overlap_QL(const CavityGeometry& geom, const MediumLayout& layout, const ModeIndex& n,
                                        int lambda, const ModeIndex& m, int nu, double omega_k,
                                        const ModeBasisConfig& cfg, const UnitsConfig& units = {}) {
    layout.validate(geom);
    const auto p = make_photon_mode(geom, n, lambda, cfg);
    check_index(m);
    require(nu >= 1 && nu <= 3, ErrorCode::mode_index, "medium branch must be 1, 2 or 3");
    if (omega_k <= 0 || layout.empty()) return {0.0, 0.0};
    const auto pol = polarization_basis(geom, m, cfg.polarization_rotation);
    const Vec3 v = field_direction(pol, nu, FieldKind::v);
    const Vec3 s = field_direction(pol, nu, FieldKind::s);
    std::array<int, 3> nmax;
    for (int a = 0; a < 3; ++a) nmax[a] = std::max(n[a], m[a]);
    const auto tables = region_tables(geom, layout, nmax, cfg.quadrature_points);
    double qsum = 0.0, lsum = 0.0;
    for (std::size_t i = 0; i < tables.size(); ++i) {
        const auto& reg = layout.regions[i];
        const double f = std::sqrt(coupling_f_squared(reg.electric, omega_k, units, geom.c));
        const double g = std::sqrt(coupling_g_squared(reg.magnetic, omega_k, units, geom.c));
        double uv = 0.0, ss = 0.0;
        for (int a = 0; a < 3; ++a) {
            uv += p.e[a] * v[a] * tables[i].ff(a, n, m);
            ss += p.sigma[a] * s[a] * tables[i].gg(a, n, m);
        }
        qsum += f * uv;
        lsum += g * ss;
    }
    const double V = geom.volume();
    const cplx Q = I * std::sqrt(32.0 * units.hbar * p.omega / (units.eps0 * V * V)) * qsum;
    const cplx L = std::sqrt(32.0 * units.hbar * units.mu0 * p.omega / (V * V)) * lsum;
    return {Q, L};
}

} // namespace mdqed
