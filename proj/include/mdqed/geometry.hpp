#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mdqed/quadrature.hpp"
#include "mdqed/units.hpp"

namespace mdqed {

struct CavityGeometry {
    std::array<double, 3> L{pi, pi, pi};
    double c = 1.0;

    void validate() const {
        require(L[0] > 0 && L[1] > 0 && L[2] > 0, ErrorCode::geometry, "cavity side lengths must be positive");
        require(c > 0, ErrorCode::geometry, "wave speed must be positive");
    }
    double volume() const { return L[0] * L[1] * L[2]; }
    double min_side() const { return std::min({L[0], L[1], L[2]}); }
    double max_side() const { return std::max({L[0], L[1], L[2]}); }
    Box box() const { return Box{Vec3::Zero(), Vec3(L[0], L[1], L[2])}; }
};

using ModeIndex = std::array<int, 3>;

enum class FieldKind { u, v, s };

struct ModeBasisConfig {
    int n_max = 8;
    std::optional<double> omega_cut;
    // Optional lower frequency edge; modes below it are dropped.
    std::optional<double> omega_min;
    int quadrature_points = 32;
    // Gaussian form-factor scale on the atom coupling; 0 keeps a sharp cutoff.
    double regulator = 0.0;
    // Rotation of the polarization pair about k (radians).
    double polarization_rotation = 0.0;

    void validate() const {
        require(n_max >= 1, ErrorCode::invalid_argument, "n_max must be >= 1");
        require(quadrature_points >= 2, ErrorCode::invalid_argument, "quadrature_points must be >= 2");
        require(!omega_cut || *omega_cut > 0, ErrorCode::invalid_argument, "omega_cut must be positive");
        require(regulator >= 0, ErrorCode::invalid_argument, "regulator must be non-negative");
    }

    double cutoff(const CavityGeometry& geom) const {
        return omega_cut ? *omega_cut : pi * geom.c * n_max / geom.max_side();
    }

    double form_factor(double omega) const {
        if (regulator <= 0) return 1.0;
        const double x = omega / regulator;
        return std::exp(-0.5 * x * x);
    }
};

inline void check_index(const ModeIndex& n) {
    if (n[0] < 1 || n[1] < 1 || n[2] < 1) {
        std::ostringstream os;
        os << "mode indices must be >= 1, got (" << n[0] << "," << n[1] << "," << n[2] << ")";
        throw Error(ErrorCode::mode_index, os.str());
    }
}

inline Vec3 wavevector(const CavityGeometry& geom, const ModeIndex& n) {
    return Vec3(n[0] * pi / geom.L[0], n[1] * pi / geom.L[1], n[2] * pi / geom.L[2]);
}

inline double mode_frequency(const CavityGeometry& geom, const ModeIndex& n) {
    check_index(n);
    return geom.c * wavevector(geom, n).norm();
}

struct PolarizationPair {
    Vec3 khat;
    Vec3 e1;
    Vec3 e2;
};

inline PolarizationPair polarization_basis(const CavityGeometry& geom, const ModeIndex& n, double rotation = 0.0) {
    check_index(n);
    PolarizationPair p;
    p.khat = wavevector(geom, n).normalized();
    Vec3 e1 = p.khat.cross(Vec3::UnitZ());
    if (e1.norm() < 1e-12) e1 = p.khat.cross(Vec3::UnitX());
    e1.normalize();
    Vec3 e2 = p.khat.cross(e1);
    if (rotation != 0.0) {
        const double cr = std::cos(rotation), sr = std::sin(rotation);
        const Vec3 r1 = cr * e1 + sr * e2;
        e1 = r1;
        e2 = p.khat.cross(r1);
    }
    p.e1 = e1;
    p.e2 = e2;
    return p;
}

// f_i carries the cosine on axis i, g_i carries the sine on axis i.
struct TrigFactors {
    Vec3 f;
    Vec3 g;
};

inline TrigFactors trig_factors(const CavityGeometry& geom, const ModeIndex& n, const Vec3& r) {
    double s[3], c[3];
    for (int a = 0; a < 3; ++a) {
        const double arg = n[a] * pi * r[a] / geom.L[a];
        s[a] = std::sin(arg);
        c[a] = std::cos(arg);
    }
    TrigFactors t;
    t.f = Vec3(c[0] * s[1] * s[2], s[0] * c[1] * s[2], s[0] * s[1] * c[2]);
    t.g = Vec3(s[0] * c[1] * c[2], c[0] * s[1] * c[2], c[0] * c[1] * s[2]);
    return t;
}

inline void check_inside(const CavityGeometry& geom, const Vec3& r) {
    const double tol = 1e-12 * geom.max_side();
    if (!geom.box().contains(r, tol)) {
        std::ostringstream os;
        os << "point (" << r[0] << "," << r[1] << "," << r[2] << ") lies outside the cavity";
        throw Error(ErrorCode::outside_domain, os.str());
    }
}

// Polarization direction carried by the f-type (u, v) and g-type (s) fields.
inline Vec3 field_direction(const PolarizationPair& p, int branch, FieldKind kind) {
    if (kind == FieldKind::u) {
        require(branch == 1 || branch == 2, ErrorCode::mode_index, "photonic branch must be 1 or 2");
    } else {
        require(branch >= 1 && branch <= 3, ErrorCode::mode_index, "medium branch must be 1, 2 or 3");
    }
    if (branch == 3) return p.khat;
    const Vec3& e = branch == 1 ? p.e1 : p.e2;
    return kind == FieldKind::s ? Vec3(p.khat.cross(e)) : e;
}

inline Vec3 mode_function(const CavityGeometry& geom, const ModeIndex& n, int branch, FieldKind kind, const Vec3& r,
                          double rotation = 0.0) {
    check_index(n);
    check_inside(geom, r);
    const auto p = polarization_basis(geom, n, rotation);
    const Vec3 dir = field_direction(p, branch, kind);
    const auto t = trig_factors(geom, n, r);
    return dir.cwiseProduct(kind == FieldKind::s ? t.g : t.f);
}

// Analytic divergence of u: sum_i e_i d f_i / d x_i.
inline double mode_divergence(const CavityGeometry& geom, const ModeIndex& n, int lambda, const Vec3& r,
                              double rotation = 0.0) {
    const auto p = polarization_basis(geom, n, rotation);
    const Vec3 e = field_direction(p, lambda, FieldKind::u);
    const Vec3 k = wavevector(geom, n);
    double s[3];
    for (int a = 0; a < 3; ++a) s[a] = std::sin(k[a] * r[a]);
    return -e[0] * k[0] * s[0] * s[1] * s[2] - e[1] * k[1] * s[0] * s[1] * s[2] - e[2] * k[2] * s[0] * s[1] * s[2];
}

// Analytic curl of u.
inline Vec3 mode_curl(const CavityGeometry& geom, const ModeIndex& n, int lambda, const Vec3& r,
                      double rotation = 0.0) {
    const auto p = polarization_basis(geom, n, rotation);
    const Vec3 e = field_direction(p, lambda, FieldKind::u);
    const Vec3 k = wavevector(geom, n);
    double s[3], c[3];
    for (int a = 0; a < 3; ++a) {
        s[a] = std::sin(k[a] * r[a]);
        c[a] = std::cos(k[a] * r[a]);
    }
    const double dy_uz = e[2] * k[1] * s[0] * c[1] * c[2];
    const double dz_uy = e[1] * k[2] * s[0] * c[1] * c[2];
    const double dz_ux = e[0] * k[2] * c[0] * s[1] * c[2];
    const double dx_uz = e[2] * k[0] * c[0] * s[1] * c[2];
    const double dx_uy = e[1] * k[0] * c[0] * c[1] * s[2];
    const double dy_ux = e[0] * k[1] * c[0] * c[1] * s[2];
    return Vec3(dy_uz - dz_uy, dz_ux - dx_uz, dx_uy - dy_ux);
}

struct ModeEntry {
    ModeIndex n;
    double omega;
    PolarizationPair pol;
};

struct ModeSet {
    std::vector<ModeEntry> modes;
    double omega_cut = 0.0;
    std::array<int, 3> max_index{0, 0, 0};

    std::size_t size() const { return modes.size(); }
};

inline ModeSet enumerate_modes(const CavityGeometry& geom, const ModeBasisConfig& cfg) {
    geom.validate();
    cfg.validate();
    ModeSet set;
    set.omega_cut = cfg.cutoff(geom);
    const double limit = set.omega_cut * (1.0 + 1e-12);
    std::array<int, 3> nmax;
    for (int a = 0; a < 3; ++a) nmax[a] = static_cast<int>(std::floor(limit * geom.L[a] / (pi * geom.c)));
    for (int i = 1; i <= nmax[0]; ++i)
        for (int j = 1; j <= nmax[1]; ++j)
            for (int k = 1; k <= nmax[2]; ++k) {
                const ModeIndex n{i, j, k};
                const double w = mode_frequency(geom, n);
                if (w > limit) continue;
                if (cfg.omega_min && w < *cfg.omega_min) continue;
                set.modes.push_back({n, w, polarization_basis(geom, n, cfg.polarization_rotation)});
                for (int a = 0; a < 3; ++a) set.max_index[a] = std::max(set.max_index[a], n[a]);
            }
    std::sort(set.modes.begin(), set.modes.end(), [](const ModeEntry& a, const ModeEntry& b) {
        if (a.omega != b.omega) return a.omega < b.omega;
        return a.n < b.n;
    });
    return set;
}

// One photonic mode (n, lambda) with its f-type and g-type directions.
struct PhotonMode {
    ModeIndex n;
    int lambda;
    double omega;
    Vec3 khat;
    Vec3 e;      // u direction
    Vec3 sigma;  // s direction, khat x e
};

inline std::vector<PhotonMode> photon_modes(const ModeSet& set) {
    std::vector<PhotonMode> out;
    out.reserve(2 * set.size());
    for (const auto& m : set.modes) {
        for (int lam = 1; lam <= 2; ++lam) {
            const Vec3 e = lam == 1 ? m.pol.e1 : m.pol.e2;
            out.push_back({m.n, lam, m.omega, m.pol.khat, e, m.pol.khat.cross(e)});
        }
    }
    return out;
}

inline double scalar_green(const CavityGeometry& geom, const Vec3& r, const Vec3& rp, const ModeBasisConfig& cfg) {
    check_inside(geom, r);
    check_inside(geom, rp);
    require((r - rp).norm() > 1e-12 * geom.max_side(), ErrorCode::coincident_points,
            "scalar Green function is singular at coincident points");
    const auto set = enumerate_modes(geom, cfg);
    double sum = 0.0;
    for (const auto& m : set.modes) {
        const Vec3 k = wavevector(geom, m.n);
        double prod = 1.0;
        for (int a = 0; a < 3; ++a) prod *= std::sin(k[a] * r[a]) * std::sin(k[a] * rp[a]);
        sum += prod / k.squaredNorm();
    }
    return 8.0 / geom.volume() * sum;
}

// Transverse delta dyadic, either as the explicit eigenfunction sum or through
// the projector form (delta - khat khat) f f.
enum class DeltaForm { eigenfunction_sum, projector };

inline Mat3 transverse_delta(const CavityGeometry& geom, const Vec3& r, const Vec3& rp, const ModeBasisConfig& cfg,
                             DeltaForm form) {
    check_inside(geom, r);
    check_inside(geom, rp);
    const auto set = enumerate_modes(geom, cfg);
    Mat3 sum = Mat3::Zero();
    for (const auto& m : set.modes) {
        const auto t = trig_factors(geom, m.n, r);
        const auto tp = trig_factors(geom, m.n, rp);
        if (form == DeltaForm::eigenfunction_sum) {
            for (const Vec3& e : {m.pol.e1, m.pol.e2}) {
                const Vec3 a = e.cwiseProduct(t.f), b = e.cwiseProduct(tp.f);
                sum += a * b.transpose();
            }
        } else {
            const Mat3 proj = Mat3::Identity() - m.pol.khat * m.pol.khat.transpose();
            sum += proj.cwiseProduct(t.f * tp.f.transpose());
        }
    }
    return 8.0 / geom.volume() * sum;
}

// Vector field sampled on the full-cavity Gauss-Legendre grid, in BoxGrid order.
struct FieldSamples {
    std::size_t points_per_axis = 0;
    std::vector<Vec3> values;
};

inline FieldSamples sample_field(const CavityGeometry& geom, std::size_t points, const auto& field) {
    FieldSamples out;
    out.points_per_axis = points;
    out.values.reserve(points * points * points);
    BoxGrid(geom.box(), points).for_each([&](const Vec3& r, double) { out.values.push_back(field(r)); });
    return out;
}

inline FieldSamples transverse_project(const FieldSamples& in, const CavityGeometry& geom,
                                       const ModeBasisConfig& cfg) {
    const std::size_t q = in.points_per_axis;
    require(q >= 2 && in.values.size() == q * q * q, ErrorCode::invalid_argument,
            "field samples do not match a full-cavity quadrature grid");
    const BoxGrid grid(geom.box(), q);
    std::vector<Vec3> pts;
    std::vector<double> wts;
    pts.reserve(grid.size());
    wts.reserve(grid.size());
    grid.for_each([&](const Vec3& r, double w) {
        pts.push_back(r);
        wts.push_back(w);
    });

    const auto set = enumerate_modes(geom, cfg);
    const double norm = 8.0 / geom.volume();
    FieldSamples out;
    out.points_per_axis = q;
    out.values.assign(pts.size(), Vec3::Zero());
    std::vector<Vec3> f(pts.size());
    for (const auto& m : set.modes) {
        for (std::size_t i = 0; i < pts.size(); ++i) f[i] = trig_factors(geom, m.n, pts[i]).f;
        for (const Vec3& e : {m.pol.e1, m.pol.e2}) {
            double coef = 0.0;
            for (std::size_t i = 0; i < pts.size(); ++i) coef += wts[i] * e.cwiseProduct(f[i]).dot(in.values[i]);
            coef *= norm;
            for (std::size_t i = 0; i < pts.size(); ++i) out.values[i] += coef * e.cwiseProduct(f[i]);
        }
    }
    return out;
}

} // namespace mdqed
