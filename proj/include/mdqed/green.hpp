#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "mdqed/coupling.hpp"
#include "mdqed/geometry.hpp"
#include "mdqed/layout.hpp"
#include "mdqed/material.hpp"

namespace mdqed {

// How the dressed propagator in eta is approximated.
enum class Denominator {
    homogeneous,   // one volume-fraction shift for every mode
    mode_diagonal, // per-mode diagonal entries of W
};

struct GreenOptions {
    Denominator denominator = Denominator::homogeneous;
    CauchyOptions cauchy;
    double pole_tolerance = 1e-10;
};

struct TruncationMeta {
    double omega_cut = 0.0;
    std::size_t n_modes = 0;  // distinct wave vectors
    int quadrature_points = 0;
    double regulator = 0.0;
};

struct DyadicValue {
    Mat3c value = Mat3c::Zero();
    Frequency freq;
    TruncationMeta meta;
};

namespace detail {

inline cplx checked_inverse(cplx den, double scale, double tol, const char* what) {
    if (std::abs(den) <= tol * scale) throw Error(ErrorCode::pole, std::string(what) + " evaluated at a mode pole");
    return 1.0 / den;
}

inline TruncationMeta meta_of(const ModeSet& set, const ModeBasisConfig& cfg) {
    return {set.omega_cut, set.size(), cfg.quadrature_points, cfg.regulator};
}

} // namespace detail

// Free-cavity dyadic (4 e^2 / (eps0 V)) sum_n s_n^2 w_n (1 - khat khat) f(R) f(R) / (w - w_n).
inline DyadicValue g0_dyadic(const CavityGeometry& geom, const Vec3& R, const Frequency& freq,
                             const ModeBasisConfig& cfg, const UnitsConfig& units = {}, const GreenOptions& opt = {}) {
    check_inside(geom, R);
    const auto set = enumerate_modes(geom, cfg);
    DyadicValue out;
    out.freq = freq;
    out.meta = detail::meta_of(set, cfg);
    const double pref = 4.0 * units.charge * units.charge / (units.eps0 * geom.volume());
    for (const auto& m : set.modes) {
        const double s = cfg.form_factor(m.omega);
        const cplx inv = detail::checked_inverse(freq.w - m.omega, m.omega, opt.pole_tolerance, "vacuum dyadic");
        const Vec3 f = trig_factors(geom, m.n, R).f;
        const Mat3 proj = Mat3::Identity() - m.pol.khat * m.pol.khat.transpose();
        out.value += (pref * s * s * m.omega * inv) * proj.cwiseProduct(f * f.transpose()).cast<cplx>();
    }
    return out;
}

// Per-mode 3x3 weight tensors entering eta and zeta.
//   eta_e(a,c) = sum_n Ce_n(a,c) f_a(n,R) f_c(n,r)    eta_m(a,c) = sum_n Cm_n(a,c) f_a(n,R) g_c(n,r)
struct ModeWeights {
    std::vector<Mat3c> eta_e, eta_m, zeta_e, zeta_m;
};

namespace detail {

// Diagonal medium shift for every photonic mode (lambda = 1, 2) of the set.
inline std::vector<std::array<cplx, 2>> diagonal_shifts(const CavityGeometry& geom, const MediumLayout& layout,
                                                        const ModeSet& set, const Frequency& freq,
                                                        const ModeBasisConfig& cfg, const GreenOptions& opt,
                                                        const std::vector<OverlapTables>* tables) {
    std::vector<std::array<cplx, 2>> out(set.size(), {cplx(0.0), cplx(0.0)});
    if (layout.empty()) return out;
    if (opt.denominator == Denominator::homogeneous) {
        const cplx wh = homogeneous_W(geom, layout, freq, opt.cauchy);
        for (auto& o : out) o = {wh, wh};
        return out;
    }
    std::vector<OverlapTables> own;
    if (!tables) {
        own = region_tables(geom, layout, set.max_index, cfg.quadrature_points);
        tables = &own;
    }
    const auto resp = region_responses(layout, freq, opt.cauchy);
    const double norm = 8.0 / geom.volume();
    for (std::size_t k = 0; k < set.size(); ++k) {
        const auto& m = set.modes[k];
        for (int lam = 0; lam < 2; ++lam) {
            const Vec3 e = lam == 0 ? m.pol.e1 : m.pol.e2;
            const Vec3 sg = m.pol.khat.cross(e);
            cplx w = 0.0;
            for (std::size_t i = 0; i < tables->size(); ++i) {
                double uu = 0.0, ss = 0.0;
                for (int a = 0; a < 3; ++a) {
                    uu += e[a] * e[a] * (*tables)[i].ff(a, m.n, m.n);
                    ss += sg[a] * sg[a] * (*tables)[i].gg(a, m.n, m.n);
                }
                w += resp[i].ze * uu + resp[i].zm * ss;
            }
            out[k][lam] = norm * w;
        }
    }
    return out;
}

inline ModeWeights mode_weights(const CavityGeometry& geom, const ModeSet& set, const Frequency& freq,
                                const std::vector<std::array<cplx, 2>>& shifts, const ModeBasisConfig& cfg,
                                const GreenOptions& opt) {
    ModeWeights mw;
    const std::size_t N = set.size();
    mw.eta_e.resize(N);
    mw.eta_m.resize(N);
    mw.zeta_e.resize(N);
    mw.zeta_m.resize(N);
    const double pref = 4.0 / geom.volume();
    for (std::size_t k = 0; k < N; ++k) {
        const auto& m = set.modes[k];
        const double s = cfg.form_factor(m.omega);
        const cplx b = m.omega * checked_inverse(freq.w - m.omega, m.omega, opt.pole_tolerance, "bare propagator");
        Mat3c ce = Mat3c::Zero(), cm = Mat3c::Zero(), de = Mat3c::Zero(), dm = Mat3c::Zero();
        for (int lam = 0; lam < 2; ++lam) {
            const Vec3 e = lam == 0 ? m.pol.e1 : m.pol.e2;
            const Vec3 sg = m.pol.khat.cross(e);
            const cplx a = m.omega * checked_inverse(freq.w - m.omega * (1.0 + shifts[k][lam]), m.omega,
                                                     opt.pole_tolerance, "dressed propagator");
            const Mat3 ee = e * e.transpose();
            const Mat3 es = e * sg.transpose();
            ce += a * ee.cast<cplx>();
            cm += a * es.cast<cplx>();
            de += b * ee.cast<cplx>();
            dm += b * es.cast<cplx>();
        }
        mw.eta_e[k] = pref * s * ce;
        mw.eta_m[k] = pref * s * cm;
        mw.zeta_e[k] = pref * s * de;
        mw.zeta_m[k] = pref * s * dm;
    }
    return mw;
}

} // namespace detail

struct EtaZeta {
    Mat3c eta_e = Mat3c::Zero();
    Mat3c zeta_e = Mat3c::Zero();
    Mat3c eta_m = Mat3c::Zero();
    Mat3c zeta_m = Mat3c::Zero();
};

namespace detail {

inline EtaZeta eta_zeta_at(const CavityGeometry& geom, const ModeSet& set, const ModeWeights& mw,
                           const std::vector<Vec3>& fR, const Vec3& r) {
    EtaZeta out;
    for (std::size_t k = 0; k < set.size(); ++k) {
        const auto t = trig_factors(geom, set.modes[k].n, r);
        for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 3; ++c) {
                const double fe = fR[k][a] * t.f[c];
                const double fm = fR[k][a] * t.g[c];
                out.eta_e(a, c) += mw.eta_e[k](a, c) * fe;
                out.zeta_e(a, c) += mw.zeta_e[k](a, c) * fe;
                out.eta_m(a, c) += mw.eta_m[k](a, c) * fm;
                out.zeta_m(a, c) += mw.zeta_m[k](a, c) * fm;
            }
    }
    return out;
}

} // namespace detail

inline EtaZeta eta_zeta(const CavityGeometry& geom, const MediumLayout& layout, const Vec3& R, const Vec3& r,
                        const Frequency& freq, const ModeBasisConfig& cfg, const GreenOptions& opt = {}) {
    check_inside(geom, R);
    check_inside(geom, r);
    require((R - r).norm() > 1e-12 * geom.max_side(), ErrorCode::coincident_points,
            "eta/zeta requested at coincident points");
    const auto set = enumerate_modes(geom, cfg);
    const auto shifts = detail::diagonal_shifts(geom, layout, set, freq, cfg, opt, nullptr);
    const auto mw = detail::mode_weights(geom, set, freq, shifts, cfg, opt);
    std::vector<Vec3> fR;
    for (const auto& m : set.modes) fR.push_back(trig_factors(geom, m.n, R).f);
    return detail::eta_zeta_at(geom, set, mw, fR, r);
}

// Medium dyadic by direct volume quadrature of Z eta zeta over every region:
//   G(a,b) = (2 e^2 / eps0) sum_i int [Z_e eta_e(a,c) zeta_e(b,c) + Z_m eta_m(a,c) zeta_m(b,c)]
inline DyadicValue g_dyadic(const CavityGeometry& geom, const MediumLayout& layout, const Vec3& R,
                            const Frequency& freq, const ModeBasisConfig& cfg, const UnitsConfig& units = {},
                            const GreenOptions& opt = {}) {
    check_inside(geom, R);
    layout.validate(geom);
    const auto set = enumerate_modes(geom, cfg);
    DyadicValue out;
    out.freq = freq;
    out.meta = detail::meta_of(set, cfg);
    if (layout.empty()) return out;
    const auto shifts = detail::diagonal_shifts(geom, layout, set, freq, cfg, opt, nullptr);
    const auto mw = detail::mode_weights(geom, set, freq, shifts, cfg, opt);
    const auto resp = region_responses(layout, freq, opt.cauchy);
    std::vector<Vec3> fR;
    for (const auto& m : set.modes) fR.push_back(trig_factors(geom, m.n, R).f);

    for (std::size_t i = 0; i < layout.regions.size(); ++i) {
        if (resp[i].ze == 0.0 && resp[i].zm == 0.0) continue;
        for (const auto& b : layout.domain(i)) {
            std::array<std::size_t, 3> pts;
            for (int a = 0; a < 3; ++a)
                pts[a] = resolving_points(cfg.quadrature_points, set.max_index[a], b.hi[a] - b.lo[a], geom.L[a]);
            Mat3c acc_e = Mat3c::Zero(), acc_m = Mat3c::Zero();
            BoxGrid(b, pts).for_each([&](const Vec3& r, double w) {
                const auto ez = detail::eta_zeta_at(geom, set, mw, fR, r);
                acc_e += w * ez.eta_e * ez.zeta_e.transpose();
                acc_m += w * ez.eta_m * ez.zeta_m.transpose();
            });
            out.value += resp[i].ze * acc_e + resp[i].zm * acc_m;
        }
    }
    out.value *= 2.0 * units.charge * units.charge / units.eps0;
    return out;
}

// Separable evaluation of the same medium dyadic for a fixed atom position.
// Precomputes the mode-pair overlap tensors once; each frequency then costs
// O(N^2) in the number of wave vectors.
class DyadicExpansion {
public:
    DyadicExpansion(const CavityGeometry& geom, const MediumLayout& layout, const Vec3& R, const ModeBasisConfig& cfg,
                    const UnitsConfig& units = {}, const GreenOptions& opt = {})
        : geom_(geom), layout_(layout), R_(R), cfg_(cfg), units_(units), opt_(opt) {
        geom.validate();
        check_inside(geom, R);
        layout.validate(geom);
        set_ = enumerate_modes(geom, cfg);
        const auto N = static_cast<Eigen::Index>(set_.size());
        for (const auto& m : set_.modes) fR_.push_back(trig_factors(geom, m.n, R).f);
        tables_ = region_tables(geom, layout, set_.max_index, cfg.quadrature_points);
        for (std::size_t i = 0; i < layout.regions.size(); ++i) {
            RegionMoments rm;
            rm.electric = !layout.regions[i].electric.is_zero();
            rm.magnetic = !layout.regions[i].magnetic.is_zero();
            for (int c = 0; c < 3; ++c) {
                if (rm.electric) rm.ff[c] = Eigen::MatrixXd(N, N);
                if (rm.magnetic) rm.gg[c] = Eigen::MatrixXd(N, N);
                for (Eigen::Index k = 0; k < N; ++k)
                    for (Eigen::Index l = k; l < N; ++l) {
                        const auto& nk = set_.modes[k].n;
                        const auto& nl = set_.modes[l].n;
                        if (rm.electric) rm.ff[c](k, l) = rm.ff[c](l, k) = tables_[i].ff(c, nk, nl);
                        if (rm.magnetic) rm.gg[c](k, l) = rm.gg[c](l, k) = tables_[i].gg(c, nk, nl);
                    }
            }
            moments_.push_back(std::move(rm));
        }
    }

    const ModeSet& modes() const { return set_; }
    const Vec3& position() const { return R_; }
    const ModeBasisConfig& config() const { return cfg_; }

    cplx homogeneous_shift(const Frequency& freq) const { return homogeneous_W(geom_, layout_, freq, opt_.cauchy); }

    DyadicValue vacuum(const Frequency& freq) const { return g0_dyadic(geom_, R_, freq, cfg_, units_, opt_); }

    DyadicValue medium(const Frequency& freq) const {
        DyadicValue out;
        out.freq = freq;
        out.meta = detail::meta_of(set_, cfg_);
        if (layout_.empty()) return out;
        const auto rows = medium_rows(freq);
        for (const auto& r : rows) out.value += r;
        return out;
    }

    // Contribution of each wave vector n (first mode index in the double sum).
    std::vector<Mat3c> medium_rows(const Frequency& freq) const {
        const std::size_t N = set_.size();
        std::vector<Mat3c> rows(N, Mat3c::Zero());
        if (layout_.empty() || N == 0) return rows;
        const auto shifts = detail::diagonal_shifts(geom_, layout_, set_, freq, cfg_, opt_, &tables_);
        const auto mw = detail::mode_weights(geom_, set_, freq, shifts, cfg_, opt_);
        const auto resp = region_responses(layout_, freq, opt_.cauchy);
        const auto n = static_cast<Eigen::Index>(N);
        const double pref = 2.0 * units_.charge * units_.charge / units_.eps0;
        for (std::size_t i = 0; i < moments_.size(); ++i) {
            const auto& rm = moments_[i];
            for (int kind = 0; kind < 2; ++kind) {
                const bool electric = kind == 0;
                if (electric ? !rm.electric : !rm.magnetic) continue;
                const cplx z = electric ? resp[i].ze : resp[i].zm;
                if (z == 0.0) continue;
                const auto& eta = electric ? mw.eta_e : mw.eta_m;
                const auto& zeta = electric ? mw.zeta_e : mw.zeta_m;
                for (int c = 0; c < 3; ++c) {
                    // X(k, a) = eta_k(a, c) f_a(k, R);  Y(l, b) = zeta_l(b, c) f_b(l, R)
                    Eigen::MatrixXcd X(n, 3), Y(n, 3);
                    for (Eigen::Index k = 0; k < n; ++k)
                        for (int a = 0; a < 3; ++a) {
                            X(k, a) = eta[k](a, c) * fR_[k][a];
                            Y(k, a) = zeta[k](a, c) * fR_[k][a];
                        }
                    const auto& M = electric ? rm.ff[c] : rm.gg[c];
                    const Eigen::MatrixXd Tr = M * Y.real();
                    const Eigen::MatrixXd Ti = M * Y.imag();
                    Eigen::MatrixXcd T(n, 3);
                    T.real() = Tr;
                    T.imag() = Ti;
                    for (Eigen::Index k = 0; k < n; ++k)
                        rows[k] += (pref * z) * (X.row(k).transpose() * T.row(k));
                }
            }
        }
        return rows;
    }

private:
    struct RegionMoments {
        bool electric = false, magnetic = false;
        std::array<Eigen::MatrixXd, 3> ff, gg;
    };

    CavityGeometry geom_;
    MediumLayout layout_;
    Vec3 R_;
    ModeBasisConfig cfg_;
    UnitsConfig units_;
    GreenOptions opt_;
    ModeSet set_;
    std::vector<Vec3> fR_;
    std::vector<OverlapTables> tables_;
    std::vector<RegionMoments> moments_;
};

} // namespace mdqed
