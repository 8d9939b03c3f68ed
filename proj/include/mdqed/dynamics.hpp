#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mdqed/emission.hpp"

namespace mdqed {

// Frequency bins on [omega0 - B, omega0 + B] from a composite Gauss-Legendre rule.
struct ContinuumDiscretization {
    std::vector<double> omega;
    std::vector<double> weight;
    double center = 0.0;
    double bandwidth = 0.0;

    std::size_t bins() const { return omega.size(); }
    double lo() const { return center - bandwidth; }
    double hi() const { return center + bandwidth; }
};

inline ContinuumDiscretization build_discretization(double omega0, double bandwidth, std::size_t bins,
                                                    std::size_t order = 4) {
    require(bins >= 2, ErrorCode::invalid_argument, "need at least two frequency bins");
    require(bandwidth > 0, ErrorCode::invalid_argument, "bandwidth must be positive");
    require(omega0 - bandwidth > 0, ErrorCode::invalid_argument, "frequency band must stay above zero");
    order = std::min(order, bins);
    const std::size_t panels = (bins + order - 1) / order;
    const auto rule = composite_gauss_legendre(omega0 - bandwidth, omega0 + bandwidth, panels, order);
    return {rule.nodes, rule.weights, omega0, bandwidth};
}

// Squared bin couplings chi_i(w_j) w_j / (2 pi), written through the coupling
// functions: electric 2 pi w^2 |f|^2 / (hbar c^3 eps0), magnetic 2 pi mu0 w^2 |g|^2 / (hbar c^3).
inline std::vector<double> bin_couplings(const ContinuumDiscretization& disc, const Susceptibility& s,
                                         ResponseKind kind, const UnitsConfig& units = {}, double c = 1.0) {
    std::vector<double> out(disc.bins(), 0.0);
    if (s.is_zero()) return out;
    const double c3 = c * c * c;
    for (std::size_t j = 0; j < disc.bins(); ++j) {
        const double w = disc.omega[j];
        const double density = kind == ResponseKind::electric
                                    ? coupling_f_squared(s, w, units, c) / (units.hbar * c3 * units.eps0)
                                    : coupling_g_squared(s, w, units, c) * units.mu0 / (units.hbar * c3);
        out[j] = 2.0 * pi * disc.weight[j] * w * w * density;
    }
    return out;
}

// Bath channels of one region and response kind. Photon p couples to bath
// state (q, j) with amplitude phase * rows(p, q) * g[j].
struct BathGroup {
    std::string label;
    cplx phase = 1.0;
    Eigen::MatrixXd rows;  // P x Q, includes sqrt(omega_p)
    Eigen::VectorXd g;     // per bin
};

// Single-excitation generator in frequency units, split into a small dense
// system block (atom + photons) and a diagonal bath.
struct WWSystem {
    double omega0 = 0.0;
    std::vector<PhotonMode> photons;
    Eigen::VectorXcd kappa;  // atom-photon couplings
    ContinuumDiscretization disc;
    std::vector<BathGroup> groups;

    std::size_t system_size() const { return 1 + photons.size(); }
    std::size_t bath_size() const {
        std::size_t n = 0;
        for (const auto& g : groups) n += static_cast<std::size_t>(g.rows.cols()) * disc.bins();
        return n;
    }
    std::size_t size() const { return system_size() + bath_size(); }

    // Dense system block in a frame rotating at `frame`.
    Eigen::MatrixXcd system_block(double frame) const {
        const auto n = static_cast<Eigen::Index>(system_size());
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
        h(0, 0) = omega0 - frame;
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            h(p + 1, p + 1) = photons[p].omega - frame;
            h(0, p + 1) = kappa[p];
            h(p + 1, 0) = std::conj(kappa[p]);
        }
        return h;
    }

    // Full dense matrix; only sensible for small truncations.
    Eigen::MatrixXcd dense(double frame = 0.0) const {
        const auto ns = static_cast<Eigen::Index>(system_size());
        const auto n = static_cast<Eigen::Index>(size());
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
        h.topLeftCorner(ns, ns) = system_block(frame);
        Eigen::Index off = ns;
        const auto J = static_cast<Eigen::Index>(disc.bins());
        for (const auto& grp : groups)
            for (Eigen::Index q = 0; q < grp.rows.cols(); ++q)
                for (Eigen::Index j = 0; j < J; ++j, ++off) {
                    h(off, off) = disc.omega[j] - frame;
                    for (Eigen::Index p = 0; p < grp.rows.rows(); ++p) {
                        const cplx v = grp.phase * grp.rows(p, q) * grp.g[j];
                        h(p + 1, off) = v;
                        h(off, p + 1) = std::conj(v);
                    }
                }
        return h;
    }
};

inline double hermiticity_error(const Eigen::MatrixXcd& h) { return (h - h.adjoint()).cwiseAbs().maxCoeff(); }

struct DynamicsOptions {
    double t_end = 100.0;
    double dt = 0.05;
    std::size_t sample_every = 20;
    double norm_tolerance = 1e-6;
    // Eigenvalues of the overlap Gram matrices below this fraction of the largest are dropped.
    double rank_tolerance = 1e-12;
};

// Builds the generator: photon modes inside the band, atom couplings through
// the mode functions at R, and a bath per region and kind from the factorized
// overlap matrix (8/V) int u_p . u_q = sum_k rows(p, k) rows(q, k) / omega_p.
inline WWSystem build_system(const CavityGeometry& geom, const MediumLayout& layout, const AtomConfig& atom,
                             const ContinuumDiscretization& disc, const ModeBasisConfig& cfg,
                             const UnitsConfig& units = {}, const DynamicsOptions& opt = {}) {
    geom.validate();
    layout.validate(geom);
    atom.validate(geom, layout);
    WWSystem sys;
    sys.omega0 = atom.omega0;
    sys.disc = disc;

    bool active = false;
    for (const auto& r : layout.regions) active = active || !r.electric.is_zero() || !r.magnetic.is_zero();
    // Without medium response the photons only carry the excluded vacuum terms.
    if (!active) return sys;

    ModeBasisConfig band = cfg;
    band.omega_cut = std::min(cfg.cutoff(geom), disc.hi());
    band.omega_min = std::max(cfg.omega_min.value_or(0.0), disc.lo());
    sys.photons = photon_modes(enumerate_modes(geom, band));
    const auto P = static_cast<Eigen::Index>(sys.photons.size());
    sys.kappa = Eigen::VectorXcd::Zero(P);
    const double pref = 4.0 * units.charge * units.charge / (units.eps0 * geom.volume() * units.hbar);
    for (Eigen::Index p = 0; p < P; ++p) {
        const auto& m = sys.photons[p];
        const Vec3 u = m.e.cwiseProduct(trig_factors(geom, m.n, atom.position).f);
        sys.kappa[p] = cfg.form_factor(m.omega) * std::sqrt(pref * m.omega) * atom.dipole.dot(u);
    }
    if (P == 0) return sys;

    const auto overlaps = region_overlaps(geom, layout, sys.photons, cfg.quadrature_points);
    Eigen::VectorXd sqrt_w(P);
    for (Eigen::Index p = 0; p < P; ++p) sqrt_w[p] = std::sqrt(sys.photons[p].omega);

    auto factor = [&](const Eigen::MatrixXd& A) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
        const auto& ev = es.eigenvalues();
        const double top = std::max(ev.maxCoeff(), 0.0);
        std::vector<Eigen::Index> keep;
        for (Eigen::Index k = 0; k < ev.size(); ++k)
            if (ev[k] > opt.rank_tolerance * top) keep.push_back(k);
        Eigen::MatrixXd B(P, static_cast<Eigen::Index>(keep.size()));
        for (std::size_t k = 0; k < keep.size(); ++k)
            B.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(keep[k]) * std::sqrt(ev[keep[k]]);
        return Eigen::MatrixXd(sqrt_w.asDiagonal() * B);
    };

    for (std::size_t i = 0; i < layout.regions.size(); ++i) {
        const auto& reg = layout.regions[i];
        for (int kind = 0; kind < 2; ++kind) {
            const bool electric = kind == 0;
            const auto& s = electric ? reg.electric : reg.magnetic;
            if (s.is_zero()) continue;
            BathGroup g;
            g.label = reg.name + (electric ? ":electric" : ":magnetic");
            g.phase = electric ? I : cplx(-1.0);
            g.rows = factor(electric ? overlaps[i].A : overlaps[i].B);
            if (g.rows.cols() == 0) continue;
            const auto g2 = bin_couplings(disc, s, electric ? ResponseKind::electric : ResponseKind::magnetic, units,
                                          geom.c);
            g.g.resize(static_cast<Eigen::Index>(g2.size()));
            for (std::size_t j = 0; j < g2.size(); ++j) g.g[static_cast<Eigen::Index>(j)] = std::sqrt(g2[j]);
            sys.groups.push_back(std::move(g));
        }
    }
    return sys;
}

struct TrajectorySample {
    double t = 0.0;
    cplx c = 1.0;  // lab-frame atomic amplitude
    double norm = 1.0;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    double max_norm_drift = 0.0;
    std::size_t state_size = 0;
};

namespace detail {

// One (2,2) Pade factor x <- (1 + a H)^{-1} (1 - a H) x, exploiting the
// diagonal bath and the separable photon-bath coupling. Bath blocks are
// updated in place, one bin column at a time.
class PadeFactor {
public:
    PadeFactor(const WWSystem& sys, double frame, cplx alpha) : sys_(sys), alpha_(alpha) {
        hs_ = sys.system_block(frame);
        const auto J = static_cast<Eigen::Index>(sys.disc.bins());
        lhs_.resize(J);
        dinv_.resize(J);
        for (Eigen::Index j = 0; j < J; ++j) {
            const double eps = sys.disc.omega[j] - frame;
            lhs_[j] = 1.0 - alpha * eps;
            dinv_[j] = 1.0 / (1.0 + alpha * eps);
        }
        const auto ns = hs_.rows();
        Eigen::MatrixXcd S = Eigen::MatrixXcd::Identity(ns, ns) + alpha * hs_;
        for (const auto& g : sys.groups) {
            cplx sum = 0.0;
            for (Eigen::Index j = 0; j < J; ++j) sum += g.g[j] * g.g[j] * dinv_[j];
            const Eigen::MatrixXd bbt = g.rows * g.rows.transpose();
            S.bottomRightCorner(ns - 1, ns - 1) -= alpha * alpha * std::norm(g.phase) * sum * bbt.cast<cplx>();
        }
        lu_.compute(S);
        for (const auto& g : sys.groups) {
            gc_.push_back(g.g.cast<cplx>());
            gd_.push_back(gc_.back().cwiseProduct(dinv_));
        }
    }

    // xs: system part; xb: one J x Q block (bins by channels) per group.
    void apply(Eigen::VectorXcd& xs, std::vector<Eigen::MatrixXcd>& xb) const {
        const Eigen::Index np = xs.size() - 1;
        Eigen::VectorXcd rhs = xs - alpha_ * (hs_ * xs);
        for (std::size_t k = 0; k < xb.size(); ++k) {
            const auto& g = sys_.groups[k];
            auto& X = xb[k];
            const Eigen::VectorXcd pr = std::conj(g.phase) * (g.rows.transpose() * xs.tail(np));
            Eigen::VectorXcd sum = X.transpose() * gc_[k];
            X.array().colwise() *= lhs_.array();
            X.noalias() -= (alpha_ * gc_[k]) * pr.transpose();
            sum.noalias() += X.transpose() * gd_[k];
            // photon rows of (1 - a H) x plus the bath part of the reduced right-hand side
            rhs.tail(np) -= alpha_ * g.phase * (g.rows * sum);
        }
        xs = lu_.solve(rhs);
        for (std::size_t k = 0; k < xb.size(); ++k) {
            const auto& g = sys_.groups[k];
            auto& X = xb[k];
            const Eigen::VectorXcd pr = (alpha_ * std::conj(g.phase)) * (g.rows.transpose() * xs.tail(np));
            X.noalias() -= gc_[k] * pr.transpose();
            X.array().colwise() *= dinv_.array();
        }
    }

private:
    const WWSystem& sys_;
    cplx alpha_;
    Eigen::MatrixXcd hs_;
    Eigen::VectorXcd lhs_;
    Eigen::VectorXcd dinv_;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
    std::vector<Eigen::VectorXcd> gc_, gd_;
};

} // namespace detail

// Integrates i dx/dt = H x from the excited atom with the unitary fourth-order
// Pade propagator in a frame rotating at omega0.
inline Trajectory integrate(const WWSystem& sys, const DynamicsOptions& opt = {}) {
    require(opt.t_end > 0, ErrorCode::invalid_argument, "t_end must be positive");
    require(opt.dt > 0, ErrorCode::invalid_argument, "time step must be positive");
    require(opt.sample_every >= 1, ErrorCode::invalid_argument, "sample_every must be >= 1");
    const double frame = sys.omega0;
    double wmax = 0.0;
    for (const auto& p : sys.photons) wmax = std::max(wmax, std::abs(p.omega - frame));
    if (!sys.groups.empty())
        for (double w : sys.disc.omega) wmax = std::max(wmax, std::abs(w - frame));
    require(opt.dt * wmax <= 0.1 * (1.0 + 1e-9), ErrorCode::invalid_argument,
            "time step does not resolve the largest detuning (dt * w_max > 0.1)");

    const cplx z1(3.0, std::sqrt(3.0)), z2(3.0, -std::sqrt(3.0));
    const detail::PadeFactor f1(sys, frame, I * opt.dt / z1);
    const detail::PadeFactor f2(sys, frame, I * opt.dt / z2);

    Eigen::VectorXcd xs = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(sys.system_size()));
    xs[0] = 1.0;
    std::vector<Eigen::MatrixXcd> xb;
    for (const auto& g : sys.groups)
        xb.push_back(Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(sys.disc.bins()), g.rows.cols()));

    Trajectory tr;
    tr.state_size = sys.size();
    auto norm = [&]() {
        double n = xs.squaredNorm();
        for (const auto& b : xb) n += b.squaredNorm();
        return n;
    };
    auto record = [&](double t) {
        const double n = norm();
        tr.max_norm_drift = std::max(tr.max_norm_drift, std::abs(n - 1.0));
        if (std::abs(n - 1.0) > opt.norm_tolerance)
            throw Error(ErrorCode::norm_drift, "norm drift " + std::to_string(std::abs(n - 1.0)) + " at t = " +
                                                   std::to_string(t) + "; reduce the time step");
        tr.samples.push_back({t, xs[0] * std::exp(-I * (frame * t)), n});
    };

    const auto steps = static_cast<std::size_t>(std::ceil(opt.t_end / opt.dt - 1e-9));
    record(0.0);
    for (std::size_t k = 1; k <= steps; ++k) {
        f1.apply(xs, xb);
        f2.apply(xs, xb);
        if (k % opt.sample_every == 0 || k == steps) record(static_cast<double>(k) * opt.dt);
    }
    return tr;
}

inline Trajectory integrate(const CavityGeometry& geom, const MediumLayout& layout, const AtomConfig& atom,
                            const ContinuumDiscretization& disc, const ModeBasisConfig& cfg,
                            const UnitsConfig& units = {}, const DynamicsOptions& opt = {}) {
    return integrate(build_system(geom, layout, atom, disc, cfg, units, opt), opt);
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    os << "t,re_c,im_c,abs_c2,norm\n";
    os.precision(17);
    for (const auto& s : tr.samples)
        os << s.t << ',' << s.c.real() << ',' << s.c.imag() << ',' << std::norm(s.c) << ',' << s.norm << '\n';
}

struct FitOptions {
    double t_begin = 0.0;
    double t_end = std::numeric_limits<double>::infinity();
    // Largest rise of |c|^2 above its running minimum before the fit is refused.
    double revival_tolerance = 0.05;
    // Log-drop over the window must exceed this many residuals to count as resolved.
    double resolve_factor = 10.0;
};

struct DecayFit {
    double population_rate = 0.0;  // decay rate of |c|^2
    double amplitude_rate = 0.0;   // half of it, comparable to Gamma
    double residual = 0.0;         // rms of the log fit
    std::size_t points = 0;
    bool upper_bound = false;
};

// Least-squares slope of log |c|^2 over the window.
inline DecayFit fit_decay(const Trajectory& tr, const FitOptions& opt = {}) {
    std::vector<double> t, y;
    double running_min = std::numeric_limits<double>::infinity();
    for (const auto& s : tr.samples) {
        if (s.t < opt.t_begin || s.t > opt.t_end) continue;
        const double p = std::norm(s.c);
        require(p > 0, ErrorCode::non_convergence, "atomic population vanished inside the fit window");
        running_min = std::min(running_min, p);
        if (p - running_min > opt.revival_tolerance)
            throw Error(ErrorCode::non_markovian, "non-Markovian regime: population revives by " +
                                                      std::to_string(p - running_min) + " at t = " +
                                                      std::to_string(s.t));
        t.push_back(s.t);
        y.push_back(std::log(p));
    }
    require(t.size() >= 3, ErrorCode::invalid_argument, "fit window holds fewer than three samples");
    const auto n = static_cast<Eigen::Index>(t.size());
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd Y(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        X(k, 0) = 1.0;
        X(k, 1) = t[k];
        Y[k] = y[k];
    }
    const Eigen::Vector2d beta = X.colPivHouseholderQr().solve(Y);
    DecayFit fit;
    fit.points = t.size();
    fit.residual = std::sqrt((X * beta - Y).squaredNorm() / static_cast<double>(n));
    fit.population_rate = -beta[1];
    fit.amplitude_rate = 0.5 * fit.population_rate;
    const double drop = std::abs(beta[1]) * (t.back() - t.front());
    if (drop <= opt.resolve_factor * fit.residual && fit.residual > 0) {
        fit.upper_bound = true;
        fit.population_rate = (drop + opt.resolve_factor * fit.residual) / (t.back() - t.front());
        fit.amplitude_rate = 0.5 * fit.population_rate;
    }
    return fit;
}

} // namespace mdqed
