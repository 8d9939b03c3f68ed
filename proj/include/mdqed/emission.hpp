#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mdqed/green.hpp"
#include "mdqed/parallel.hpp"

namespace mdqed {

struct AtomConfig {
    Vec3 position = Vec3::Zero();
    Vec3 dipole = Vec3::UnitX();
    double omega0 = 1.0;

    void validate(const CavityGeometry& geom, const MediumLayout& layout) const {
        require(std::isfinite(omega0) && omega0 > 0, ErrorCode::invalid_argument, "transition frequency must be positive");
        require(dipole.allFinite() && dipole.norm() > 0, ErrorCode::invalid_argument, "dipole must be non-zero");
        require(geom.box().contains_strictly(position), ErrorCode::outside_domain, "atom must lie inside the cavity");
        require(!layout.in_medium(position), ErrorCode::atom_in_medium, "atom position lies inside a medium region");
        if (layout.exclusion)
            require(layout.exclusion->contains_strictly(position), ErrorCode::layout,
                    "atom must lie strictly inside the excluded free region");
    }
};

struct EmissionOptions {
    GreenOptions green;
    // User-supplied free-space rate and shift, added only in markov_amplitude.
    double gamma0 = 0.0;
    double delta0 = 0.0;
    int ladder_levels = 3;
    double ladder_factor = 1.25;
    double rtol = 1e-3;
    double atol = 1e-14;
    bool v0_sensitivity = true;
    // Keep only photon modes with |omega_n - omega0| <= band.
    std::optional<double> band;
    double markov_threshold = 0.1;
    bool mode_contributions = false;
};

struct LadderLevel {
    int n_max = 0;
    double omega_cut = 0.0;
    int quadrature_points = 0;
    std::size_t n_modes = 0;
    double gamma = 0.0;
    double delta = 0.0;
};

struct ModeContribution {
    ModeIndex n{};
    double omega = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
};

struct EmissionDiagnostics {
    TruncationMeta meta;
    std::vector<LadderLevel> ladder;
    double gamma_uncertainty = 0.0;
    double delta_uncertainty = 0.0;
    bool converged = true;
    // Relative change of gamma when the excluded free region shrinks to half its side.
    std::optional<double> v0_sensitivity;
    cplx homogeneous_shift = 0.0;
    double correlation_time = std::numeric_limits<double>::infinity();
    double markov_ratio = 0.0;
    std::vector<ModeContribution> contributions;
    std::vector<std::string> flags;

    bool has_flag(const std::string& f) const {
        for (const auto& x : flags)
            if (x == f) return true;
        return false;
    }
};

struct EmissionResult {
    double gamma = 0.0;
    double delta = 0.0;
    double gamma0 = 0.0;
    double delta0 = 0.0;
    EmissionDiagnostics diagnostics;
};

namespace detail {

inline ModeBasisConfig ladder_config(const ModeBasisConfig& base, int level, double factor) {
    ModeBasisConfig c = base;
    const double s = std::pow(factor, level);
    c.n_max = static_cast<int>(std::ceil(base.n_max * s - 1e-9));
    if (base.omega_cut) c.omega_cut = *base.omega_cut * s;
    c.quadrature_points = static_cast<int>(std::ceil(base.quadrature_points * s - 1e-9));
    return c;
}

inline ModeBasisConfig band_limited(const CavityGeometry& geom, ModeBasisConfig c, double omega0,
                                    std::optional<double> band) {
    if (!band) return c;
    require(*band > 0, ErrorCode::invalid_argument, "band must be positive");
    c.omega_cut = std::min(c.cutoff(geom), omega0 + *band);
    c.omega_min = std::max(c.omega_min.value_or(0.0), omega0 - *band);
    return c;
}

// d . M . d for a real dipole.
inline cplx project(const Mat3c& m, const Vec3& d) {
    const Eigen::Vector3cd dc = d.cast<cplx>();
    return dc.dot(m * dc);
}

struct RateShift {
    double gamma = 0.0, delta = 0.0;
};

inline RateShift rate_shift(const Mat3c& g, const Vec3& d, const UnitsConfig& units) {
    const cplx v = project(g, d);
    return {0.0 - v.imag() / units.hbar, v.real() / units.hbar};
}

} // namespace detail

// Decay constant and level shift from the medium dyadic at omega0 + i0, with a
// refinement ladder over the mode truncation.
inline EmissionResult decay_and_shift(const CavityGeometry& geom, const MediumLayout& layout, const AtomConfig& atom,
                                      const ModeBasisConfig& cfg, const UnitsConfig& units = {},
                                      const EmissionOptions& opt = {}) {
    geom.validate();
    cfg.validate();
    units.validate();
    layout.validate(geom);
    atom.validate(geom, layout);
    require(opt.ladder_levels >= 2, ErrorCode::invalid_argument, "convergence ladder needs at least two levels");
    require(opt.ladder_factor > 1.0, ErrorCode::invalid_argument, "ladder factor must exceed 1");

    EmissionResult res;
    res.gamma0 = opt.gamma0;
    res.delta0 = opt.delta0;
    auto& diag = res.diagnostics;
    const auto freq = Frequency::above_axis(atom.omega0);

    std::optional<DyadicExpansion> finest;
    for (int level = 0; level < opt.ladder_levels; ++level) {
        const auto c = detail::band_limited(geom, detail::ladder_config(cfg, level, opt.ladder_factor), atom.omega0,
                                            opt.band);
        DyadicExpansion ex(geom, layout, atom.position, c, units, opt.green);
        const auto g = ex.medium(freq);
        const auto rs = detail::rate_shift(g.value, atom.dipole, units);
        diag.ladder.push_back({c.n_max, g.meta.omega_cut, c.quadrature_points, g.meta.n_modes, rs.gamma, rs.delta});
        if (level == opt.ladder_levels - 1) {
            diag.meta = g.meta;
            finest.emplace(std::move(ex));
        }
    }
    const auto& last = diag.ladder.back();
    const auto& prev = diag.ladder[diag.ladder.size() - 2];
    res.gamma = last.gamma;
    res.delta = last.delta;
    diag.gamma_uncertainty = std::abs(last.gamma - prev.gamma);
    diag.delta_uncertainty = std::abs(last.delta - prev.delta);
    const bool g_ok = diag.gamma_uncertainty <= opt.rtol * std::abs(last.gamma) + opt.atol;
    const bool d_ok = diag.delta_uncertainty <= opt.rtol * std::abs(last.delta) + opt.atol;
    diag.converged = g_ok && d_ok;
    if (!diag.converged) diag.flags.push_back("unconverged");
    if (opt.band) diag.flags.push_back("band-restricted");

    // Markov gate: slowest bath correlation set by the closest dressed mode.
    diag.homogeneous_shift = layout.empty() ? cplx(0.0) : finest->homogeneous_shift(freq);
    double closest = std::numeric_limits<double>::infinity();
    for (const auto& m : finest->modes().modes)
        closest = std::min(closest, std::abs(atom.omega0 - m.omega * (1.0 + diag.homogeneous_shift.real())));
    diag.correlation_time = closest > 0 ? 1.0 / closest : std::numeric_limits<double>::infinity();
    diag.markov_ratio = res.gamma == 0.0 ? 0.0 : diag.correlation_time * std::abs(res.gamma);
    if (diag.markov_ratio > opt.markov_threshold) diag.flags.push_back("markov-gate");

    if (res.gamma < -(diag.gamma_uncertainty + opt.atol)) diag.flags.push_back("negative-gamma");

    if (opt.mode_contributions && !layout.empty()) {
        const auto rows = finest->medium_rows(freq);
        const auto& modes = finest->modes().modes;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const auto rs = detail::rate_shift(rows[k], atom.dipole, units);
            diag.contributions.push_back({modes[k].n, modes[k].omega, rs.gamma, rs.delta});
        }
    }

    if (opt.v0_sensitivity && layout.exclusion) {
        bool carves = false;
        for (const auto& r : layout.regions) carves = carves || r.box.overlaps(*layout.exclusion);
        if (!carves) {
            diag.v0_sensitivity = 0.0;
        } else {
            const Box& ex = *layout.exclusion;
            const Vec3 half = 0.25 * (ex.hi - ex.lo);
            MediumLayout shrunk = layout;
            shrunk.exclusion = Box{(atom.position - half).cwiseMax(ex.lo), (atom.position + half).cwiseMin(ex.hi)};
            const auto c0 = detail::band_limited(geom, cfg, atom.omega0, opt.band);
            const auto a = DyadicExpansion(geom, layout, atom.position, c0, units, opt.green).medium(freq);
            const auto b = DyadicExpansion(geom, shrunk, atom.position, c0, units, opt.green).medium(freq);
            const double ga = detail::rate_shift(a.value, atom.dipole, units).gamma;
            const double gb = detail::rate_shift(b.value, atom.dipole, units).gamma;
            diag.v0_sensitivity = std::abs(gb - ga) / std::max(std::abs(ga), opt.atol);
        }
    }
    return res;
}

// Weak-coupling amplitude c(t) = exp(-i w0 t - (G0 + G + i (D0 + D)) t).
inline cplx markov_amplitude(const EmissionResult& r, double omega0, double t) {
    require(t >= 0, ErrorCode::invalid_argument, "time must be non-negative");
    const cplx rate(r.gamma0 + r.gamma, r.delta0 + r.delta);
    return std::exp(-I * omega0 * t - rate * t);
}

struct KernelOptions {
    // Distance of the frequency line above the real axis; the kernel carries e^{-offset tau}.
    double offset = 0.01;
    // Window edges; default [-omega_cut, 2 omega_cut].
    std::optional<double> lo, hi;
    // Gauss-Legendre panel width; default equals the offset.
    std::optional<double> panel_width;
    int panel_order = 4;
    bool include_vacuum = false;
};

// K(tau) = (1/2 pi) int e^{-i w tau} d . G(R, R, w + i offset) . d dw over the window,
// with the dyadic sampled once on a fixed composite rule.
class MemoryKernel {
public:
    MemoryKernel(const CavityGeometry& geom, const MediumLayout& layout, const AtomConfig& atom,
                 const ModeBasisConfig& cfg, const UnitsConfig& units = {}, const GreenOptions& gopt = {},
                 const KernelOptions& kopt = {})
        : opt_(kopt) {
        layout.validate(geom);
        atom.validate(geom, layout);
        require(kopt.offset > 0, ErrorCode::invalid_argument, "kernel frequency offset must be positive");
        require(kopt.panel_order >= 2, ErrorCode::invalid_argument, "panel order must be >= 2");
        const double wc = cfg.cutoff(geom);
        lo_ = kopt.lo.value_or(-wc);
        hi_ = kopt.hi.value_or(2.0 * wc);
        require(hi_ > lo_, ErrorCode::invalid_argument, "kernel window must have positive width");
        const double width = kopt.panel_width.value_or(kopt.offset);
        require(width > 0, ErrorCode::invalid_argument, "panel width must be positive");
        const auto panels = static_cast<std::size_t>(std::ceil((hi_ - lo_) / width));
        rule_ = composite_gauss_legendre(lo_, hi_, panels, kopt.panel_order);
        samples_.assign(rule_.nodes.size(), cplx(0.0));
        if (layout.empty() && !kopt.include_vacuum) return;

        const DyadicExpansion ex(geom, layout, atom.position, cfg, units, gopt);
        parallel_for(rule_.nodes.size(), [&](std::size_t j) {
            const Frequency f = Frequency::at(cplx(rule_.nodes[j], kopt.offset));
            Mat3c g = ex.medium(f).value;
            if (kopt.include_vacuum) g += ex.vacuum(f).value;
            samples_[j] = detail::project(g, atom.dipole);
        });
    }

    cplx operator()(double tau) const {
        require(tau >= 0, ErrorCode::invalid_argument, "kernel time must be non-negative");
        cplx sum = 0.0;
        for (std::size_t j = 0; j < samples_.size(); ++j)
            sum += rule_.weights[j] * std::exp(-I * (rule_.nodes[j] * tau)) * samples_[j];
        return sum / (2.0 * pi);
    }

    std::vector<cplx> series(const std::vector<double>& taus) const {
        std::vector<cplx> out(taus.size());
        parallel_for(taus.size(), [&](std::size_t i) { out[i] = (*this)(taus[i]); });
        return out;
    }

    // Sampled d . G . d on the offset line.
    const std::vector<cplx>& samples() const { return samples_; }
    const QuadratureRule& rule() const { return rule_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    const KernelOptions& options() const { return opt_; }

private:
    KernelOptions opt_;
    double lo_ = 0.0, hi_ = 0.0;
    QuadratureRule rule_;
    std::vector<cplx> samples_;
};

inline cplx memory_kernel(const CavityGeometry& geom, const MediumLayout& layout, const AtomConfig& atom, double tau,
                          const ModeBasisConfig& cfg, const UnitsConfig& units = {}, const GreenOptions& gopt = {},
                          const KernelOptions& kopt = {}) {
    require(tau >= 0, ErrorCode::invalid_argument, "kernel time must be non-negative");
    return MemoryKernel(geom, layout, atom, cfg, units, gopt, kopt)(tau);
}

} // namespace mdqed
