#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>
#include <unistd.h>

#include "mdqed/parallel.hpp"
#include "mdqed/scenario.hpp"

namespace mdqed {

enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 1,
    exit_validation = 2,
    exit_unconverged = 3,
    exit_non_markovian = 4,
    exit_negative_gamma = 5,
};

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("SHA-256 digest failed");
    }
    EVP_MD_CTX_free(ctx);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

inline std::string config_hash(const json& canonical) { return sha256_hex(canonical.dump()); }

// Writes through a temporary file in the same directory, then renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::ios_base::failure("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::ios_base::failure("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

struct PointResult {
    std::vector<std::pair<std::string, double>> params;
    AtomConfig atom;
    double omega_cut = 0.0;
    int quadrature_points = 0;
    std::optional<EmissionResult> spectral;
    std::optional<DecayFit> fit;
    double gamma_dynamic = std::numeric_limits<double>::quiet_NaN();
    double gamma_band = std::numeric_limits<double>::quiet_NaN();
    double ratio = std::numeric_limits<double>::quiet_NaN();
    double norm_drift = std::numeric_limits<double>::quiet_NaN();
    std::string message;
    std::set<std::string> flags;
    double wall_seconds = 0.0;
};

struct RunReport {
    std::string scenario_id;
    std::string hash;
    RunMode mode = RunMode::spectral;
    json echo;
    std::vector<PointResult> points;
    double wall_seconds = 0.0;
    int exit_code = exit_ok;
};

namespace detail {

inline void classify(RunReport& rep) {
    double gmax = 0.0;
    for (const auto& p : rep.points)
        if (p.spectral) gmax = std::max(gmax, p.spectral->gamma);
    const double eps = 1e-3 * gmax;
    bool negative = false, non_markov = false, unconverged = false;
    for (auto& p : rep.points) {
        p.flags.erase("negative-gamma");
        if (p.spectral && p.spectral->gamma < -eps) p.flags.insert("negative-gamma");
        negative = negative || p.flags.count("negative-gamma");
        non_markov = non_markov || p.flags.count("non-markovian");
        unconverged = unconverged || p.flags.count("unconverged") || p.flags.count("norm-drift");
    }
    rep.exit_code = negative ? exit_negative_gamma : non_markov ? exit_non_markovian : unconverged ? exit_unconverged : exit_ok;
}

inline std::string write_trajectory_string(const Trajectory& tr) {
    std::ostringstream os;
    write_trajectory_csv(os, tr);
    return os.str();
}

} // namespace detail

// One scenario point: spectral ladder and/or time-domain run with fit.
inline PointResult run_point(const Scenario& sc, RunMode mode, Trajectory* trajectory = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    PointResult pr;
    pr.atom = sc.atom;
    pr.omega_cut = sc.basis.cutoff(sc.geom);
    pr.quadrature_points = sc.basis.quadrature_points;

    if (mode != RunMode::dynamics) {
        pr.spectral = decay_and_shift(sc.geom, sc.layout, sc.atom, sc.basis, sc.units, sc.run.emission);
        for (const auto& f : pr.spectral->diagnostics.flags) pr.flags.insert(f);
        pr.omega_cut = pr.spectral->diagnostics.meta.omega_cut;
        pr.quadrature_points = pr.spectral->diagnostics.meta.quadrature_points;
    }
    if (mode != RunMode::spectral) {
        const auto& d = sc.dynamics;
        DynamicsOptions dop;
        dop.t_end = d.t_end;
        dop.dt = d.dt;
        dop.sample_every = d.sample_every;
        const auto disc = build_discretization(sc.atom.omega0, d.bandwidth, d.bins);
        try {
            const auto tr = integrate(sc.geom, sc.layout, sc.atom, disc, sc.basis, sc.units, dop);
            pr.norm_drift = tr.max_norm_drift;
            if (trajectory) *trajectory = tr;
            FitOptions fo;
            fo.t_begin = d.fit_begin;
            fo.t_end = d.fit_end;
            pr.fit = fit_decay(tr, fo);
            pr.gamma_dynamic = pr.fit->amplitude_rate;
            if (pr.fit->upper_bound) pr.flags.insert("upper-bound");
        } catch (const Error& e) {
            if (e.code() == ErrorCode::non_markovian) pr.flags.insert("non-markovian");
            else if (e.code() == ErrorCode::norm_drift) pr.flags.insert("norm-drift");
            else throw;
            pr.message = e.what();
        }
        if (mode == RunMode::both && pr.fit) {
            EmissionOptions band = sc.run.emission;
            band.band = d.bandwidth;
            band.ladder_levels = 2;
            band.v0_sensitivity = false;
            const auto rb = decay_and_shift(sc.geom, sc.layout, sc.atom, sc.basis, sc.units, band);
            pr.gamma_band = rb.diagnostics.ladder.front().gamma;
            if (rb.diagnostics.ladder.front().n_modes != pr.spectral->diagnostics.ladder.front().n_modes)
                pr.flags.insert("band-restricted");
            const bool markov_ok = pr.spectral->diagnostics.markov_ratio <= sc.run.emission.markov_threshold;
            if (markov_ok && pr.gamma_band != 0.0) pr.ratio = pr.gamma_dynamic / pr.gamma_band;
        }
    }
    pr.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return pr;
}

// Runs the scenario, or the Cartesian product of its sweep axes, in a worker pool.
inline RunReport run_scenario(const Scenario& sc, std::optional<RunMode> mode_override = std::nullopt,
                              const std::vector<SweepAxis>& extra_axes = {}, Trajectory* trajectory = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    RunReport rep;
    rep.scenario_id = sc.id;
    rep.mode = mode_override.value_or(sc.run.mode);

    std::vector<SweepAxis> axes = sc.sweep;
    axes.insert(axes.end(), extra_axes.begin(), extra_axes.end());
    for (auto& ax : axes) ax.pointer = normalize_pointer(ax.pointer);
    // The echo records what was actually run, so re-running it reproduces the report.
    rep.echo = sc.canonical;
    rep.echo["run"]["mode"] = to_string(rep.mode);
    rep.echo["sweep"] = json::array();
    for (const auto& ax : axes) rep.echo["sweep"].push_back({{"param", ax.pointer}, {"values", ax.values}});
    rep.hash = config_hash(rep.echo);
    std::size_t total = 1;
    for (const auto& ax : axes) {
        require(!ax.values.empty(), ErrorCode::invalid_argument, "sweep axis " + ax.pointer + " has no values");
        total *= ax.values.size();
    }

    // Expand and validate every point before any work starts.
    std::vector<Scenario> points;
    std::vector<std::vector<std::pair<std::string, double>>> params;
    for (std::size_t idx = 0; idx < total; ++idx) {
        Scenario p = sc;
        std::vector<std::pair<std::string, double>> pv;
        std::size_t rest = idx;
        for (std::size_t a = axes.size(); a-- > 0;) {
            const double v = axes[a].values[rest % axes[a].values.size()];
            rest /= axes[a].values.size();
            pv.insert(pv.begin(), {axes[a].pointer, v});
        }
        for (const auto& [ptr, v] : pv) p = with_value(p, ptr, v);
        points.push_back(std::move(p));
        params.push_back(std::move(pv));
    }

    rep.points.resize(total);
    Trajectory* tr = total == 1 ? trajectory : nullptr;
    parallel_for(total, [&](std::size_t i) {
        rep.points[i] = run_point(points[i], rep.mode, tr);
        rep.points[i].params = params[i];
    });
    detail::classify(rep);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

inline const char* csv_header() {
    return "scenario_id,omega0,R_x,R_y,R_z,d_x,d_y,d_z,gamma,delta,gamma_dynamic,ratio,omega_cut,quad_pts,flags";
}

namespace detail {

inline std::string num(double v) {
    if (std::isnan(v)) return "";
    std::ostringstream os;
    os << std::setprecision(12) << std::scientific << v;
    return os.str();
}

inline std::string joined(const std::set<std::string>& s, const char* sep) {
    std::string out;
    for (const auto& x : s) out += (out.empty() ? "" : sep) + x;
    return out;
}

} // namespace detail

inline std::string report_csv(const RunReport& rep) {
    using detail::num;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::ostringstream os;
    os << csv_header() << '\n';
    for (const auto& p : rep.points) {
        const auto& a = p.atom;
        os << rep.scenario_id << ',' << num(a.omega0);
        for (int k = 0; k < 3; ++k) os << ',' << num(a.position[k]);
        for (int k = 0; k < 3; ++k) os << ',' << num(a.dipole[k]);
        os << ',' << num(p.spectral ? p.spectral->gamma : nan) << ',' << num(p.spectral ? p.spectral->delta : nan) << ','
           << num(p.gamma_dynamic) << ',' << num(p.ratio) << ',' << num(p.omega_cut) << ',' << p.quadrature_points
           << ',' << detail::joined(p.flags, ";") << '\n';
    }
    return os.str();
}

// Human-readable block. Everything above the timing section is deterministic.
inline std::string report_summary(const RunReport& rep, bool with_timing = true) {
    using detail::num;
    std::ostringstream os;
    os << "mdqed report\n";
    os << "scenario      " << rep.scenario_id << '\n';
    os << "config sha256 " << rep.hash << '\n';
    os << "mode          " << to_string(rep.mode) << '\n';
    os << "points        " << rep.points.size() << '\n';
    os << "exit status   " << rep.exit_code << '\n';
    for (std::size_t i = 0; i < rep.points.size(); ++i) {
        const auto& p = rep.points[i];
        os << "\n[point " << i << "]";
        for (const auto& [k, v] : p.params) os << ' ' << k << '=' << num(v);
        os << '\n';
        if (p.spectral) {
            const auto& s = *p.spectral;
            const auto& d = s.diagnostics;
            os << "  gamma " << num(s.gamma) << " +- " << num(d.gamma_uncertainty) << "   delta " << num(s.delta)
               << " +- " << num(d.delta_uncertainty) << "   converged " << (d.converged ? "yes" : "no") << '\n';
            os << "  ladder  n_max  omega_cut          quad  modes  gamma               delta\n";
            for (const auto& l : d.ladder)
                os << "          " << std::setw(5) << l.n_max << "  " << num(l.omega_cut) << "  " << std::setw(4)
                   << l.quadrature_points << "  " << std::setw(5) << l.n_modes << "  " << num(l.gamma) << "  "
                   << num(l.delta) << '\n';
            os << "  markov ratio " << num(d.markov_ratio) << " (correlation time " << num(d.correlation_time) << ")\n";
            os << "  W_h(omega0) " << num(d.homogeneous_shift.real()) << ' ' << num(d.homogeneous_shift.imag()) << "i\n";
            if (d.v0_sensitivity) os << "  V0 sensitivity " << num(*d.v0_sensitivity) << '\n';
            if (s.gamma0 != 0.0 || s.delta0 != 0.0)
                os << "  user gamma0 " << num(s.gamma0) << "   delta0 " << num(s.delta0) << '\n';
        }
        if (p.fit) {
            os << "  gamma_dynamic " << num(p.gamma_dynamic) << "   fit residual " << num(p.fit->residual) << "   samples "
               << p.fit->points << "   norm drift " << num(p.norm_drift) << '\n';
            if (!std::isnan(p.gamma_band))
                os << "  spectral gamma on dynamics basis " << num(p.gamma_band) << "   ratio " << num(p.ratio) << '\n';
        }
        if (!p.message.empty()) os << "  note: " << p.message << '\n';
        os << "  flags: " << (p.flags.empty() ? "none" : detail::joined(p.flags, ", ")) << '\n';
    }
    if (with_timing) {
        os << "\ntiming (not part of the report body)\n";
        double cumulative = 0.0;
        for (std::size_t i = 0; i < rep.points.size(); ++i) {
            cumulative += rep.points[i].wall_seconds;
            os << "  point " << i << ": " << std::fixed << std::setprecision(3) << rep.points[i].wall_seconds
               << " s, cumulative " << cumulative << " s\n";
        }
        os << "  wall total: " << std::fixed << std::setprecision(3) << rep.wall_seconds << " s\n";
    }
    return os.str();
}

inline std::filesystem::path output_path(const OutputSpec& o, const std::string& name) {
    const std::filesystem::path p(name);
    return p.is_absolute() ? p : std::filesystem::path(o.directory) / p;
}

inline void write_report(const RunReport& rep, const OutputSpec& out, const Trajectory* trajectory = nullptr) {
    write_atomic(output_path(out, out.csv), report_csv(rep));
    write_atomic(output_path(out, out.summary), report_summary(rep));
    write_atomic(output_path(out, out.echo), rep.echo.dump(2) + "\n");
    if (trajectory && !out.trajectory.empty() && !trajectory->samples.empty())
        write_atomic(output_path(out, out.trajectory), detail::write_trajectory_string(*trajectory));
}

// "1,2,3" or "start:stop:count".
inline std::vector<double> parse_values(const std::string& text) {
    std::vector<double> out;
    auto to_double = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (...) {
            used = 0;
        }
        require(used == s.size() && !s.empty() && std::isfinite(v), ErrorCode::invalid_argument,
                "cannot read sweep value '" + s + "'");
        return v;
    };
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
        require(parts.size() == 3, ErrorCode::invalid_argument, "range form is start:stop:count");
        const double a = to_double(parts[0]), b = to_double(parts[1]);
        const double n = to_double(parts[2]);
        require(n >= 1 && std::floor(n) == n, ErrorCode::invalid_argument, "range count must be a positive integer");
        const auto cnt = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i < cnt; ++i) out.push_back(cnt == 1 ? a : a + (b - a) * double(i) / double(cnt - 1));
        return out;
    }
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(to_double(item));
    require(!out.empty(), ErrorCode::invalid_argument, "empty sweep value list");
    return out;
}

inline int exit_code_for(const Error& e) {
    switch (e.code()) {
    case ErrorCode::non_convergence:
    case ErrorCode::norm_drift: return exit_unconverged;
    case ErrorCode::non_markovian: return exit_non_markovian;
    default: return exit_validation;
    }
}

} // namespace mdqed
