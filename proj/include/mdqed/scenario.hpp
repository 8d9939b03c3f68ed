#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdqed/dynamics.hpp"

namespace mdqed {

using json = nlohmann::json;

enum class RunMode { spectral, dynamics, both };

inline std::string to_string(RunMode m) {
    switch (m) {
    case RunMode::spectral: return "spectral";
    case RunMode::dynamics: return "dynamics";
    case RunMode::both: return "both";
    }
    return "?";
}

struct ExclusionSpec {
    std::optional<double> side;
    std::optional<Box> box;
    // Carve the box out of regions that contain it; otherwise it must lie in free space.
    bool carve = false;
};

struct OutputSpec {
    std::string directory = ".";
    std::string csv;
    std::string summary;
    std::string echo;
    std::string trajectory;  // empty: not written
};

struct RunSpec {
    RunMode mode = RunMode::spectral;
    EmissionOptions emission;
    OutputSpec output;
};

struct DynamicsSpec {
    double bandwidth = 1.5;
    std::size_t bins = 2080;
    double t_end = 1000.0;
    double dt = 0.05;
    double fit_begin = 300.0;
    double fit_end = 1000.0;
    std::size_t sample_every = 20;
};

struct SweepAxis {
    std::string pointer;  // JSON pointer into the scenario
    std::vector<double> values;
};

struct Scenario {
    std::string id;
    std::string units_mode = "natural";
    UnitsConfig units;
    CavityGeometry geom;
    ModeBasisConfig basis;
    MediumLayout layout;  // exclusion resolved
    AtomConfig atom;
    ExclusionSpec exclusion;
    RunSpec run;
    DynamicsSpec dynamics;
    std::vector<SweepAxis> sweep;
    json canonical;  // every default materialized
};

namespace schema {

inline std::string join(const std::string& base, const std::string& key) { return base + "/" + key; }

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::schema, "field " + (where.empty() ? std::string("/") : where) + ": " + what);
}

inline void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) fail(where, "must be an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) fail(join(where, it.key()), "unknown field");
}

inline double number(const json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(where, "must be finite");
    return v;
}

inline double number_or(const json& parent, const char* key, const std::string& where, double def) {
    return parent.contains(key) ? number(parent.at(key), join(where, key)) : def;
}

inline long integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) fail(where, "must be an integer");
    return j.get<long>();
}

inline std::string string(const json& j, const std::string& where) {
    if (!j.is_string()) fail(where, "must be a string");
    return j.get<std::string>();
}

inline Vec3 vec3(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) fail(where, "must be an array of three numbers");
    Vec3 v;
    for (int a = 0; a < 3; ++a) v[a] = number(j[a], where + "/" + std::to_string(a));
    return v;
}

inline json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

inline Susceptibility oscillators(const json& j, const std::string& where) {
    if (!j.is_array()) fail(where, "must be an array of oscillators");
    Susceptibility s;
    for (std::size_t k = 0; k < j.size(); ++k) {
        const std::string w = where + "/" + std::to_string(k);
        only_keys(j[k], w, {"strength", "resonance", "damping"});
        for (const char* key : {"strength", "resonance", "damping"})
            if (!j[k].contains(key)) fail(join(w, key), "missing");
        LorentzOscillator o{number(j[k]["strength"], join(w, "strength")), number(j[k]["resonance"], join(w, "resonance")),
                            number(j[k]["damping"], join(w, "damping"))};
        try {
            o.validate();
        } catch (const Error& e) {
            fail(w, e.what());
        }
        s.terms.push_back(o);
    }
    return s;
}

inline json oscillators_json(const Susceptibility& s) {
    json a = json::array();
    for (const auto& t : s.terms) a.push_back({{"strength", t.strength}, {"resonance", t.resonance}, {"damping", t.damping}});
    return a;
}

} // namespace schema

// Parses a configuration tree, fills every default and checks types. Physics
// invariants are checked afterwards by validate_scenario.
inline Scenario parse_scenario(const json& in) {
    using namespace schema;
    Scenario sc;
    only_keys(in, "", {"scenario_id", "units", "cavity", "basis", "regions", "atom", "exclusion", "run", "dynamics", "sweep"});

    sc.id = in.contains("scenario_id") ? string(in["scenario_id"], "/scenario_id") : "scenario";
    if (sc.id.empty() || sc.id.find_first_of(",\"\n\r") != std::string::npos)
        fail("/scenario_id", "must be non-empty without commas, quotes or newlines");

    if (in.contains("units")) {
        const auto& u = in["units"];
        if (u.is_string()) {
            sc.units_mode = u.get<std::string>();
            if (sc.units_mode != "natural") fail("/units", "string form only accepts \"natural\"");
        } else {
            only_keys(u, "/units", {"mode", "hbar", "eps0", "mu0", "charge"});
            sc.units_mode = u.contains("mode") ? string(u["mode"], "/units/mode") : "natural";
            if (sc.units_mode == "natural") {
                for (const char* k : {"hbar", "eps0", "mu0", "charge"})
                    if (u.contains(k) && number(u[k], join("/units", k)) != 1.0)
                        fail(join("/units", k), "natural units fix every constant to 1");
            } else if (sc.units_mode == "custom") {
                sc.units.hbar = number_or(u, "hbar", "/units", 1.0);
                sc.units.eps0 = number_or(u, "eps0", "/units", 1.0);
                sc.units.mu0 = number_or(u, "mu0", "/units", 1.0);
                sc.units.charge = number_or(u, "charge", "/units", 1.0);
            } else {
                fail("/units/mode", "must be \"natural\" or \"custom\"");
            }
        }
    }

    if (!in.contains("cavity")) fail("/cavity", "missing");
    {
        const auto& c = in["cavity"];
        only_keys(c, "/cavity", {"lengths", "c"});
        if (!c.contains("lengths")) fail("/cavity/lengths", "missing");
        const Vec3 L = vec3(c["lengths"], "/cavity/lengths");
        sc.geom.L = {L[0], L[1], L[2]};
        sc.geom.c = number_or(c, "c", "/cavity", 1.0);
    }

    if (in.contains("basis")) {
        const auto& b = in["basis"];
        only_keys(b, "/basis", {"n_max", "omega_cut", "quadrature_points", "regulator", "polarization_rotation"});
        if (b.contains("n_max")) sc.basis.n_max = static_cast<int>(integer(b["n_max"], "/basis/n_max"));
        if (b.contains("omega_cut") && !b["omega_cut"].is_null())
            sc.basis.omega_cut = number(b["omega_cut"], "/basis/omega_cut");
        if (b.contains("quadrature_points"))
            sc.basis.quadrature_points = static_cast<int>(integer(b["quadrature_points"], "/basis/quadrature_points"));
        sc.basis.regulator = number_or(b, "regulator", "/basis", 0.0);
        sc.basis.polarization_rotation = number_or(b, "polarization_rotation", "/basis", 0.0);
    }

    if (in.contains("regions")) {
        const auto& rs = in["regions"];
        if (!rs.is_array()) fail("/regions", "must be an array");
        for (std::size_t i = 0; i < rs.size(); ++i) {
            const std::string w = "/regions/" + std::to_string(i);
            only_keys(rs[i], w, {"name", "min", "max", "electric", "magnetic"});
            for (const char* k : {"min", "max"})
                if (!rs[i].contains(k)) fail(join(w, k), "missing");
            MediumRegion r;
            r.name = rs[i].contains("name") ? string(rs[i]["name"], join(w, "name")) : "region" + std::to_string(i);
            r.box = Box{vec3(rs[i]["min"], join(w, "min")), vec3(rs[i]["max"], join(w, "max"))};
            if (rs[i].contains("electric")) r.electric = oscillators(rs[i]["electric"], join(w, "electric"));
            if (rs[i].contains("magnetic")) r.magnetic = oscillators(rs[i]["magnetic"], join(w, "magnetic"));
            sc.layout.regions.push_back(r);
        }
    }

    if (!in.contains("atom")) fail("/atom", "missing");
    {
        const auto& a = in["atom"];
        only_keys(a, "/atom", {"position", "dipole", "omega0"});
        for (const char* k : {"position", "dipole", "omega0"})
            if (!a.contains(k)) fail(join("/atom", k), "missing");
        sc.atom.position = vec3(a["position"], "/atom/position");
        sc.atom.dipole = vec3(a["dipole"], "/atom/dipole");
        sc.atom.omega0 = number(a["omega0"], "/atom/omega0");
    }

    if (in.contains("exclusion") && !in["exclusion"].is_null()) {
        const auto& e = in["exclusion"];
        only_keys(e, "/exclusion", {"side", "min", "max", "carve"});
        if (e.contains("side") && (e.contains("min") || e.contains("max")))
            fail("/exclusion", "give either side or min/max, not both");
        if (e.contains("side")) sc.exclusion.side = number(e["side"], "/exclusion/side");
        if (e.contains("min") || e.contains("max")) {
            if (!e.contains("min") || !e.contains("max")) fail("/exclusion", "min and max must come together");
            sc.exclusion.box = Box{vec3(e["min"], "/exclusion/min"), vec3(e["max"], "/exclusion/max")};
        }
        sc.exclusion.carve = true;
        if (e.contains("carve")) {
            if (!e["carve"].is_boolean()) fail("/exclusion/carve", "must be a boolean");
            sc.exclusion.carve = e["carve"].get<bool>();
        }
    }

    if (in.contains("run")) {
        const auto& r = in["run"];
        only_keys(r, "/run", {"mode", "ladder_levels", "ladder_factor", "rtol", "gamma0", "delta0", "denominator",
                              "markov_threshold", "output"});
        if (r.contains("mode")) {
            const auto m = string(r["mode"], "/run/mode");
            if (m == "spectral") sc.run.mode = RunMode::spectral;
            else if (m == "dynamics") sc.run.mode = RunMode::dynamics;
            else if (m == "both") sc.run.mode = RunMode::both;
            else fail("/run/mode", "must be spectral, dynamics or both");
        }
        auto& eo = sc.run.emission;
        if (r.contains("ladder_levels")) eo.ladder_levels = static_cast<int>(integer(r["ladder_levels"], "/run/ladder_levels"));
        eo.ladder_factor = number_or(r, "ladder_factor", "/run", eo.ladder_factor);
        eo.rtol = number_or(r, "rtol", "/run", eo.rtol);
        eo.gamma0 = number_or(r, "gamma0", "/run", 0.0);
        eo.delta0 = number_or(r, "delta0", "/run", 0.0);
        eo.markov_threshold = number_or(r, "markov_threshold", "/run", eo.markov_threshold);
        if (r.contains("denominator")) {
            const auto d = string(r["denominator"], "/run/denominator");
            if (d == "homogeneous") eo.green.denominator = Denominator::homogeneous;
            else if (d == "mode_diagonal") eo.green.denominator = Denominator::mode_diagonal;
            else fail("/run/denominator", "must be homogeneous or mode_diagonal");
        }
        if (r.contains("output")) {
            const auto& o = r["output"];
            only_keys(o, "/run/output", {"directory", "csv", "summary", "echo", "trajectory"});
            auto& os = sc.run.output;
            if (o.contains("directory")) os.directory = string(o["directory"], "/run/output/directory");
            if (o.contains("csv")) os.csv = string(o["csv"], "/run/output/csv");
            if (o.contains("summary")) os.summary = string(o["summary"], "/run/output/summary");
            if (o.contains("echo")) os.echo = string(o["echo"], "/run/output/echo");
            if (o.contains("trajectory") && !o["trajectory"].is_null())
                os.trajectory = string(o["trajectory"], "/run/output/trajectory");
        }
    }
    auto& os = sc.run.output;
    if (os.csv.empty()) os.csv = sc.id + ".csv";
    if (os.summary.empty()) os.summary = sc.id + ".summary.txt";
    if (os.echo.empty()) os.echo = sc.id + ".echo.json";
    if (sc.run.emission.ladder_levels < 2) fail("/run/ladder_levels", "must be at least 2");
    if (!(sc.run.emission.ladder_factor > 1.0)) fail("/run/ladder_factor", "must exceed 1");
    if (!(sc.run.emission.rtol > 0)) fail("/run/rtol", "must be positive");

    auto& d = sc.dynamics;
    bool fit_given = false;
    if (in.contains("dynamics")) {
        const auto& y = in["dynamics"];
        only_keys(y, "/dynamics", {"bandwidth", "bins", "t_end", "dt", "fit_window", "sample_every"});
        d.bandwidth = number_or(y, "bandwidth", "/dynamics", d.bandwidth);
        if (y.contains("bins")) {
            const long b = integer(y["bins"], "/dynamics/bins");
            if (b < 2) fail("/dynamics/bins", "must be at least 2");
            d.bins = static_cast<std::size_t>(b);
        }
        d.t_end = number_or(y, "t_end", "/dynamics", d.t_end);
        d.dt = number_or(y, "dt", "/dynamics", d.dt);
        if (y.contains("sample_every")) {
            const long s = integer(y["sample_every"], "/dynamics/sample_every");
            if (s < 1) fail("/dynamics/sample_every", "must be at least 1");
            d.sample_every = static_cast<std::size_t>(s);
        }
        if (y.contains("fit_window")) {
            const auto& fw = y["fit_window"];
            if (!fw.is_array() || fw.size() != 2) fail("/dynamics/fit_window", "must be [begin, end]");
            d.fit_begin = number(fw[0], "/dynamics/fit_window/0");
            d.fit_end = number(fw[1], "/dynamics/fit_window/1");
            fit_given = true;
        }
    }
    if (!fit_given) {
        d.fit_begin = 0.3 * d.t_end;
        d.fit_end = d.t_end;
    }
    if (!(d.bandwidth > 0)) fail("/dynamics/bandwidth", "must be positive");
    if (!(d.t_end > 0)) fail("/dynamics/t_end", "must be positive");
    if (!(d.dt > 0)) fail("/dynamics/dt", "must be positive");
    if (!(d.fit_begin >= 0 && d.fit_end > d.fit_begin && d.fit_end <= d.t_end))
        fail("/dynamics/fit_window", "must satisfy 0 <= begin < end <= t_end");

    if (in.contains("sweep")) {
        const auto& s = in["sweep"];
        if (!s.is_array()) fail("/sweep", "must be an array");
        for (std::size_t k = 0; k < s.size(); ++k) {
            const std::string w = "/sweep/" + std::to_string(k);
            only_keys(s[k], w, {"param", "values"});
            if (!s[k].contains("param") || !s[k].contains("values")) fail(w, "needs param and values");
            SweepAxis ax{string(s[k]["param"], join(w, "param")), {}};
            if (!s[k]["values"].is_array() || s[k]["values"].empty()) fail(join(w, "values"), "must be a non-empty array");
            for (std::size_t i = 0; i < s[k]["values"].size(); ++i)
                ax.values.push_back(number(s[k]["values"][i], join(w, "values") + "/" + std::to_string(i)));
            sc.sweep.push_back(ax);
        }
    }
    return sc;
}

// Canonical tree with every default written out; loading it reproduces the scenario.
inline json canonical_json(const Scenario& sc) {
    using schema::vec_json;
    json j;
    j["scenario_id"] = sc.id;
    if (sc.units_mode == "natural") j["units"] = {{"mode", "natural"}};
    else j["units"] = {{"mode", sc.units_mode}, {"hbar", sc.units.hbar}, {"eps0", sc.units.eps0}, {"mu0", sc.units.mu0}, {"charge", sc.units.charge}};
    j["cavity"] = {{"lengths", json::array({sc.geom.L[0], sc.geom.L[1], sc.geom.L[2]})}, {"c", sc.geom.c}};
    j["basis"] = {{"n_max", sc.basis.n_max},
                  {"omega_cut", sc.basis.omega_cut ? json(*sc.basis.omega_cut) : json(nullptr)},
                  {"quadrature_points", sc.basis.quadrature_points},
                  {"regulator", sc.basis.regulator},
                  {"polarization_rotation", sc.basis.polarization_rotation}};
    j["regions"] = json::array();
    for (const auto& r : sc.layout.regions)
        j["regions"].push_back({{"name", r.name}, {"min", vec_json(r.box.lo)}, {"max", vec_json(r.box.hi)},
                                {"electric", schema::oscillators_json(r.electric)},
                                {"magnetic", schema::oscillators_json(r.magnetic)}});
    j["atom"] = {{"position", vec_json(sc.atom.position)}, {"dipole", vec_json(sc.atom.dipole)}, {"omega0", sc.atom.omega0}};
    json ex = {{"carve", sc.exclusion.carve}};
    if (sc.exclusion.box) {
        ex["min"] = vec_json(sc.exclusion.box->lo);
        ex["max"] = vec_json(sc.exclusion.box->hi);
    } else {
        ex["side"] = sc.exclusion.side.value_or(sc.geom.min_side() / 50.0);
    }
    j["exclusion"] = ex;
    const auto& eo = sc.run.emission;
    j["run"] = {{"mode", to_string(sc.run.mode)},
                {"ladder_levels", eo.ladder_levels},
                {"ladder_factor", eo.ladder_factor},
                {"rtol", eo.rtol},
                {"gamma0", eo.gamma0},
                {"delta0", eo.delta0},
                {"denominator", eo.green.denominator == Denominator::homogeneous ? "homogeneous" : "mode_diagonal"},
                {"markov_threshold", eo.markov_threshold},
                {"output",
                 {{"directory", sc.run.output.directory},
                  {"csv", sc.run.output.csv},
                  {"summary", sc.run.output.summary},
                  {"echo", sc.run.output.echo},
                  {"trajectory", sc.run.output.trajectory.empty() ? json(nullptr) : json(sc.run.output.trajectory)}}}};
    const auto& d = sc.dynamics;
    j["dynamics"] = {{"bandwidth", d.bandwidth}, {"bins", d.bins}, {"t_end", d.t_end}, {"dt", d.dt},
                     {"fit_window", json::array({d.fit_begin, d.fit_end})}, {"sample_every", d.sample_every}};
    j["sweep"] = json::array();
    for (const auto& ax : sc.sweep) j["sweep"].push_back({{"param", ax.pointer}, {"values", ax.values}});
    return j;
}

// Physics checks that need the assembled objects: positive dimensions,
// disjoint regions, atom in free space, excluded region placement.
inline void validate_scenario(Scenario& sc) {
    sc.units.validate();
    sc.geom.validate();
    sc.basis.validate();
    MediumLayout bare = sc.layout;
    bare.exclusion.reset();
    bare.validate(sc.geom);
    require(sc.geom.box().contains_strictly(sc.atom.position), ErrorCode::outside_domain,
            "atom must lie inside the cavity");

    const Box v0 = sc.exclusion.box ? *sc.exclusion.box : exclusion_cube(sc.geom, sc.atom.position, sc.exclusion.side);
    if (!sc.exclusion.carve) {
        require(!bare.in_medium(sc.atom.position), ErrorCode::atom_in_medium, "atom position lies inside a medium region");
        for (const auto& r : bare.regions)
            require(!r.box.overlaps(v0), ErrorCode::layout,
                    "excluded free region around the atom overlaps region " + r.name +
                        "; move the atom or give an explicit exclusion");
        sc.layout.exclusion.reset();
    } else {
        sc.layout.exclusion = v0;
    }
    sc.layout.validate(sc.geom);
    require(v0.contains_strictly(sc.atom.position), ErrorCode::layout,
            "atom must lie strictly inside the excluded free region");
    sc.atom.validate(sc.geom, sc.layout);
    require(sc.atom.omega0 - sc.dynamics.bandwidth > 0 || sc.run.mode == RunMode::spectral, ErrorCode::invalid_argument,
            "dynamics band reaches zero frequency; reduce /dynamics/bandwidth");
    sc.canonical = canonical_json(sc);
}

inline Scenario scenario_from_json(const json& j) {
    Scenario sc = parse_scenario(j);
    validate_scenario(sc);
    return sc;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open " + path);
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::schema, "field /: " + path + " is not valid JSON (" + e.what() + ")");
    }
}

inline Scenario load_scenario(const std::string& path) { return scenario_from_json(read_json_file(path)); }

// Accepts "/atom/position/2" or "atom.position.2".
inline std::string normalize_pointer(const std::string& name) {
    require(!name.empty(), ErrorCode::invalid_argument, "empty sweep parameter name");
    if (name[0] == '/') return name;
    std::string out = "/";
    for (char ch : name) out += ch == '.' ? '/' : ch;
    return out;
}

// Returns the scenario with a numeric field replaced and everything re-validated.
inline Scenario with_value(const Scenario& base, const std::string& name, double value) {
    json j = base.canonical;
    const std::string ptr = normalize_pointer(name);
    json::json_pointer p;
    try {
        p = json::json_pointer(ptr);
    } catch (const json::exception&) {
        throw Error(ErrorCode::schema, "field " + ptr + ": not a valid parameter path");
    }
    if (!j.contains(p) || !j.at(p).is_number()) throw Error(ErrorCode::schema, "field " + ptr + ": not a numeric scenario field");
    if (j.at(p).is_number_integer()) {
        require(std::floor(value) == value, ErrorCode::schema, "field " + ptr + ": needs integer values");
        j[p] = static_cast<long>(value);
    } else {
        j[p] = value;
    }
    j["sweep"] = json::array();
    return scenario_from_json(j);
}

} // namespace mdqed
