#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mdqed/mdqed.hpp"

using namespace mdqed;
namespace fs = std::filesystem;

namespace {

json minimal() {
    return json::parse(R"({
        "cavity": { "lengths": [3.141592653589793, 3.141592653589793, 3.141592653589793] },
        "basis": { "omega_cut": 5.0, "regulator": 2.0 },
        "regions": [ { "name": "slab", "min": [0, 0, 0], "max": [3.141592653589793, 3.141592653589793, 1.5707963267948966],
                       "electric": [ { "strength": 0.5, "resonance": 2.5, "damping": 0.5 } ] } ],
        "atom": { "position": [1.5707963267948966, 1.5707963267948966, 2.356194490192345],
                  "dipole": [0.05, 0.0, 0.0], "omega0": 2.1 }
    })");
}

ErrorCode code_of(const json& j) {
    try {
        scenario_from_json(j);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "scenario was accepted";
    return ErrorCode::invalid_argument;
}

std::string schema_message(const json& j) {
    try {
        scenario_from_json(j);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::schema);
        return e.what();
    }
    ADD_FAILURE() << "scenario was accepted";
    return {};
}

std::size_t rows(const std::string& csv) {
    std::istringstream is(csv);
    std::size_t n = 0;
    for (std::string line; std::getline(is, line);) ++n;
    return n - 1;
}

struct TempDir {
    TempDir() : path(fs::temp_directory_path() / ("mdqed_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                                                   ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path path;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST(LoadScenario, MinimalFileMaterializesDefaults) {
    const auto sc = scenario_from_json(minimal());
    const auto& c = sc.canonical;
    EXPECT_EQ(c["scenario_id"], "scenario");
    EXPECT_EQ(c["units"]["mode"], "natural");
    EXPECT_EQ(c["basis"]["quadrature_points"], sc.basis.quadrature_points);
    EXPECT_EQ(c["run"]["mode"], "spectral");
    EXPECT_GE(c["run"]["ladder_levels"].get<int>(), 2);
    EXPECT_EQ(c["dynamics"]["bins"], sc.dynamics.bins);
    EXPECT_NEAR(c["exclusion"]["side"].get<double>(), pi / 50.0, 1e-15);
    EXPECT_EQ(c["run"]["output"]["csv"], "scenario.csv");
    EXPECT_EQ(c["regions"][0]["magnetic"], json::array());
}

TEST(LoadScenario, ReadsFileFromDisk) {
    const auto sc = load_scenario(std::string(MDQED_SOURCE_DIR) + "/scenarios/half_slab.json");
    EXPECT_EQ(sc.id, "half_slab");
    EXPECT_EQ(sc.layout.regions.size(), 1u);
    EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), std::ios_base::failure);
}

TEST(LoadScenario, AtomInsideMediumIsPhysicsError) {
    auto j = minimal();
    j["atom"]["position"] = {1.0, 1.0, 1.0};
    EXPECT_EQ(code_of(j), ErrorCode::atom_in_medium);
    try {
        scenario_from_json(j);
    } catch (const Error& e) {
        EXPECT_EQ(std::string(e.what()).rfind("atom-in-medium", 0), 0u);
    }
}

TEST(LoadScenario, NegativeLengthIsGeometryError) {
    auto j = minimal();
    j["cavity"]["lengths"][0] = -3.0;
    EXPECT_EQ(code_of(j), ErrorCode::geometry);
}

TEST(LoadScenario, SchemaErrorsNameTheField) {
    auto j = minimal();
    j["atom"]["omega0"] = "fast";
    EXPECT_NE(schema_message(j).find("/atom/omega0"), std::string::npos);

    j = minimal();
    j["basis"]["omega_cutt"] = 4.0;
    EXPECT_NE(schema_message(j).find("/basis/omega_cutt"), std::string::npos);

    j = minimal();
    j["regions"][0].erase("max");
    EXPECT_NE(schema_message(j).find("/regions/0/max"), std::string::npos);

    j = minimal();
    j["dynamics"] = {{"fit_window", {10.0, 5.0}}};
    EXPECT_NE(schema_message(j).find("/dynamics/fit_window"), std::string::npos);

    j = minimal();
    j["run"] = {{"mode", "sideways"}};
    EXPECT_NE(schema_message(j).find("/run/mode"), std::string::npos);
}

TEST(LoadScenario, OverlappingRegionsRejected) {
    auto j = minimal();
    j["regions"].push_back({{"min", {0, 0, 1.0}}, {"max", {1, 1, 2.0}}});
    EXPECT_EQ(code_of(j), ErrorCode::layout);
}

TEST(RunScenario, EmptyMediumGivesZeroRows) {
    auto j = minimal();
    j["regions"] = json::array();
    const auto rep = run_scenario(scenario_from_json(j));
    ASSERT_EQ(rep.points.size(), 1u);
    const auto& s = *rep.points[0].spectral;
    EXPECT_EQ(s.gamma, 0.0);
    EXPECT_EQ(s.delta, 0.0);
    EXPECT_GE(s.diagnostics.ladder.size(), 2u);
    EXPECT_TRUE(s.diagnostics.converged);
    EXPECT_EQ(rep.exit_code, exit_ok);
    EXPECT_EQ(rows(report_csv(rep)), 1u);
}

TEST(RunScenario, SpectralReportCarriesLadderAndMetadata) {
    const auto rep = run_scenario(scenario_from_json(minimal()));
    const auto& p = rep.points.at(0);
    ASSERT_TRUE(p.spectral);
    EXPECT_GT(p.spectral->gamma, 0.0);
    EXPECT_GE(p.spectral->diagnostics.ladder.size(), 2u);
    EXPECT_EQ(p.omega_cut, p.spectral->diagnostics.meta.omega_cut);
    EXPECT_FALSE(p.fit);
    const auto csv = report_csv(rep);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), csv_header());
}

TEST(RunScenario, BothModeRatioNearOne) {
    const auto sc = load_scenario(std::string(MDQED_SOURCE_DIR) + "/scenarios/weak_slab_both.json");
    const auto rep = run_scenario(sc);
    const auto& p = rep.points.at(0);
    ASSERT_TRUE(p.fit);
    EXPECT_GE(p.ratio, 0.95);
    EXPECT_LE(p.ratio, 1.05);
    EXPECT_LT(p.norm_drift, 1e-8);
    EXPECT_EQ(rep.exit_code, exit_ok);
}

TEST(RunScenario, PositionSweepGivesOneRowPerPoint) {
    const auto sc = scenario_from_json(minimal());
    const auto values = parse_values("1.8:3.0:10");
    const auto rep = run_scenario(sc, std::nullopt, {{"atom.position.2", values}});
    ASSERT_EQ(rep.points.size(), 10u);
    EXPECT_EQ(rows(report_csv(rep)), 10u);
    double total = 0.0;
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_EQ(rep.points[i].atom.position[2], values[i]);
        EXPECT_EQ(rep.points[i].params.at(0).first, "/atom/position/2");
        EXPECT_GE(rep.points[i].wall_seconds, 0.0);
        total += rep.points[i].wall_seconds;
    }
    EXPECT_LE(total, rep.wall_seconds * static_cast<double>(thread_count()) + 1e-6);
}

TEST(RunScenario, SweepPointInsideMediumRejectedUpFront) {
    const auto sc = scenario_from_json(minimal());
    EXPECT_THROW(run_scenario(sc, std::nullopt, {{"/atom/position/2", {2.0, 1.0}}}), Error);
    EXPECT_THROW(run_scenario(sc, std::nullopt, {{"/atom/colour", {1.0}}}), Error);
}

TEST(RunScenario, ReportBodyIsDeterministic) {
    const auto sc = scenario_from_json(minimal());
    const auto a = run_scenario(sc, std::nullopt, {{"/atom/omega0", {1.9, 2.3}}});
    const auto b = run_scenario(sc, std::nullopt, {{"/atom/omega0", {1.9, 2.3}}});
    EXPECT_EQ(report_csv(a), report_csv(b));
    EXPECT_EQ(report_summary(a, false), report_summary(b, false));
    EXPECT_EQ(a.hash, b.hash);
}

TEST(RunScenario, EchoRoundTripReproducesReport) {
    const auto sc = scenario_from_json(minimal());
    const auto a = run_scenario(sc, std::nullopt, {{"/atom/position/0", {1.2, 1.9}}});
    const auto again = scenario_from_json(a.echo);
    const auto b = run_scenario(again);
    EXPECT_EQ(report_csv(a), report_csv(b));
    EXPECT_EQ(report_summary(a, false), report_summary(b, false));
    EXPECT_EQ(a.hash, b.hash);
}

TEST(Report, FilesWrittenToOutputDirectory) {
    TempDir tmp;
    auto sc = scenario_from_json(minimal());
    sc.run.output.directory = tmp.path.string();
    const auto rep = run_scenario(sc);
    write_report(rep, sc.run.output);
    EXPECT_EQ(slurp(tmp.path / "scenario.csv"), report_csv(rep));
    EXPECT_EQ(json::parse(slurp(tmp.path / "scenario.echo.json")), rep.echo);
    EXPECT_NE(slurp(tmp.path / "scenario.summary.txt").find(rep.hash), std::string::npos);
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(tmp.path)) ++files;
    EXPECT_EQ(files, 3u);
}

TEST(Report, AtomicWriteReplacesContent) {
    TempDir tmp;
    const auto p = tmp.path / "out.txt";
    write_atomic(p, "first\n");
    write_atomic(p, "second\n");
    EXPECT_EQ(slurp(p), "second\n");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(tmp.path)) ++files;
    EXPECT_EQ(files, 1u);
}

TEST(Report, Sha256KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Report, HashTracksConfigContent) {
    const auto a = scenario_from_json(minimal());
    auto j = minimal();
    j["atom"]["omega0"] = 2.2;
    const auto b = scenario_from_json(j);
    EXPECT_EQ(config_hash(a.canonical), config_hash(scenario_from_json(a.canonical).canonical));
    EXPECT_NE(config_hash(a.canonical), config_hash(b.canonical));
}

TEST(ParseValues, ListsAndRanges) {
    EXPECT_EQ(parse_values("1,2.5,-3"), (std::vector<double>{1.0, 2.5, -3.0}));
    EXPECT_EQ(parse_values("0:1:5"), (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
    EXPECT_EQ(parse_values("4:9:1"), (std::vector<double>{4.0}));
    for (const char* bad : {"", "a", "1,,2", "1:2", "0:1:0", "0:1:2.5", "1e999"}) EXPECT_THROW(parse_values(bad), Error) << bad;
}

TEST(ExitCodes, MapErrorsAndFlags) {
    EXPECT_EQ(exit_code_for(Error(ErrorCode::schema, "x")), exit_validation);
    EXPECT_EQ(exit_code_for(Error(ErrorCode::atom_in_medium, "x")), exit_validation);
    EXPECT_EQ(exit_code_for(Error(ErrorCode::non_convergence, "x")), exit_unconverged);
    EXPECT_EQ(exit_code_for(Error(ErrorCode::norm_drift, "x")), exit_unconverged);
    EXPECT_EQ(exit_code_for(Error(ErrorCode::non_markovian, "x")), exit_non_markovian);

    auto point = [](double gamma, std::set<std::string> flags) {
        PointResult p;
        p.spectral = EmissionResult{};
        p.spectral->gamma = gamma;
        p.flags = std::move(flags);
        return p;
    };
    RunReport rep;
    rep.points = {point(1.0, {}), point(-1e-4, {})};
    detail::classify(rep);
    EXPECT_EQ(rep.exit_code, exit_ok);
    rep.points.push_back(point(0.5, {"unconverged"}));
    detail::classify(rep);
    EXPECT_EQ(rep.exit_code, exit_unconverged);
    rep.points.push_back(point(0.5, {"non-markovian"}));
    detail::classify(rep);
    EXPECT_EQ(rep.exit_code, exit_non_markovian);
    rep.points.push_back(point(-0.01, {}));
    detail::classify(rep);
    EXPECT_EQ(rep.exit_code, exit_negative_gamma);
    EXPECT_TRUE(rep.points.back().flags.count("negative-gamma"));
}
