#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "speclab/cli.hpp"
#include "support.hpp"

using namespace speclab;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory per test case, removed afterwards.
class Scratch {
protected:
    fs::path dir;

    Scratch()
    {
        static int counter = 0;
        dir = fs::temp_directory_path() / ("speclab_io_" + std::to_string(::getpid()) + "_" + std::to_string(++counter));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }

    fs::path write(const std::string& name, const std::string& text) const
    {
        std::ofstream(dir / name, std::ios::binary) << text;
        return dir / name;
    }

    struct Result {
        int code;
        std::string out, err;
    };

    Result cli(std::vector<std::string> args) const
    {
        args.insert(args.begin(), "speclab");
        std::vector<char*> argv;
        for (auto& a : args)
            argv.push_back(a.data());
        std::ostringstream out, err;
        const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        return {code, out.str(), err.str()};
    }
};

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        out.push_back(line);
    return out;
}

std::vector<std::string> cells(const std::string& line)
{
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string c; std::getline(in, c, ',');)
        out.push_back(c);
    return out;
}

std::string key_of(const std::string& text)
{
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "<accepted>";
}

const char* tg_config = "# Taylor-Green smoke run\n"
                        "[grid]\n"
                        "grid_n = 8\n"
                        "[run]\n"
                        "scenario = taylor-green\n"
                        "t_end = 0.02\n"
                        "sample_stride = 5\n";

} // namespace

TEST_CASE("ParseConfig.MinimalFileGetsDefaults")
{
    const Config c = parse_config("grid_n = 16\nscenario = taylor-green\n");
    CHECK_EQ(c.grid_n, 16);
    CHECK_EQ(c.dt, 1e-3);
    CHECK_EQ(c.physics.mu, 1.0);
    CHECK_EQ(c.physics.nu, 100.0);
    CHECK_EQ(c.est.c_generic, 1.0);
    CHECK_EQ(c.est.nu, 100.0);
    CHECK_EQ(c.sample_stride, 10);
    CHECK(c.step.dealias);
    CHECK_EQ(c.selected_checks().size(), audit_check_ids().size());
}

TEST_CASE("ParseConfig.SectionsListsAndOverrides")
{
    const Config c = parse_config("[grid]\ngrid_n = 24\n[physics]\nmu = 0.5\nnu = 1e4\n"
                                  "[scenario]\nscenario = random-band\nk_max = 2\nseed = 99\n"
                                  "[audit]\nchecks = energy, decay\n[c]\nenergy = 3\n");
    CHECK_EQ(c.grid_n, 24);
    CHECK_EQ(c.physics.mu, 0.5);
    CHECK_EQ(c.est.mu, 0.5);
    CHECK_EQ(c.scenario.kind, ScenarioKind::random_band);
    CHECK_EQ(c.scenario.k_max, 2);
    CHECK_EQ(c.seed, 99u);
    CHECK_EQ(c.checks, (std::vector<std::string>{"energy", "decay"}));
    CHECK_EQ(c.est.c("energy"), 3.0);
    CHECK_EQ(c.est.c("chain"), 1.0);
}

TEST_CASE("ParseConfig.ErrorsNameTheKey")
{
    const std::string base = "grid_n = 16\nscenario = taylor-green\n";
    CHECK_EQ(key_of(base + "nu = -1\n"), "nu");
    CHECK_EQ(key_of(base + "p = 6\n"), "p");
    CHECK_EQ(key_of(base + "p = 3\n"), "p");
    CHECK_EQ(key_of(base + "dt = 0\n"), "dt");
    CHECK_EQ(key_of(base + "sample_stride = 0\n"), "sample_stride");
    CHECK_EQ(key_of(base + "bogus = 1\n"), "bogus");
    CHECK_EQ(key_of(base + "dt = fast\n"), "dt");
    CHECK_EQ(key_of(base + "checks = energy, nope\n"), "checks");
    CHECK_EQ(key_of(base + "dealias = maybe\n"), "dealias");
    CHECK_EQ(key_of("scenario = taylor-green\n"), "grid_n");
    CHECK_EQ(key_of("grid_n = 16\n"), "scenario");
    CHECK_EQ(key_of("grid_n = 15\nscenario = taylor-green\n"), "grid_n");
    CHECK_EQ(key_of("grid_n = 16\nscenario = vortex\n"), "scenario");
    CHECK_EQ(key_of(base), "<accepted>");
    CHECK_THROWS_AS(load_config("/nonexistent/speclab.cfg"), ConfigError);
}

TEST_CASE("Format.SeventeenDigitsRoundTrip")
{
    for (double x : {0.1, 1.0 / 3.0, 2.0 / 7.0 * 1e-200, 6.02214076e23, 0.0}) {
        const std::string s = format_number(x);
        CHECK_MESSAGE((std::stod(s)) == (x), s);
    }
    CHECK_EQ(format_number(0.0), "0");
}

TEST_CASE_FIXTURE(Scratch, "Io.TimeseriesShapeAndZeroTrajectory")
{
    Config cfg = parse_config("grid_n = 8\nscenario = random-band\namplitude = 0\nt_end = 0.01\nsample_stride = 1\n");
    const Trajectory tr = run_coupled(cfg);
    write_timeseries(tr, dir / "z.csv");
    const auto rows = lines(slurp(dir / "z.csv"));
    REQUIRE_EQ(rows.size(), tr.ledger.size() + 1);
    CHECK_EQ(rows.size(), 12u);
    const auto header = cells(rows[0]);
    REQUIRE_EQ(header.size(), timeseries_columns().size() + 1);
    CHECK_EQ(header[0], "t");
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto c = cells(rows[r]);
        REQUIRE_EQ(c.size(), header.size());
        for (std::size_t k = 1; k < c.size(); ++k)
            CHECK_MESSAGE((c[k]) == ("0"), header[k] << " row " << r);
    }
    CHECK_THROWS_AS(write_timeseries(tr, dir / "missing" / "deeper" / "z.csv"), IoError);
}

TEST_CASE_FIXTURE(Scratch, "Io.FieldFileRoundTripIsBitExact")
{
    const Grid g = Grid::create(8);
    const RealField v = to_real(testing_support::band_limited(g, Rank::vector, 17));
    write_field(v, dir / "v.field");
    CHECK_EQ(fs::file_size(dir / "v.field"), 16u + 8u * 3u * 512u);
    const RealField back = read_field(dir / "v.field");
    CHECK_EQ(back.rank(), Rank::vector);
    CHECK_EQ(back.grid().n(), 8);
    CHECK_EQ(back.values().size(), v.values().size());
    CHECK(std::equal(v.values().begin(), v.values().end(), back.values().begin()));
    CHECK_EQ(fnv1a(back), fnv1a(v));

    const RealField s = RealField::sample_scalar(g, [](double x, double y, double z) { return x - 2.0 * y + z * z; });
    write_field(s, dir / "s.field");
    const RealField sb = read_field(dir / "s.field");
    CHECK_EQ(sb.rank(), Rank::scalar);
    CHECK(std::equal(s.values().begin(), s.values().end(), sb.values().begin()));
}

TEST_CASE_FIXTURE(Scratch, "Io.FieldFileErrors")
{
    const Grid g = Grid::create(8);
    write_field(RealField(g, Rank::scalar), dir / "ok.field");
    const std::string ok = slurp(dir / "ok.field");

    CHECK_THROWS_AS(read_field(dir / "absent.field"), IoError);
    CHECK_THROWS_AS(read_field(write("magic.field", "NOTFIELD" + ok.substr(8))), IoError);
    CHECK_THROWS_AS(read_field(write("short.field", ok.substr(0, ok.size() - 3))), IoError);
    CHECK_THROWS_AS(read_field(write("long.field", ok + "x")), IoError);
    std::string bad_rank = ok;
    bad_rank[12] = 2;
    CHECK_THROWS_AS(read_field(write("rank.field", bad_rank)), IoError);
    std::string bad_n = ok;
    bad_n[8] = 7;
    CHECK_THROWS_AS(read_field(write("n.field", bad_n)), ConfigError);
}

TEST_CASE_FIXTURE(Scratch, "Io.RunWritesManifestAndSeries")
{
    const auto cfg = write("tg.cfg", tg_config);
    const auto r = cli({"run", "--config", cfg.string(), "--out", (dir / "o").string()});
    REQUIRE_MESSAGE((r.code) == (exit_ok), r.err);
    REQUIRE(fs::exists(dir / "o" / "timeseries.csv"));
    const auto m = nlohmann::json::parse(slurp(dir / "o" / "manifest.json"));
    CHECK_EQ(m["outcome"], "completed");
    CHECK_EQ(m["version"], version);
    CHECK_EQ(m["steps"], 20);
    CHECK_EQ(m["samples"], 5);
    CHECK_EQ(m["config"]["grid_n"], 8);
    CHECK_EQ(m["config"]["scenario"], "taylor-green");
    CHECK_EQ(m["initial_field_hashes"]["V0"], m["initial_field_hashes"]["v0"]);
    CHECK_EQ(m["initial_field_hashes"]["V0"].get<std::string>().size(), 16u);
    CHECK_EQ(lines(slurp(dir / "o" / "timeseries.csv")).size(), 6u);
}

TEST_CASE_FIXTURE(Scratch, "Io.IdenticalRunsGiveIdenticalBytes")
{
    const auto cfg = write("rb.cfg", "grid_n = 8\nscenario = paper-scaling\nnu = 1e4\nseed = 42\nt_end = 0.02\nsample_stride = 2\n");
    REQUIRE_EQ(cli({"run", "--config", cfg.string(), "--out", (dir / "a").string()}).code, exit_ok);
    REQUIRE_EQ(cli({"run", "--config", cfg.string(), "--out", (dir / "b").string()}).code, exit_ok);
    const std::string a = slurp(dir / "a" / "timeseries.csv");
    CHECK_FALSE(a.empty());
    CHECK_EQ(a, slurp(dir / "b" / "timeseries.csv"));
    REQUIRE_EQ(cli({"run", "--config", cfg.string(), "--seed", "43", "--out", (dir / "c").string()}).code, exit_ok);
    CHECK_NE(a, slurp(dir / "c" / "timeseries.csv"));
}

TEST_CASE_FIXTURE(Scratch, "Io.BlowUpKeepsPartialOutput")
{
    const auto cfg = write("boom.cfg", "grid_n = 8\nscenario = random-band\namplitude = 1e8\nmu = 0.001\nnu = 1\n"
                                       "dt = 0.1\nt_end = 20\nsample_stride = 1\n");
    const auto r = cli({"run", "--config", cfg.string(), "--out", (dir / "o").string()});
    CHECK_EQ(r.code, exit_blow_up);
    const auto m = nlohmann::json::parse(slurp(dir / "o" / "manifest.json"));
    CHECK_NE(m["outcome"], "completed");
    CHECK_NE(m["outcome"].get<std::string>().find("non-finite"), std::string::npos);
    CHECK_LT(m["steps"].get<int>(), 200);
    CHECK_EQ(lines(slurp(dir / "o" / "timeseries.csv")).size(), m["samples"].get<std::size_t>() + 1);
}

TEST_CASE_FIXTURE(Scratch, "Io.ExitCodesForUsageAndConfigErrors")
{
    auto r = cli({"simulate"});
    CHECK_EQ(r.code, exit_config);
    CHECK_NE(r.err.find("Usage"), std::string::npos);
    CHECK_EQ(cli({}).code, exit_config);
    CHECK_EQ(cli({"run"}).code, exit_config);
    CHECK_EQ(cli({"run", "--config", (dir / "none.cfg").string()}).code, exit_config);
    const auto bad = write("bad.cfg", "grid_n = 16\nscenario = taylor-green\nnu = -1\n");
    r = cli({"run", "--config", bad.string()});
    CHECK_EQ(r.code, exit_config);
    CHECK_NE(r.err.find("nu"), std::string::npos);
    const auto tg = write("tg.cfg", tg_config);
    CHECK_EQ(cli({"audit", "--config", tg.string(), "--check", "nope"}).code, exit_config);
    CHECK_EQ(cli({"run", "--help"}).code, exit_ok);
}

TEST_CASE_FIXTURE(Scratch, "Io.AuditWritesReportAndFlagsViolations")
{
    const auto tg = write("tg.cfg", tg_config);
    auto r = cli({"audit", "--config", tg.string(), "--out", (dir / "tg").string(), "--check", "energy,decay",
                  "--check", "phi-heat"});
    REQUIRE_MESSAGE((r.code) == (exit_ok), r.out << r.err);
    const std::string report = slurp(dir / "tg" / "audit.txt");
    CHECK_NE(report.find("[check energy-identity]"), std::string::npos);
    CHECK_NE(report.find("[check phi-heat]"), std::string::npos);
    CHECK_EQ(report.find("[check stability]"), std::string::npos);
    CHECK_EQ(report.find("violated"), std::string::npos);

    // The initial gradient transient decays on a time scale far below the sample
    // spacing, so the sampled bulk dissipation overshoots the energy budget.
    const auto stiff = write("stiff.cfg", "grid_n = 8\nscenario = random-band\namplitude = 20\nnu = 1e6\n"
                                          "t_end = 0.02\nsample_stride = 5\nchecks = energy\n");
    r = cli({"audit", "--config", stiff.string(), "--out", (dir / "stiff").string()});
    CHECK_EQ(r.code, exit_violation);
    CHECK_NE(r.out.find("energy-inequality          violated"), std::string::npos);
}

TEST_CASE_FIXTURE(Scratch, "Io.FixedPointSweep")
{
    auto r = cli({"fixed-point", "--sweep", "nu=1e4,1e5,1e6", "--out", dir.string()});
    REQUIRE_MESSAGE((r.code) == (exit_ok), r.err);
    auto rows = lines(slurp(dir / "fixed_point.csv"));
    REQUIRE_EQ(rows.size(), 4u);
    CHECK_EQ(rows[0], "nu,A,iterations,contraction_modulus,converged,relaxed,regime_ok,violation,lower_bound");
    const double frozen[] = {0.0390133794926574, 0.0377571106206342, 0.0368202298920328};
    for (int i = 0; i < 3; ++i) {
        const auto c = cells(rows[i + 1]);
        CHECK_LE(testing_support::rel(std::stod(c[1]), frozen[i]), 1e-9);
        CHECK_EQ(c[4], "1");
        CHECK_LT(std::stod(c[3]), 1.0);
    }

    r = cli({"fixed-point", "--nu", "1", "--out", dir.string()});
    REQUIRE_MESSAGE((r.code) == (exit_ok), r.err);
    rows = lines(slurp(dir / "fixed_point.csv"));
    REQUIRE_EQ(rows.size(), 2u);
    const auto c = cells(rows[1]);
    CHECK_EQ(c[0], "1");
    CHECK_EQ(c[4], "0");
    CHECK((c[6] == "0" || !(std::stod(c[3]) < 1.0)));

    r = cli({"fixed-point", "--sweep", "c2=1,2", "--sweep", "nu=1e5,1e6", "--out", dir.string()});
    REQUIRE_MESSAGE((r.code) == (exit_ok), r.err);
    rows = lines(slurp(dir / "fixed_point.csv"));
    REQUIRE_EQ(rows.size(), 5u);
    CHECK_EQ(cells(rows[0])[0], "c2");
    CHECK_EQ(cells(rows[1])[0], "1");
    CHECK_EQ(cells(rows[2])[0], "1");
    CHECK_EQ(cells(rows[3])[0], "2");
    CHECK_EQ(cells(rows[1])[1], "100000");
    CHECK_EQ(cells(rows[2])[1], "1000000");

    CHECK_EQ(cli({"fixed-point", "--sweep", "nu"}).code, exit_config);
    CHECK_EQ(cli({"fixed-point", "--sweep", "zeta=1"}).code, exit_config);
    CHECK_EQ(cli({"fixed-point", "--sweep", "p=7"}).code, exit_config);
}

TEST_CASE_FIXTURE(Scratch, "Io.DecomposeWritesPotentials")
{
    const Grid g = Grid::create(16);
    const SpectralField v = testing_support::band_limited(g, Rank::vector, 23);
    write_field(to_real(v), dir / "v.field");
    const auto r = cli({"decompose", "--input", (dir / "v.field").string(), "--out", (dir / "d").string()});
    REQUIRE_MESSAGE((r.code) == (exit_ok), r.err);
    const auto rep = nlohmann::json::parse(slurp(dir / "d" / "decompose.json"));
    CHECK_LE(rep["orthogonality"].get<double>(), 1e-12);
    CHECK_LE(rep["recompose_error"].get<double>(), 1e-12);
    CHECK_LE(testing_support::rel(rep["grad_phi_l2sq"].get<double>() + rep["rot_psi_l2sq"].get<double>(),
                                   rep["v_l2sq"].get<double>()), 1e-10);

    const RealField phi = read_field(dir / "d" / "phi.field");
    const RealField psi = read_field(dir / "d" / "psi.field");
    CHECK_EQ(phi.rank(), Rank::scalar);
    CHECK_EQ(psi.rank(), Rank::vector);
    const SpectralField back = gradient(to_spectral(phi)) + curl(to_spectral(psi));
    CHECK_LE(testing_support::rel_diff(back, v), 1e-12);

    write_field(to_real(SpectralField(g, Rank::scalar)), dir / "s.field");
    CHECK_EQ(cli({"decompose", "--input", (dir / "s.field").string()}).code, exit_config);
    CHECK_EQ(cli({"decompose", "--input", (dir / "absent.field").string()}).code, exit_config);
}
