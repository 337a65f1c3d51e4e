#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "oce/core/raster.hpp"
#include "oce/core/raster_io.hpp"

using namespace oce;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "oce");
    std::vector<const char *> argv;
    for (const auto &a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string &name) {
    const fs::path p = fs::temp_directory_path() / ("oce_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// metric,frame_pair -> value
std::map<std::string, double> read_csv(const std::string &text) {
    std::map<std::string, double> rows;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    CHECK(line == "metric,value,frame_pair");
    while (std::getline(in, line)) {
        const auto a = line.find(','), b = line.rfind(',');
        REQUIRE(a != std::string::npos);
        REQUIRE(b > a);
        rows[line.substr(0, a) + "@" + line.substr(b + 1)] = std::stod(line.substr(a + 1, b - a - 1));
    }
    return rows;
}

} // namespace

TEST_CASE("help and usage errors") {
    const Result help = run({"pipeline", "--help"});
    CHECK(help.code == cli::kExitOk);
    CHECK(help.out.find("--input") != std::string::npos);

    CHECK(run({}).code == cli::kExitUsage);
    const Result bad = run({"flow", "--bogus"});
    CHECK(bad.code == cli::kExitUsage);
    CHECK(bad.err.find("--ref") != std::string::npos);
    CHECK(run({"frobnicate"}).code == cli::kExitUsage);
    CHECK(run({"metrics", "--est", "x.ocer", "--kind", "image-rmse"}).code == cli::kExitUsage);
}

TEST_CASE("missing input is a data error") {
    const fs::path dir = scratch("missing");
    const Result r = run({"denoise", "-i", (dir / "nope.ocer").string(), "-o", (dir / "out.ocer").string()});
    CHECK(r.code == cli::kExitData);
    CHECK(r.err.find("oce:") != std::string::npos);
}

TEST_CASE("bad config is a usage error") {
    const fs::path dir = scratch("badconf");
    CHECK(run({"simulate", "--out", dir.string(), "--set", "scene.rows=banana"}).code == cli::kExitUsage);
    CHECK(run({"simulate", "--out", dir.string(), "--set", "scene.colour=3"}).code == cli::kExitUsage);
    CHECK(run({"simulate", "--out", dir.string(), "--set", "noequals"}).code == cli::kExitUsage);
    std::ofstream(dir / "x.conf") << "motion.kind = wobble\n";
    CHECK(run({"simulate", "--out", dir.string(), "--config", (dir / "x.conf").string()}).code == cli::kExitUsage);
}

TEST_CASE("metrics of an image against itself") {
    const fs::path dir = scratch("metrics");
    Image img(32, 40);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = 0.01 * static_cast<double>(i % 97);
    const std::string path = (dir / "a.ocer").string();
    write_raster(to_raster(img), path);

    const Result r = run({"metrics", "--est", path, "--truth", path, "--kind", "image-rmse"});
    REQUIRE(r.code == cli::kExitOk);
    const auto rows = read_csv(r.out);
    REQUIRE(rows.size() == 1);
    CHECK(rows.begin()->second == 0.0);

    const Result n = run({"metrics", "--est", path, "--truth", path, "--kind", "image-ncc", "-o", (dir / "m.csv").string()});
    REQUIRE(n.code == cli::kExitOk);
    std::ifstream f(dir / "m.csv");
    std::stringstream ss;
    ss << f.rdbuf();
    const auto nrows = read_csv(ss.str());
    REQUIRE(nrows.size() == 1);
    CHECK(nrows.begin()->second == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("simulate then pipeline end to end") {
    const fs::path dir = scratch("e2e");
    const std::vector<std::string> small = {
        "--set", "scene.rows=128", "scene.cols=128", "scene.scatterers=6000", "scene.margin=24",
        "motion.frames=3", "motion.step_px=3", "noise.sigma=0.1",
        "flow.windows=32,16", "flow.overlaps=16,8", "flow.margins=8,4"};

    std::vector<std::string> sim = {"--quiet", "--seed", "3", "simulate", "--out", (dir / "sim").string()};
    sim.insert(sim.end(), small.begin(), small.end());
    const Result s = run(sim);
    REQUIRE_MESSAGE(s.code == cli::kExitOk, s.err);
    CHECK(fs::exists(dir / "sim" / "frames.ocer"));
    CHECK(fs::exists(dir / "sim" / "truth" / "pair_1_lateral.ocer"));
    CHECK(fs::exists(dir / "sim" / "simulation.conf"));

    // Same seed, same frames.
    std::vector<std::string> sim2 = sim;
    sim2[5] = (dir / "sim2").string();
    REQUIRE(run(sim2).code == cli::kExitOk);
    {
        const RasterArray a = read_raster(dir / "sim" / "frames.ocer");
        const RasterArray b = read_raster(dir / "sim2" / "frames.ocer");
        CHECK(std::get<std::vector<double>>(a.values) == std::get<std::vector<double>>(b.values));
    }

    std::vector<std::string> pl = {"--quiet", "pipeline", "--input", (dir / "sim" / "frames.ocer").string(),
                                   "--truth", (dir / "sim").string(), "--out", (dir / "run").string()};
    pl.insert(pl.end(), small.begin(), small.end());
    const Result p = run(pl);
    REQUIRE_MESSAGE(p.code == cli::kExitOk, p.err);
    CHECK(p.err.empty());

    std::ifstream f(dir / "run" / "metrics.csv");
    std::stringstream ss;
    ss << f.rdbuf();
    const auto rows = read_csv(ss.str());
    for (const char *axis : {"lateral", "axial"}) {
        const std::string ini = std::string("field_rmse_") + axis + "_initial@all";
        const std::string fin = std::string("field_rmse_") + axis + "_final@all";
        REQUIRE(rows.count(ini) == 1);
        REQUIRE(rows.count(fin) == 1);
        CHECK(rows.at(ini) > 0.0);
        CHECK(rows.at(fin) < 1.0);
    }
    CHECK(fs::exists(dir / "run" / "denoised.ocer"));
    CHECK(fs::exists(dir / "run" / "fields" / "final_1_axial.ocer"));
    CHECK(fs::exists(dir / "run" / "runtimes.csv"));

    // Written fields read back through the metrics subcommand.
    const Result m = run({"metrics", "--est", (dir / "run" / "fields" / "final_0").string(),
                          (dir / "run" / "fields" / "final_1").string(), "--truth",
                          (dir / "sim" / "truth" / "pair_0").string(), (dir / "sim" / "truth" / "pair_1").string(),
                          "--kind", "field-rmse"});
    REQUIRE_MESSAGE(m.code == cli::kExitOk, m.err);
    CHECK(read_csv(m.out).count("field_rmse_lateral@all") == 1);
}
