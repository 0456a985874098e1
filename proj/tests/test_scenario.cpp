#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pfl/cli.hpp"
#include "pfl/error.hpp"
#include "pfl/scenario.hpp"

using namespace pfl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path bundled = fs::path(PFL_SCENARIO_DIR) / "paper_nominal.json";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

json bundled_json() { return json::parse(slurp(bundled)); }

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("pfl_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_scenario(const fs::path& dir, const json& j) {
    const auto p = dir / "scenario.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

struct RunResult {
    int code;
    std::string out;
    std::string err;
};

RunResult run(std::vector<std::string> args) {
    args.insert(args.begin(), "pflsim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

ErrorKind kind_of(const std::string& text) {
    try {
        scenario::parse(text);
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::io;
}

std::string message_of(const std::string& text) {
    try {
        scenario::parse(text);
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

// Ideal pupil keeps the PSF cheap for tests that only exercise plumbing.
json fast_scenario() {
    auto j = bundled_json();
    j["imaging"]["pupil"] = "ideal";
    j["ccd"]["width_px"] = 128;
    j["ccd"]["height_px"] = 96;
    return j;
}

}  // namespace

TEST_CASE("bundled scenario carries the nominal values") {
    const auto s = scenario::load(bundled);
    CHECK(s.schema_version == scenario::schema_version);
    CHECK(s.lens.focal_length == 3e-3);
    CHECK(s.lens.aperture_diameter == 5e-3);
    CHECK(s.lens.design_wavelength == 369.5e-9);
    CHECK(s.imaging.magnification == 615.0);
    CHECK(s.trap.axial_frequency == 882e3);
    CHECK(s.trap.ion_mass_u == 174.0);
    CHECK(s.ccd.pixel_pitch == 13e-6);
    CHECK(s.ccd.width == 512);
    CHECK(s.ccd.height == 512);
    REQUIRE(s.scene.motion_rms);
    CHECK((*s.scene.motion_rms)[1] == 15e-9);
    CHECK(scenario::load(bundled).hash == s.hash);

    const auto sys = scenario::make_imaging_system(s);
    // solid angle x first-order efficiency x transmission
    CHECK(sys.collection_fraction == doctest::Approx(0.11588936020131208 * 4.0 / (M_PI * M_PI)));
}

TEST_CASE("schema validation names the field") {
    auto j = bundled_json();
    j["lens"].erase("focal_length_m");
    CHECK(kind_of(j.dump()) == ErrorKind::schema);
    CHECK(message_of(j.dump()).find("lens.focal_length_m") != std::string::npos);

    j = bundled_json();
    j["ccd"]["pixel_size"] = 1.0;
    CHECK(message_of(j.dump()).find("ccd.pixel_size: unknown key") != std::string::npos);

    j = bundled_json();
    j["extra"] = 1;
    CHECK(kind_of(j.dump()) == ErrorKind::schema);

    j = bundled_json();
    j["trap"]["axial_frequency_hz"] = -1.0;
    CHECK(message_of(j.dump()).find("trap.axial_frequency_hz") != std::string::npos);

    j = bundled_json();
    j["lens"]["parity"] = "odd";
    CHECK(kind_of(j.dump()) == ErrorKind::schema);

    j = bundled_json();
    j["scene"]["positions_m"] = {0.0};
    j["scene"]["n_ions"] = 2;
    CHECK(kind_of(j.dump()) == ErrorKind::schema);

    j = bundled_json();
    j["seed"] = -4;
    CHECK(kind_of(j.dump()) == ErrorKind::schema);

    CHECK(kind_of("{ not json") == ErrorKind::parse);
    CHECK(kind_of("[]") == ErrorKind::schema);
}

TEST_CASE("schema major version is checked") {
    auto j = bundled_json();
    j["schema_version"] = "1.7";
    CHECK_NOTHROW(scenario::parse(j.dump()));
    j["schema_version"] = "2.0";
    CHECK(kind_of(j.dump()) == ErrorKind::schema);
    j.erase("schema_version");
    CHECK(kind_of(j.dump()) == ErrorKind::schema);
}

TEST_CASE("temperature defaults to the Doppler limit") {
    const auto s = scenario::load(bundled);
    CHECK_FALSE(s.trap.temperature);
    CHECK(scenario::make_trap(s).temperature == doctest::Approx(4.703258209017120e-04).epsilon(1e-12));
}

TEST_CASE("cli: version and usage") {
    const auto v = run({"--version"});
    CHECK(v.code == 0);
    CHECK(v.out.find(std::string("schema ") + scenario::schema_version) != std::string::npos);

    const auto none = run({});
    CHECK(none.code == cli::validation_error);
    CHECK(json::parse(none.err)["error"]["exit_code"] == 2);

    const auto missing = run({"design", "--out", "/tmp/x"});
    CHECK(missing.code == cli::validation_error);
}

TEST_CASE("cli: design report and determinism") {
    const auto dir = scratch("design");
    const auto a = run({"design", "--scenario", bundled.string(), "--out", (dir / "a").string()});
    const auto b = run({"design", "--scenario", bundled.string(), "--out", (dir / "b").string()});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    for (const char* f : {"mask.csv", "lens.json", "geometry.json"}) {
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    }
    const auto g = json::parse(slurp(dir / "a" / "geometry.json"));
    CHECK(g["numerical_aperture"].get<double>() == doctest::Approx(0.640).epsilon(0.001 / 0.64));
    CHECK(g["solid_angle_fraction"].get<double>() == doctest::Approx(0.116).epsilon(0.005 / 0.116));
    CHECK(g["etch_depth_m"].get<double>() == doctest::Approx(390e-9).epsilon(2.0 / 390.0));
    // No temp files left behind.
    for (const auto& e : fs::directory_iterator(dir / "a")) {
        CHECK(e.path().filename().string().front() != '.');
    }
}

TEST_CASE("cli: validation errors exit 2 with JSON on stderr") {
    const auto dir = scratch("invalid");
    auto j = bundled_json();
    j["lens"].erase("focal_length_m");
    const auto r = run({"design", "--scenario", write_scenario(dir, j).string(), "--out", (dir / "o").string()});
    CHECK(r.code == 2);
    CHECK(r.out.empty());
    const auto e = json::parse(r.err);
    CHECK(e["error"]["kind"] == "schema");
    CHECK(e["error"]["message"].get<std::string>().find("lens.focal_length_m") != std::string::npos);

    j = bundled_json();
    j["lens"]["substrate_index"] = 1.0;
    const auto flat = run({"design", "--scenario", write_scenario(dir, j).string(), "--out", (dir / "o").string()});
    CHECK(flat.code == 2);
    CHECK(json::parse(flat.err)["error"]["kind"] == "no_phase_contrast");
}

TEST_CASE("cli: simulate is deterministic and thread-count independent") {
    const auto dir = scratch("simulate");
    const auto sc = write_scenario(dir, fast_scenario()).string();
    const auto a = run({"simulate", "--scenario", sc, "--out", (dir / "a").string()});
    const auto b = run({"simulate", "--scenario", sc, "--out", (dir / "b").string(), "--threads", "3"});
    const auto c = run({"simulate", "--scenario", sc, "--out", (dir / "c").string(), "--seed", "99"});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    REQUIRE(c.code == 0);
    for (const char* f : {"frame.png", "frame.csv", "frame.json"}) {
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    }
    CHECK(slurp(dir / "a" / "frame.csv") != slurp(dir / "c" / "frame.csv"));
    const auto meta = json::parse(slurp(dir / "a" / "frame.json"));
    CHECK(meta["seed"] == 20100101);
    CHECK(meta["ions"].size() == 1);
    // One spot at the frame centre.
    CHECK(meta["ions"][0]["pixel"][0].get<double>() == doctest::Approx(63.5));
    CHECK(meta["ions"][0]["pixel"][1].get<double>() == doctest::Approx(47.5));
}

TEST_CASE("cli: fit and calibrate round trip") {
    const auto dir = scratch("roundtrip");
    auto j = fast_scenario();
    j["ccd"]["width_px"] = 320;
    j["ccd"]["height_px"] = 64;
    const auto sc = write_scenario(dir, j).string();
    REQUIRE(run({"simulate", "--scenario", sc, "--out", (dir / "one").string()}).code == 0);
    REQUIRE(run({"simulate", "--scenario", sc, "--out", (dir / "two").string(), "--ions", "2"}).code == 0);

    const auto fit = run({"fit", "--scenario", sc, "--out", (dir / "fit").string(), "--frame",
                          (dir / "one" / "frame.csv").string()});
    REQUIRE(fit.code == 0);
    const auto report = json::parse(slurp(dir / "fit" / "fit.json"));
    CHECK(report["converged"] == true);
    CHECK(report["fwhm_object_nm"]["x"].get<double>() > 150.0);
    CHECK(report["fwhm_object_nm"]["x"].get<double>() < 440.0);
    CHECK(report["fwhm_object_nm"]["x_uncertainty"].get<double>() > 0.0);

    const auto cal = run({"calibrate", "--scenario", sc, "--out", (dir / "cal").string(), "--frame",
                          (dir / "two" / "frame.csv").string()});
    REQUIRE(cal.code == 0);
    const auto c = json::parse(slurp(dir / "cal" / "calibration.json"));
    CHECK(std::abs(c["magnification"].get<double>() / 615.0 - 1.0) < 0.01);

    // A single spot cannot calibrate.
    const auto wrong = run({"calibrate", "--scenario", sc, "--out", (dir / "cal1").string(), "--frame",
                            (dir / "one" / "frame.csv").string()});
    CHECK(wrong.code == 2);
    CHECK(json::parse(wrong.err)["error"]["kind"] == "spot_count");

    // A starved fit reports non-convergence with exit code 3.
    j["analysis"]["max_iterations"] = 1;
    const auto starved = write_scenario(dir, j).string();
    const auto nc = run({"fit", "--scenario", starved, "--out", (dir / "nc").string(), "--frame",
                         (dir / "one" / "frame.csv").string()});
    CHECK(nc.code == 3);
    CHECK(json::parse(nc.err)["error"]["kind"] == "convergence");
}

TEST_CASE("cli: corrupt frame CSV reports the location") {
    const auto dir = scratch("corrupt");
    const auto csv = dir / "bad.csv";
    std::ofstream(csv) << "1,2,3\n4,5,oops\n";
    const auto r = run({"fit", "--scenario", bundled.string(), "--out", (dir / "o").string(), "--frame", csv.string()});
    CHECK(r.code == 2);
    const auto e = json::parse(r.err);
    CHECK(e["error"]["kind"] == "parse");
    const auto msg = e["error"]["message"].get<std::string>();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("column 3") != std::string::npos);
}
