#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "../support/oracles.hpp"
#include "tpp/cli.hpp"
#include "tpp/error.hpp"
#include "tpp/thermal_sim.hpp"
#include "tpp/trace.hpp"

namespace fs = std::filesystem;
using namespace tpp;
using tpp::io::Json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;

    [[nodiscard]] Json error() const { return Json::parse(err); }
    [[nodiscard]] Json report() const { return Json::parse(out); }
};

Result tpp_run(std::vector<std::string> args) {
    args.insert(args.begin(), "tpp");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

/// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("tpp_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

void write_trace(const fs::path& p, QuantityKind kind, const std::string& unit, double dt, std::vector<double> v) {
    write_trace_csv_file(p.string(), Trace(kind, unit, dt, std::move(v)));
}

}  // namespace

TEST_CASE("usage errors") {
    auto r = tpp_run({});
    CHECK(r.code == 2);
    CHECK(r.error().at("error") == "usage");
    CHECK(tpp_run({"bogus"}).code == 2);
    CHECK(tpp_run({"simulate", "--power", "1"}).code == 2);  // --tp missing
    r = tpp_run({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("simulate") != std::string::npos);
}

TEST_CASE("duration parsing") {
    CHECK(cli::parse_duration("75ms").value() == doctest::Approx(0.075));
    CHECK(cli::parse_duration("0.5s").value() == 0.5);
    CHECK(cli::parse_duration("500us").value() == doctest::Approx(5e-4));
    CHECK_THROWS_AS(cli::parse_duration("75"), ValidationError);
    CHECK_THROWS_AS(cli::parse_duration("ms"), ValidationError);
    CHECK_THROWS_AS(cli::parse_duration("-1ms"), ValidationError);
    CHECK(cli::parse_window("75ms:0.6s").end_s == doctest::Approx(0.6));
    CHECK_THROWS_AS(cli::parse_window("1s:0.5s"), ValidationError);
}

TEST_CASE("simulate a safe pulse") {
    const auto dir = scratch("simulate_safe");
    const auto r = tpp_run({"simulate", "--rho", "0.42", "--tp", "19ms", "--geom", "L8D6", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const Json j = r.report();
    const cli::ProjectConfig cfg;
    const auto g = cfg.geometry("L8D6");
    const double expected = peak_force(cfg.model_for(g), Watts(0.42 * 17.0), milliseconds(19)).value();
    CHECK(j.at("peak_force_N").get<double>() == expected);
    CHECK(j.at("safety").at("safe") == true);
    CHECK(j.at("unsafe_override") == false);
    for (const char* f : {"simulate_force.csv", "simulate_force.svg", "simulate_wire_temperature.csv",
                          "simulate_air_temperature.csv", "simulate_pressure.csv", "simulate_displacement.csv",
                          "simulate_summary.json"}) {
        CHECK(fs::exists(dir / f));
    }
    const Trace force = read_trace_csv_file((dir / "simulate_force.csv").string());
    CHECK(force.size() == 401);
    CHECK(*std::max_element(force.samples().begin(), force.samples().end()) == expected);
    CHECK(Json::parse(slurp(dir / "simulate_summary.json")) == j);
}

TEST_CASE("the characterization drive is outside the envelope") {
    const auto dir = scratch("simulate_fig");
    auto r = tpp_run({"simulate", "--power", "4.8", "--tp", "75ms", "--geom", "L8D6", "--out", dir.string()});
    CHECK(r.code == 2);
    const Json e = r.error();
    CHECK(e.at("error") == "safety");
    CHECK(e.at("details").at("safe") == false);
    CHECK_FALSE(fs::exists(dir / "simulate_summary.json"));

    r = tpp_run({"simulate", "--power", "4.8", "--tp", "75ms", "--geom", "L8D6", "--allow-unsafe", "--out",
                 dir.string()});
    REQUIRE(r.code == 0);
    const cli::ProjectConfig cfg;
    const double expected = peak_force(cfg.model_for(cfg.geometry("L8D6")), Watts(4.8), milliseconds(75)).value();
    CHECK(r.report().at("peak_force_N").get<double>() == expected);
    CHECK(r.report().at("unsafe_override") == true);
}

TEST_CASE("zero power gives a flat trace") {
    const auto dir = scratch("simulate_zero");
    const auto r = tpp_run({"simulate", "--power", "0", "--tp", "10ms", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const Trace force = read_trace_csv_file((dir / "simulate_force.csv").string());
    for (double v : force.samples()) CHECK(v == 0.0);
    CHECK(r.report().at("peak_force_N") == 0.0);
}

TEST_CASE("unsafe rho reports the pulse limits") {
    const auto dir = scratch("simulate_rho");
    const auto r = tpp_run({"simulate", "--rho", "0.5", "--tp", "30ms", "--out", dir.string()});
    CHECK(r.code == 2);
    const Json e = r.error();
    const std::string msg = e.at("message");
    CHECK(msg.find("23.72 ms") != std::string::npos);
    CHECK(e.at("details").at("failure_t_p_ms").get<double>() == doctest::Approx(23.7).epsilon(0.01));
    CHECK(e.at("details").at("max_safe_t_p_ms").get<double>() == doctest::Approx(20.665).epsilon(1e-3));
}

TEST_CASE("margin overrides need acknowledgment") {
    const auto dir = scratch("margin");
    auto r = tpp_run({"--margin", "0", "simulate", "--rho", "0.5", "--tp", "23ms", "--out", dir.string()});
    CHECK(r.code == 2);
    CHECK(r.error().at("message").get<std::string>().find("--ack-margin") != std::string::npos);
    r = tpp_run({"--margin", "0", "--ack-margin", "simulate", "--rho", "0.5", "--tp", "23ms", "--out", dir.string()});
    CHECK(r.code == 0);
    r = tpp_run({"--margin", "1.5", "--ack-margin", "simulate", "--rho", "0.1", "--tp", "23ms", "--out", dir.string()});
    CHECK(r.code == 2);
}

TEST_CASE("pulse trains") {
    const auto dir = scratch("train");
    const auto r = tpp_run({"simulate", "--power", "2.8", "--tp", "10ms", "--rate", "20", "--count", "10", "--dt",
                            "0.5ms", "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.report().at("pulses") == 10);
    CHECK(tpp_run({"simulate", "--power", "2.8", "--tp", "10ms", "--count", "3", "--out", dir.string()}).code == 2);
    CHECK(tpp_run({"simulate", "--power", "2.8", "--tp", "30ms", "--rate", "50", "--count", "3", "--out",
                   dir.string()})
              .code == 2);
}

TEST_CASE("envelope sweep") {
    const auto dir = scratch("sweep");
    const auto r = tpp_run({"envelope", "sweep", "--tp-min", "1ms", "--tp-max", "100ms", "--points", "40", "--out",
                            dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.report().at("asymptote_W_per_mm").get<double>() == doctest::Approx(0.2121).epsilon(5e-4));
    std::istringstream csv(slurp(dir / "envelope_boundary.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "t_p_ms,boundary_W_per_mm,allowed_W_per_mm");
    std::vector<double> b;
    std::string last;
    while (std::getline(csv, line)) {
        last = line;
        if (line.rfind("inf,", 0) == 0) break;
        const auto c1 = line.find(',');
        b.push_back(std::stod(line.substr(c1 + 1, line.find(',', c1 + 1) - c1 - 1)));
    }
    CHECK(b.size() == 40);
    for (std::size_t i = 1; i < b.size(); ++i) CHECK(b[i] < b[i - 1]);
    CHECK(last.rfind("inf,0.2120", 0) == 0);
    CHECK(fs::exists(dir / "envelope_boundary.svg"));
}

TEST_CASE("envelope fit from a failure-point file") {
    const auto dir = scratch("fit");
    std::ostringstream pts;
    pts << "rho_W_per_mm,t_p_ms,cavity_length_mm\n";
    for (double tp : {5.0, 10.0, 20.0, 40.0, 80.0}) {
        pts << format_double(test::boundary_W_per_mm(6601, 6.51, 1400, tp * 1e-3)) << ',' << tp << ",8\n";
    }
    write(dir / "points.csv", pts.str());
    const auto r = tpp_run({"envelope", "fit", "--points", (dir / "points.csv").string(), "--out", dir.string()});
    REQUIRE(r.code == 0);
    const Json env = r.report().at("envelope");
    CHECK(test::rel_err(env.at("a_mm_K_per_W").get<double>(), 6601) < 1e-3);
    CHECK(test::rel_err(env.at("b_uJ_per_mm_K").get<double>(), 6.51) < 1e-3);

    write(dir / "bad.csv", "rho_W_per_mm,t_p_ms,cavity_length_mm\n0.5,10,\n0.6,10,\n0.7,10,\n");
    const auto bad = tpp_run({"envelope", "fit", "--points", (dir / "bad.csv").string(), "--out", dir.string()});
    CHECK(bad.code == 2);
    CHECK(bad.error().at("error") == "fit");
}

TEST_CASE("envelope check") {
    const auto dir = scratch("check");
    auto r = tpp_run({"envelope", "check", "--rho", "0.42", "--tp", "19ms", "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.report().at("safety").at("safe") == true);
    r = tpp_run({"envelope", "check", "--rho", "0.5", "--tp", "30ms", "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.report().at("safety").at("safe") == false);
}

TEST_CASE("calibrate tau, wire and gains") {
    const auto dir = scratch("calibrate");
    std::vector<double> decay(1001);
    for (std::size_t i = 0; i < decay.size(); ++i) decay[i] = 0.75 * std::exp(-static_cast<double>(i) * 1e-3 / 0.110);
    write_trace(dir / "cool.csv", QuantityKind::force, "N", 1e-3, decay);
    auto r = tpp_run({"calibrate", "tau", "--trace", (dir / "cool.csv").string(), "--window", "0ms:500ms",
                      "--baseline", "0", "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.report().at("cooling").at("tau_cool_ms").get<double>() == doctest::Approx(110.0).epsilon(1e-3));

    write_trace(dir / "flat.csv", QuantityKind::force, "N", 1e-3, std::vector<double>(100, 0.2));
    r = tpp_run({"calibrate", "tau", "--trace", (dir / "flat.csv").string(), "--window", "0ms:90ms", "--out",
                 dir.string()});
    CHECK(r.code == 2);

    write_trace(dir / "shunt.csv", QuantityKind::shunt_voltage, "V", 1e-3, {0.22, 0.2, 0.18});
    write(dir / "table.csv", "temp_C,rel_resistivity\n20,1.0\n1020,1.1\n");
    r = tpp_run({"calibrate", "wire", "--trace", (dir / "shunt.csv").string(), "--supply", "10", "--table",
                 (dir / "table.csv").string(), "--smoothing", "1", "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.report().at("wire").at("R0_ohm").get<double>() == doctest::Approx(7.68));
    CHECK(fs::exists(dir / "wire_temperature.csv"));
    CHECK(tpp_run({"calibrate", "wire", "--trace", (dir / "cool.csv").string(), "--supply", "10", "--out",
                   dir.string()})
              .code == 2);

    r = tpp_run({"calibrate", "gains", "--wire-temp-C", "1090", "--air-temp-C", "97", "--force-N", "0.75",
                 "--displacement-mm", "0.96", "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.report().at("chain_gains").at("air_gain").get<double>() == doctest::Approx(77.0 / 1070.0));
    CHECK(r.report().at("chain_gains").at("compliance_mm_per_N").get<double>() == doctest::Approx(1.28));
}

TEST_CASE("analyze subcommands") {
    const auto dir = scratch("analyze");
    const double dt = 1e-3;
    std::vector<double> sine(3000);
    for (std::size_t i = 0; i < sine.size(); ++i) sine[i] = 0.5 + 0.1 * std::sin(2 * test::kPi * 25 * i * dt);
    write_trace(dir / "sine.csv", QuantityKind::force, "N", dt, sine);

    auto r = tpp_run({"analyze", "decompose", "--trace", (dir / "sine.csv").string(), "--rate", "25", "--out",
                      dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.report().at("F0").get<double>() == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(r.report().at("Fpp").get<double>() == doctest::Approx(0.2).epsilon(0.01));

    r = tpp_run({"analyze", "spectrum", "--trace", (dir / "sine.csv").string(), "--rate", "25", "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.report().at("peak_frequency_Hz").get<double>() == doctest::Approx(25.0).epsilon(0.01));
    CHECK(fs::exists(dir / "spectrum.csv"));

    r = tpp_run({"analyze", "endurance", "--trace", (dir / "sine.csv").string(), "--group", "5", "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.report().at("peaks") == 75);
    CHECK(r.report().at("group_means").size() == 15);

    std::vector<double> temp(51);
    for (std::size_t i = 0; i < temp.size(); ++i) temp[i] = 20.0 + 4.6 * static_cast<double>(i) / 50.0;
    write_trace(dir / "surface.csv", QuantityKind::temperature, "C", 0.1, temp);
    r = tpp_run({"analyze", "surface", "--trace", (dir / "surface.csv").string(), "--window", "0s:5s", "--out",
                 dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.report().at("max_rise_K").get<double>() == doctest::Approx(4.6));

    std::vector<std::string> args{"analyze", "fpp"};
    for (double f : {10.0, 20.0, 50.0}) {
        std::vector<double> v(40 * 100 + 1);  // 40 periods
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double t = static_cast<double>(i) / (100 * f);
            v[i] = (3.0 / f) * std::sin(2 * test::kPi * f * t);
        }
        const auto p = dir / ("fpp" + std::to_string(static_cast<int>(f)) + ".csv");
        write_trace(p, QuantityKind::force, "N", 1.0 / (100 * f), v);
        args.insert(args.end(), {"--trace", p.string(), "--rate", format_double(f)});
    }
    args.insert(args.end(), {"--out", dir.string()});
    r = tpp_run(args);
    INFO(r.err);
    REQUIRE(r.code == 0);
    CHECK(r.report().at("log_log_slope").get<double>() == doctest::Approx(-1.0).epsilon(0.01));
}

TEST_CASE("schedule a pattern") {
    const auto dir = scratch("schedule");
    Json modules = Json::array();
    for (int m = 0; m < 10; ++m) {
        Json ch = Json::array();
        for (int p = 0; p < 4; ++p) ch.push_back({{"channel", 4 * m + p}, {"pin", p}, {"geometry", "L8D6"}, {"wire_resistance_ohm", 4.8}});
        modules.push_back({{"id", m}, {"kind", "quartet"}, {"channels", ch}});
    }
    std::vector<int> all;
    for (int c = 0; c < 40; ++c) all.push_back(c);
    Json doc{{"modules", modules},
             {"commands", {{{"channels", all}, {"rate_Hz", 20}, {"duty", 0.2}, {"duration_s", 0.5}, {"power_W", 2.8}}}}};
    io::write_json_file((dir / "pattern.json").string(), doc);
    auto r = tpp_run({"schedule", "--pattern", (dir / "pattern.json").string(), "--simulate", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const Json j = r.report();
    CHECK(j.at("events") == 800);
    CHECK(j.at("board").at("peak_power_W").get<double>() == doctest::Approx(112.0));
    CHECK(j.at("verification").at("ok") == true);
    CHECK(j.at("ledger").at("7").at("pulses") == 10);
    CHECK(j.at("simulation").size() == 40);
    CHECK(fs::exists(dir / "gate_log.csv"));
    CHECK(fs::exists(dir / "schedule_channel39_force.csv"));

    doc["commands"][0]["power_W"] = 8.5;
    doc["commands"][0]["duty"] = 0.6;
    doc["commands"][0]["rate_Hz"] = 20;
    io::write_json_file((dir / "unsafe.json").string(), doc);
    r = tpp_run({"schedule", "--pattern", (dir / "unsafe.json").string(), "--out", dir.string()});
    CHECK(r.code == 2);
    CHECK(r.error().at("error") == "safety");
    CHECK(tpp_run({"schedule", "--pattern", (dir / "missing.json").string(), "--out", dir.string()}).code == 2);
}

TEST_CASE("intensity subcommands") {
    const auto dir = scratch("intensity");
    auto r = tpp_run({"intensity", "map", "--target", "0.652", "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.report().at("power_W").get<double>() == doctest::Approx(3.0).epsilon(1e-3));
    CHECK(r.report().at("drivable") == true);
    r = tpp_run({"intensity", "map", "--target", "10", "--out", dir.string()});
    CHECK(r.code == 2);
    CHECK(r.error().at("details").at("drivable") == false);
    CHECK(tpp_run({"intensity", "map", "--target", "-0.2", "--out", dir.string()}).code == 2);

    std::ostringstream ratings;
    ratings << "participant,power_W,rating\n";
    const double scales[] = {1.0, 3.0, 0.4};
    for (int p = 0; p < 3; ++p)
        for (double w : {1.2, 2.4, 3.6, 4.8, 6.0})
            ratings << "P" << p << ',' << w << ',' << format_double(scales[p] * (0.2677 * w - 0.151)) << '\n';
    write(dir / "ratings.csv", ratings.str());
    double gm = 0.0;
    for (double w : {1.2, 2.4, 3.6, 4.8, 6.0}) gm += std::log(0.2677 * w - 0.151) / 5.0;
    r = tpp_run({"intensity", "fit", "--ratings", (dir / "ratings.csv").string(), "--modulus",
                 format_double(std::exp(gm)), "--out", dir.string()});
    REQUIRE(r.code == 0);
    const Json model = r.report().at("intensity_model");
    CHECK(model.at("alpha_per_W").get<double>() == doctest::Approx(0.2677).epsilon(1e-9));
    CHECK(model.at("beta").get<double>() == doctest::Approx(-0.151).epsilon(1e-9));

    r = tpp_run({"intensity", "map", "--model", (dir / "intensity_fit.json").string(), "--power", "3", "--out",
                 dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.report().at("intensity").get<double>() == doctest::Approx(0.2677 * 3 - 0.151).epsilon(1e-9));

    write(dir / "loc.csv", "participant,presented,reported\nA,1,1\nA,2,2\nA,3,4\nA,4,4\n");
    r = tpp_run({"intensity", "localization", "--log", (dir / "loc.csv").string(), "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.report().at("accuracy") == 0.75);
    CHECK(r.report().at("confusion")[2][3] == 1);
}

TEST_CASE("reports are byte-identical across runs") {
    const auto a = scratch("determinism_a");
    const auto b = scratch("determinism_b");
    for (const auto& d : {a, b}) {
        REQUIRE(tpp_run({"simulate", "--rho", "0.3", "--tp", "12ms", "--rate", "25", "--count", "5", "--out", d.string()}).code == 0);
        REQUIRE(tpp_run({"envelope", "sweep", "--out", d.string()}).code == 0);
    }
    for (const char* f : {"simulate_summary.json", "simulate_force.csv", "simulate_force.svg", "envelope_sweep.json",
                          "envelope_boundary.csv", "envelope_boundary.svg"}) {
        CHECK(slurp(a / f) == slurp(b / f));
    }
}

TEST_CASE("configuration file and environment variable") {
    const auto dir = scratch("config");
    write(dir / "table.csv", "temp_C,rel_resistivity\n20,1.0\n1020,1.1\n");
    write(dir / "tpp.json", R"({"envelope": {"T_fail_K": 700}, "output_dir": "results",
                               "resistivity_table_path": "table.csv",
                               "geometries": {"wide": {"length_mm": 8, "diameter_mm": 8}}})");
    auto r = tpp_run({"--config", (dir / "tpp.json").string(), "envelope", "sweep"});
    REQUIRE(r.code == 0);
    CHECK(r.report().at("asymptote_W_per_mm").get<double>() == doctest::Approx(700.0 / 6601.0));
    CHECK(fs::exists(dir / "results" / "envelope_sweep.json"));

    ::setenv(cli::kConfigEnvVar, (dir / "tpp.json").string().c_str(), 1);
    r = tpp_run({"simulate", "--geom", "wide", "--rho", "0.1", "--tp", "10ms"});
    ::unsetenv(cli::kConfigEnvVar);
    REQUIRE(r.code == 0);
    CHECK(r.report().at("geometry").at("diameter_mm").get<double>() == doctest::Approx(8.0));
    CHECK(fs::exists(dir / "results" / "simulate_summary.json"));

    write_trace(dir / "shunt.csv", QuantityKind::shunt_voltage, "V", 1e-3, {0.22, 0.2});
    r = tpp_run({"--config", (dir / "tpp.json").string(), "calibrate", "wire", "--trace", (dir / "shunt.csv").string(),
                 "--supply", "10"});
    REQUIRE(r.code == 0);
    CHECK(r.report().at("wire").contains("peak_temperature_C"));

    write(dir / "unknown.json", R"({"envelop": {}})");
    r = tpp_run({"--config", (dir / "unknown.json").string(), "envelope", "sweep"});
    CHECK(r.code == 2);
    CHECK(r.error().at("message").get<std::string>().find("envelop") != std::string::npos);
    write(dir / "missing_table.json", R"({"resistivity_table_path": "nope.csv"})");
    CHECK(tpp_run({"--config", (dir / "missing_table.json").string(), "envelope", "sweep"}).code == 2);
    write(dir / "broken.json", "{not json");
    CHECK(tpp_run({"--config", (dir / "broken.json").string(), "envelope", "sweep"}).code == 2);
}
