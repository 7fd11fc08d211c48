#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "qbat/config.hpp"
#include "qbat/io.hpp"

using namespace qbat;

TEST_CASE("doubles survive the shortest round-trip format") {
    std::mt19937_64 rng(20240815);
    std::uniform_real_distribution<double> mant(-1.0, 1.0);
    std::uniform_int_distribution<int> expo(-300, 300);
    for (int trial = 0; trial < 5000; ++trial) {
        const double v = std::ldexp(mant(rng), expo(rng));
        CHECK(parse_double(fmt_double(v)) == v);
    }
    CHECK(parse_double(fmt_double(0.0)) == 0.0);
    CHECK(fmt_double(1.0) == "1");
    CHECK_THROWS_AS(parse_double("1.2.3"), io_error);
    CHECK_THROWS_AS(parse_double("abc"), io_error);
}

TEST_CASE("schedule CSV round trip") {
    const ProtocolFamily fam{ProtocolTag::QabQuadratic, two_pi * 1e7, 190e-9, ChargeMode::Stable};
    const PulseSchedule s = discretize(fam, 101);
    const std::string csv = schedule_to_csv(s);
    CHECK(csv.rfind(schedule_csv_header, 0) == 0);
    const PulseSchedule back = schedule_from_csv(csv, fam);
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(back.times[i] == s.times[i]);
        CHECK(back.omega1[i] == s.omega1[i]);
        CHECK(back.omega2[i] == s.omega2[i]);
    }
    CHECK_THROWS_AS(schedule_from_csv("wrong,header\n1,2\n", fam), io_error);
}

TEST_CASE("ergotropy CSV round trip") {
    ErgotropyTrace tr;
    tr.e_max = 50.7736;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        tr.times.push_back(i * 1e-9);
        tr.ergotropy.push_back(u(rng) * tr.e_max);
    }
    const ErgotropyTrace back = ergotropy_from_csv(ergotropy_to_csv(tr), tr.e_max);
    REQUIRE(back.times.size() == tr.times.size());
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        CHECK(back.times[i] == tr.times[i]);
        CHECK(back.ergotropy[i] == tr.ergotropy[i]);
    }
}

TEST_CASE("measurement CSV round trip") {
    const DensityMatrix rho = DensityMatrix::maximally_mixed();
    const MeasurementRecord rec = simulate_measurements(rho, 5000ull, 99);
    const MeasurementRecord back = measurements_from_csv(measurements_to_csv(rec), rec.shots);
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t k = 0; k < 3; ++k)
            CHECK(back.probabilities[i][k] == rec.probabilities[i][k]);
}

TEST_CASE("trajectory CSV shape") {
    const auto traj = evolve_lindblad(DensityMatrix::level(2), DecayRates{51.4e3, 79.7e3, 0, 0},
                                      nullptr, 1e-7, 10e-6);
    const Mat3 h0 = build_bare_hamiltonian(BatteryLevels{two_pi * 6.266e9, two_pi * 6.011e9});
    const std::string csv = trajectory_to_csv(traj, h0, 10);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == trajectory_csv_header);
    std::size_t rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 11);  // stride 10 over 101 samples
}

TEST_CASE("config parsing") {
    SECTION("defaults validate and carry the device values") {
        ExperimentConfig c;
        CHECK_NOTHROW(c.validate());
        CHECK(c.levels.omega01 == Catch::Approx(two_pi * 6.266e9));
        CHECK(c.rates.gamma21 == Catch::Approx(79.7e3));
        CHECK_FALSE(c.seed.has_value());
    }

    SECTION("text overrides") {
        const std::string text = R"(
# comment line
drive.omega_max_rad_s = 1e7
protocol.family = cycloid   # trailing comment
protocol.mode = unstable
run.threshold = 0.95
seed = 42
)";
        const ExperimentConfig c = parse_config_text(text);
        CHECK(c.omega_max == 1e7);
        CHECK(c.protocol_family == ProtocolTag::CycloidLinear);
        CHECK(c.protocol_mode == ChargeMode::Unstable);
        CHECK(c.threshold == 0.95);
        REQUIRE(c.seed.has_value());
        CHECK(*c.seed == 42);
    }

    SECTION("bad input is rejected") {
        CHECK_THROWS_AS(parse_config_text("nonsense.key = 1\n"), config_error);
        CHECK_THROWS_AS(parse_config_text("drive.omega_max_rad_s 1e7\n"), config_error);
        CHECK_THROWS_AS(parse_config_text("protocol.family = fancy\n"), config_error);

        ExperimentConfig empty_sweep;
        empty_sweep.sweep_tau_stop = empty_sweep.sweep_tau_start / 2.0;
        CHECK_THROWS_AS(empty_sweep.validate(), config_error);

        ExperimentConfig bad_threshold;
        bad_threshold.threshold = 1.5;
        CHECK_THROWS_AS(bad_threshold.validate(), config_error);
    }

    SECTION("tau sweep generation") {
        ExperimentConfig c;
        c.sweep_tau_start = 100e-9;
        c.sweep_tau_step = 100e-9;
        c.sweep_tau_stop = 300e-9;
        const auto taus = c.tau_sweep();
        REQUIRE(taus.size() == 3);
        CHECK(taus.front() == 100e-9);
        CHECK(taus.back() == Catch::Approx(300e-9));
    }
}

TEST_CASE("manifest digests validate and detect tampering") {
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / "qbat_io_test";
    std::filesystem::remove_all(dir);
    OutputWriter writer(dir);
    writer.write("a.csv", "t_s,omega1_rad_s,omega2_rad_s\n0,1,2\n");
    writer.write("b.txt", "hello\n");
    write_manifest(writer, "test", {{"k", "v"}}, 0, 1);

    CHECK_NOTHROW(validate_manifest(dir));

    std::ofstream tamper(dir / "b.txt", std::ios::trunc);
    tamper << "tampered\n";
    tamper.close();
    CHECK_THROWS_AS(validate_manifest(dir), io_error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("unwritable output directory raises io_error") {
    CHECK_THROWS_AS(OutputWriter("/proc/definitely/not/writable"), io_error);
}
