#pragma once

// Experiment runners behind the CLI subcommands. Each writes its data files
// plus a manifest with content digests into the configured output directory.

#include <chrono>

#include "qbat/brachistochrone.hpp"
#include "qbat/config.hpp"

namespace qbat {

struct RunResult {
    std::filesystem::path dir;
    std::vector<WrittenFile> files;
};

namespace detail {

inline std::int64_t now_unix_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

inline RunResult finish(OutputWriter& writer, const std::string& command,
                        const ExperimentConfig& config, std::int64_t t0) {
    write_manifest(writer, command, config.to_key_map(), t0, now_unix_ms());
    return {writer.dir(), writer.files()};
}

// Solver output is dimensionless up to rescaling, so one solve per mode
// serves every tau in a sweep.
struct NumericalSolutions {
    PulseSchedule stable;
    PulseSchedule unstable;

    const PulseSchedule& of(ChargeMode m) const {
        return m == ChargeMode::Stable ? stable : unstable;
    }
};

inline NumericalSolutions solve_numerical(const ExperimentConfig& c) {
    return {solve_unconstrained(ChargeMode::Stable, c.protocol_tau, c.omega_max, c.n_samples)
                .schedule,
            solve_unconstrained(ChargeMode::Unstable, c.protocol_tau, c.omega_max, c.n_samples)
                .schedule};
}

inline PulseSchedule family_schedule(const ExperimentConfig& c, ProtocolTag tag, ChargeMode mode,
                                     double tau, std::size_t n,
                                     const NumericalSolutions* solved) {
    const ProtocolFamily fam{tag, c.omega_max, tau, mode};
    if (tag == ProtocolTag::NumericalUnconstrained) {
        if (!solved) throw missing_solution_error("numerical family requested without a solve");
        return discretize(fam, n, solved->of(mode));
    }
    return discretize(fam, n);
}

// Samples per run so the schedule spacing never undercuts the integrator dt.
inline std::size_t run_samples(const ExperimentConfig& c, double tau) {
    const auto cap = static_cast<std::size_t>(tau / c.dt) + 1;
    return std::max<std::size_t>(2, std::min(c.n_samples, cap));
}

inline std::string file_tag(ProtocolTag tag, ChargeMode mode) {
    return std::string(to_string(tag)) + "_" + to_string(mode);
}

constexpr std::array<ProtocolTag, 4> all_families = {
    ProtocolTag::LinearRamp, ProtocolTag::CycloidLinear, ProtocolTag::QabQuadratic,
    ProtocolTag::NumericalUnconstrained};
constexpr std::array<ChargeMode, 2> all_modes = {ChargeMode::Stable, ChargeMode::Unstable};

} // namespace detail

// ---------------------------------------------------------------------------
// protocol: one schedule CSV per family and mode
// ---------------------------------------------------------------------------

inline RunResult cmd_protocol(const ExperimentConfig& config) {
    config.validate();
    const std::int64_t t0 = detail::now_unix_ms();
    OutputWriter writer(config.output_dir);
    const auto solved = detail::solve_numerical(config);

    for (ProtocolTag tag : detail::all_families)
        for (ChargeMode mode : detail::all_modes) {
            const PulseSchedule s = detail::family_schedule(config, tag, mode, config.protocol_tau,
                                                            config.n_samples, &solved);
            const std::string name = "protocol_" + detail::file_tag(tag, mode) + ".csv";
            const std::string csv = schedule_to_csv(s);
            writer.write(name, csv);

            // Post-write validation: parse back and re-check the family
            // contracts on what actually landed on disk.
            const PulseSchedule back = schedule_from_csv(csv, s.family);
            back.validate_mode_boundaries();
            const double tol = 1e-12 * config.omega_max;
            for (std::size_t i = 0; i < back.size(); ++i) {
                if (tag == ProtocolTag::CycloidLinear || tag == ProtocolTag::LinearRamp) {
                    if (std::abs(back.omega1[i] + back.omega2[i] - config.omega_max) > tol)
                        throw io_error(name + ": linear constraint violated after round trip");
                }
                if (tag == ProtocolTag::QabQuadratic) {
                    const double g2 = back.omega1[i] * back.omega1[i] +
                                      back.omega2[i] * back.omega2[i];
                    if (std::abs(g2 - config.omega_max * config.omega_max) >
                        1e-12 * config.omega_max * config.omega_max)
                        throw io_error(name + ": quadratic constraint violated after round trip");
                }
            }
        }
    return detail::finish(writer, "protocol", config, t0);
}

// ---------------------------------------------------------------------------
// charge: tau sweep of final ergotropy per family and mode, plus summary
// ---------------------------------------------------------------------------

struct ChargeCell {
    ProtocolTag tag;
    ChargeMode mode;
    ErgotropyTrace trace;                  // times = sweep taus, final ergotropy
    std::optional<ChargingMetrics> metrics;  // absent if never charged
};

/// Core of cmd_charge, reusable by the acceptance suite.
inline std::vector<ChargeCell> run_charge_sweep(const ExperimentConfig& config) {
    config.validate();
    const auto taus = config.tau_sweep();
    const Mat3 h0 = build_bare_hamiltonian(config.levels);
    const double e_max_uev = omega_to_microev(config.levels.max_energy());
    const auto solved = detail::solve_numerical(config);

    std::vector<ChargeCell> cells;
    for (ProtocolTag tag : detail::all_families)
        for (ChargeMode mode : detail::all_modes) {
            ChargeCell cell{tag, mode, {}, std::nullopt};
            cell.trace.e_max = e_max_uev;
            for (double tau : taus) {
                const PulseSchedule s = detail::family_schedule(
                    config, tag, mode, tau, detail::run_samples(config, tau), &solved);
                const auto traj = evolve_schrodinger(PureState::basis(0), s, config.dt);
                const double energy = instantaneous_energy(traj.state(traj.size() - 1), h0);
                cell.trace.times.push_back(tau);
                cell.trace.ergotropy.push_back(omega_to_microev(energy));
            }
            try {
                cell.metrics = charging_metrics(cell.trace, config.threshold);
            } catch (const not_charged_error&) {
                cell.metrics = std::nullopt;
            }
            cells.push_back(std::move(cell));
        }
    return cells;
}

inline RunResult cmd_charge(const ExperimentConfig& config) {
    const std::int64_t t0 = detail::now_unix_ms();
    const auto cells = run_charge_sweep(config);
    OutputWriter writer(config.output_dir);

    std::string summary = "family,mode,tau_s,final_fraction,tau_c_s,mean_power_ueV_per_s\n";
    for (const auto& cell : cells) {
        writer.write("charge_trace_" + detail::file_tag(cell.tag, cell.mode) + ".csv",
                     ergotropy_to_csv(cell.trace));
        for (std::size_t i = 0; i < cell.trace.times.size(); ++i) {
            summary += to_string(cell.tag);
            summary += ',';
            summary += to_string(cell.mode);
            summary += ',';
            summary += fmt_double(cell.trace.times[i]);
            summary += ',';
            summary += fmt_double(cell.trace.ergotropy[i] / cell.trace.e_max);
            summary += ',';
            summary += cell.metrics ? fmt_double(cell.metrics->tau_c) : "nan";
            summary += ',';
            summary += cell.metrics ? fmt_double(cell.metrics->mean_power) : "nan";
            summary += '\n';
        }
    }
    writer.write("charge_summary.csv", summary);
    return detail::finish(writer, "charge", config, t0);
}

// ---------------------------------------------------------------------------
// discharge: free decay from the fully charged state
// ---------------------------------------------------------------------------

inline RunResult cmd_discharge(const ExperimentConfig& config) {
    config.validate();
    const std::int64_t t0 = detail::now_unix_ms();
    OutputWriter writer(config.output_dir);

    const Mat3 h0 = build_bare_hamiltonian(config.levels);
    const double e_max_uev = omega_to_microev(config.levels.max_energy());
    const auto traj = evolve_lindblad(DensityMatrix::level(2), config.rates, nullptr,
                                      config.discharge_dt, config.discharge_t_max);

    ErgotropyTrace numeric, analytic;
    numeric.e_max = analytic.e_max = e_max_uev;
    for (std::size_t i = 0; i < traj.size(); i += config.discharge_stride) {
        const double t = traj.times[i];
        numeric.times.push_back(t);
        numeric.ergotropy.push_back(omega_to_microev(ergotropy(traj.state(i), h0)));
        analytic.times.push_back(t);
        analytic.ergotropy.push_back(
            omega_to_microev(self_discharge_ergotropy(t, config.rates, config.levels)));
    }
    writer.write("discharge_numeric.csv", ergotropy_to_csv(numeric));
    writer.write("discharge_analytic.csv", ergotropy_to_csv(analytic));
    writer.write("discharge_trajectory.csv",
                 trajectory_to_csv(traj, h0, config.discharge_stride));

    const auto crossings = crossing_times(config.rates);
    nlohmann::json cj = nlohmann::json::array();
    for (const auto& c : crossings) cj.push_back({{"pair", to_string(c.pair)}, {"time_s", c.time}});
    writer.write("discharge_crossings.json", cj.dump(2) + "\n");

    // Fit the numeric trace above the integration noise floor.
    ErgotropyTrace fit_input;
    fit_input.e_max = e_max_uev;
    for (std::size_t i = 0; i < numeric.times.size(); ++i) {
        if (numeric.ergotropy[i] <= 1e-9 * e_max_uev) break;
        fit_input.times.push_back(numeric.times[i]);
        fit_input.ergotropy.push_back(numeric.ergotropy[i]);
    }
    const DischargeVerdict verdict = classify(fit_input);

    double max_dev = 0.0;
    for (std::size_t i = 0; i < numeric.times.size(); ++i)
        max_dev = std::max(max_dev,
                           std::abs(numeric.ergotropy[i] - analytic.ergotropy[i]) / e_max_uev);

    nlohmann::json vj;
    vj["model"] = to_string(verdict.model);
    vj["aic_evidence"] = verdict.evidence;
    vj["single"] = {{"amplitudes_ueV", verdict.single_fit.amplitudes},
                    {"time_constants_s", verdict.single_fit.time_constants},
                    {"rss", verdict.single_fit.rss},
                    {"degenerate", verdict.single_fit.degenerate}};
    vj["double"] = {{"amplitudes_ueV", verdict.double_fit.amplitudes},
                    {"time_constants_s", verdict.double_fit.time_constants},
                    {"rss", verdict.double_fit.rss},
                    {"degenerate", verdict.double_fit.degenerate}};
    vj["numeric_vs_analytic_max_fraction_deviation"] = max_dev;
    writer.write("discharge_verdict.json", vj.dump(2) + "\n");

    return detail::finish(writer, "discharge", config, t0);
}

// ---------------------------------------------------------------------------
// brachistochrone: unconstrained solutions, residuals, functional table
// ---------------------------------------------------------------------------

inline RunResult cmd_brachistochrone(const ExperimentConfig& config) {
    config.validate();
    const std::int64_t t0 = detail::now_unix_ms();
    OutputWriter writer(config.output_dir);

    detail::NumericalSolutions solved{PulseSchedule{}, PulseSchedule{}};
    for (ChargeMode mode : detail::all_modes) {
        const auto report =
            solve_unconstrained(mode, config.protocol_tau, config.omega_max, config.n_samples);
        (mode == ChargeMode::Stable ? solved.stable : solved.unstable) = report.schedule;

        const std::string tag = to_string(mode);
        writer.write("brachistochrone_" + tag + ".csv", schedule_to_csv(report.schedule));

        std::string iters = "iter,residual_norm\n";
        for (std::size_t i = 0; i < report.residual_history.size(); ++i) {
            iters += std::to_string(i);
            iters += ',';
            iters += fmt_double(report.residual_history[i]);
            iters += '\n';
        }
        writer.write("brachistochrone_" + tag + "_iterations.csv", iters);

        const ElResidual res = el_residual(report.schedule);
        std::string prof = "t_s,r1,r2\n";
        for (std::size_t i = 0; i < res.r1.size(); ++i) {
            prof += fmt_double(report.schedule.times[i]);
            prof += ',';
            prof += fmt_double(res.r1[i]);
            prof += ',';
            prof += fmt_double(res.r2[i]);
            prof += '\n';
        }
        writer.write("brachistochrone_" + tag + "_residuals.csv", prof);
    }

    std::string table = "family,mode,functional\n";
    for (ProtocolTag tag : detail::all_families)
        for (ChargeMode mode : detail::all_modes) {
            const PulseSchedule s = detail::family_schedule(config, tag, mode, config.protocol_tau,
                                                            config.n_samples, &solved);
            table += to_string(tag);
            table += ',';
            table += to_string(mode);
            table += ',';
            table += fmt_double(functional_time(s).value);
            table += '\n';
        }
    writer.write("functional_table.csv", table);

    const PulseSchedule qab = detail::family_schedule(
        config, ProtocolTag::QabQuadratic, ChargeMode::Stable, config.protocol_tau,
        config.n_samples, nullptr);
    const CriticalityVerdict qv = second_derivative_test(qab, 50);
    const CriticalityVerdict nv = second_derivative_test(solved.stable, 50);
    const auto lambda_min = [](const CriticalityVerdict& v) {
        double m = std::numeric_limits<double>::infinity();
        for (int j = 0; j < 2; ++j)
            for (double x : v.lambda_terms[j]) m = std::min(m, x);
        return m;
    };
    nlohmann::json j;
    j["qab"] = {{"verdict", to_string(qv.verdict)}, {"lambda_min", lambda_min(qv)}, {"modes", 50}};
    j["numerical_stable"] = {{"verdict", to_string(nv.verdict)},
                             {"lambda_min", lambda_min(nv)},
                             {"modes", 50}};
    writer.write("criticality.json", j.dump(2) + "\n");

    return detail::finish(writer, "brachistochrone", config, t0);
}

// ---------------------------------------------------------------------------
// tomography: mid-charge state, simulated shots, reconstruction report
// ---------------------------------------------------------------------------

inline RunResult cmd_tomography(const ExperimentConfig& config) {
    config.validate();
    if (!config.seed)
        throw config_error("tomography requires an explicit seed (determinism contract)");
    const std::int64_t t0 = detail::now_unix_ms();
    OutputWriter writer(config.output_dir);

    // State halfway through the configured charging protocol.
    detail::NumericalSolutions solved{PulseSchedule{}, PulseSchedule{}};
    const detail::NumericalSolutions* solved_ptr = nullptr;
    if (config.protocol_family == ProtocolTag::NumericalUnconstrained) {
        solved = detail::solve_numerical(config);
        solved_ptr = &solved;
    }
    const PulseSchedule sched = detail::family_schedule(
        config, config.protocol_family, config.protocol_mode, config.protocol_tau,
        detail::run_samples(config, config.protocol_tau), solved_ptr);
    const auto traj = evolve_schrodinger(PureState::basis(0), sched, config.dt);
    const std::size_t mid = traj.size() / 2;
    const DensityMatrix truth = traj.density(mid);

    const MeasurementRecord exact = simulate_measurements(truth);
    const MeasurementRecord sampled =
        simulate_measurements(truth, config.tomography_shots, *config.seed);
    writer.write("tomography_exact.csv", measurements_to_csv(exact));
    writer.write("tomography_shots.csv", measurements_to_csv(sampled));

    const DensityMatrix rec_exact = reconstruct(exact);
    const DensityMatrix rec_sampled = reconstruct(sampled);

    nlohmann::json j;
    j["state_time_s"] = traj.times[mid];
    j["shots"] = config.tomography_shots;
    j["seed"] = *config.seed;
    j["exact"] = {{"fidelity", fidelity(truth, rec_exact)},
                  {"trace_distance", trace_distance(truth, rec_exact)}};
    j["sampled"] = {{"fidelity", fidelity(truth, rec_sampled)},
                    {"trace_distance", trace_distance(truth, rec_sampled)}};
    writer.write("tomography_report.json", j.dump(2) + "\n");

    return detail::finish(writer, "tomography", config, t0);
}

} // namespace qbat
