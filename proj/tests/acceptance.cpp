// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Budgets are wall-clock seconds.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qbat/experiments.hpp"

using namespace qbat;

namespace {

int g_failures = 0;

struct Check {
    std::string text;
    bool ok;
};

class Criterion {
public:
    Criterion(int number, std::string name, double budget_s)
        : number_(number), name_(std::move(name)), budget_s_(budget_s),
          start_(std::chrono::steady_clock::now()) {}

    template <typename T>
    void check(const std::string& label, bool ok, T measured) {
        std::ostringstream ss;
        ss << label << " = " << measured;
        checks_.push_back({ss.str(), ok});
    }
    void check(const std::string& label, bool ok) { checks_.push_back({label, ok}); }

    void finish() {
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        bool ok = elapsed < budget_s_;
        std::string detail;
        for (const auto& c : checks_) {
            ok = ok && c.ok;
            detail += "\n    ";
            detail += c.ok ? "ok  " : "BAD ";
            detail += c.text;
        }
        std::printf("[%s] criterion %d: %s (%.3f s < %g s)%s\n", ok ? "PASS" : "FAIL", number_,
                    name_.c_str(), elapsed, budget_s_, detail.c_str());
        if (!ok) ++g_failures;
    }

private:
    int number_;
    std::string name_;
    double budget_s_;
    std::chrono::steady_clock::time_point start_;
    std::vector<Check> checks_;
};

const BatteryLevels kLevels{two_pi * 6.266e9, two_pi * 6.011e9};
const DecayRates kRates{51.4e3, 79.7e3, 0.0, 0.0};
constexpr double kOmegaMax = two_pi * 1e7;

DensityMatrix random_state(std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat3 a;
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) a(r, c) = cplx(g(rng), g(rng));
    Mat3 m = a * a.adjoint();
    m = (1.0 / m.trace().real()) * m;
    return DensityMatrix::from_matrix(hermitize(m));
}

PureState random_pure(std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    return PureState::normalized(
        {cplx(g(rng), g(rng)), cplx(g(rng), g(rng)), cplx(g(rng), g(rng))});
}

void criterion_1_max_ergotropy() {
    Criterion c(1, "maximum ergotropy of the fully charged state", 1e-3);
    const Mat3 h0 = build_bare_hamiltonian(kLevels);
    const double e_uev = omega_to_microev(ergotropy(DensityMatrix::level(2), h0));
    c.check("|E/51 - 1| < 0.01, E_ueV", std::abs(e_uev / 51.0 - 1.0) < 0.01, e_uev);
    c.finish();
}

void criterion_2_stable_charging() {
    Criterion c(2, "stable QAB passage at tau = 600 ns", 1.0);
    const PulseSchedule s = discretize(
        ProtocolFamily{ProtocolTag::QabQuadratic, kOmegaMax, 600e-9, ChargeMode::Stable}, 2001);
    const auto traj = evolve_schrodinger(PureState::basis(0), s, 0.1e-9);
    const double p2 = traj.populations(traj.size() - 1)[2];
    double min_overlap = 1.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const Envelope e = s.at(traj.times[i]);
        const auto db = dark_bright_states(e.omega1, e.omega2);
        min_overlap = std::min(min_overlap, std::abs(inner(db.dark.amplitudes, traj.states[i])) /
                                                traj.states[i].norm());
    }
    c.check("final p2 >= 0.99", p2 >= 0.99, p2);
    c.check("min dark overlap >= 0.995", min_overlap >= 0.995, min_overlap);
    c.finish();
}

struct SweepSummary {
    double tau_c[4][2];  // [family][mode], seconds; family order: ramp, cyc, qab, num
};

SweepSummary run_sweep() {
    ExperimentConfig config;
    config.sweep_tau_start = 4e-9;
    config.sweep_tau_step = 4e-9;
    config.sweep_tau_stop = 800e-9;
    const auto cells = run_charge_sweep(config);
    SweepSummary out{};
    for (const auto& cell : cells) {
        const int f = cell.tag == ProtocolTag::LinearRamp         ? 0
                      : cell.tag == ProtocolTag::CycloidLinear    ? 1
                      : cell.tag == ProtocolTag::QabQuadratic     ? 2
                                                                  : 3;
        out.tau_c[f][cell.mode == ChargeMode::Stable ? 0 : 1] =
            cell.metrics ? cell.metrics->tau_c : -1.0;
    }
    return out;
}

void criterion_3_stable_ordering(const SweepSummary& s) {
    Criterion c(3, "stable charging-speed ordering and QAB landmark", 120.0);
    const double ramp = s.tau_c[0][0], cyc = s.tau_c[1][0], qab = s.tau_c[2][0],
                 num = s.tau_c[3][0];
    c.check("qab fastest stable (qab < cyc, num, ramp), qab_ns",
            qab > 0 && qab < cyc && qab < num && qab < ramp, qab * 1e9);
    c.check("cycloid <= numerical, (cyc_ns, num_ns)", cyc <= num,
            std::to_string(cyc * 1e9) + ", " + std::to_string(num * 1e9));
    c.check("numerical < ramp", num < ramp, num * 1e9);
    c.check("qab stable tau_c in [120, 260] ns", qab >= 120e-9 && qab <= 260e-9, qab * 1e9);
    c.finish();
}

void criterion_4_unstable_enhancement(const SweepSummary& s) {
    Criterion c(4, "unstable enhancement over stable", 120.0);
    static const char* names[4] = {"ramp", "cycloid", "qab", "numerical"};
    for (int f = 0; f < 4; ++f) {
        const double sta = s.tau_c[f][0], uns = s.tau_c[f][1];
        const double improvement = sta / uns - 1.0;
        c.check(std::string(names[f]) + ": unstable faster, power improvement > 100%",
                uns > 0 && uns < sta && improvement > 1.0,
                std::to_string(improvement * 100.0) + "%");
    }
    const double ramp_impr = s.tau_c[0][0] / s.tau_c[0][1] - 1.0;
    c.check("ramp improvement >= 250%", ramp_impr >= 2.5, ramp_impr * 100.0);
    c.check("unstable ramp tau_c in [55, 115] ns",
            s.tau_c[0][1] >= 55e-9 && s.tau_c[0][1] <= 115e-9, s.tau_c[0][1] * 1e9);
    c.finish();
}

void criterion_5_self_discharge_oracles() {
    Criterion c(5, "self-discharge closed forms vs integration", 10.0);
    const Mat3 h0 = build_bare_hamiltonian(kLevels);
    const double e_max = kLevels.max_energy();

    const auto traj = evolve_lindblad(DensityMatrix::level(2), kRates, nullptr, 1e-7, 60e-6);
    double pop_dev = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto num = traj.populations(i);
        const auto ana = analytic_populations(traj.times[i], kRates);
        for (int k = 0; k < 3; ++k) pop_dev = std::max(pop_dev, std::abs(num[k] - ana[k]));
    }
    c.check("populations max |numeric - closed form| <= 1e-6", pop_dev <= 1e-6, pop_dev);

    double erg_dev = 0.0;
    for (int i = 0; i <= 1200; ++i) {
        const double t = i * 0.05e-6;
        const auto p = analytic_populations(t, kRates);
        const double general =
            ergotropy(DensityMatrix::from_matrix(Mat3::diag(p[0], p[1], p[2])), h0);
        const double piecewise = self_discharge_ergotropy(t, kRates, kLevels);
        erg_dev = std::max(erg_dev, std::abs(general - piecewise) / e_max);
    }
    c.check("piecewise vs general ergotropy <= 1e-10 relative", erg_dev <= 1e-10, erg_dev);
    c.finish();
}

void criterion_6_supercapacitor_classification() {
    Criterion c(6, "supercapacitor model selection", 5.0);
    ErgotropyTrace device;
    device.e_max = omega_to_microev(kLevels.max_energy());
    for (int i = 0; i < 240; ++i) {
        const double t = 60e-6 * i / 239.0;
        device.times.push_back(t);
        device.ergotropy.push_back(
            omega_to_microev(self_discharge_ergotropy(t, kRates, kLevels)));
    }
    const DischargeVerdict v = classify(positive_prefix(device));
    c.check("device trace: verdict supercapacitor with AIC margin >= 10",
            v.model == DischargeModel::Supercapacitor && v.evidence >= 10.0, v.evidence);

    ErgotropyTrace ohmic;
    ohmic.e_max = 5.0;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> noise(-0.01, 0.01);
    for (int i = 0; i < 40; ++i) {
        const double t = 3e-6 * i / 39.0;
        ohmic.times.push_back(t);
        ohmic.ergotropy.push_back(5.0 * std::exp(-t / 3e-6) * (1.0 + noise(rng)));
    }
    const DischargeVerdict vo = classify(ohmic);
    c.check("ohmic synthetic: single-exponential wins", vo.model == DischargeModel::Ohmic,
            vo.evidence);
    c.finish();
}

void criterion_7_brachistochrone_criticality() {
    Criterion c(7, "QAB criticality and stationarity", 30.0);
    const double tau = 190e-9;
    const PulseSchedule qab = discretize(
        ProtocolFamily{ProtocolTag::QabQuadratic, kOmegaMax, tau, ChargeMode::Stable}, 2001);

    const CriticalityVerdict v = second_derivative_test(qab, 50);
    double lambda_min = std::numeric_limits<double>::infinity();
    for (int j = 0; j < 2; ++j)
        for (double lam : v.lambda_terms[j]) lambda_min = std::min(lambda_min, lam);
    c.check("verdict minimum with every Fourier term positive (n <= 50)",
            v.verdict == Criticality::Minimum && lambda_min > 0.0, lambda_min);

    // Symmetric-difference directional derivative at eps = 1e-5 along
    // admissible (constraint-tangent where applicable) directions.
    const double eps = 1e-5;
    const auto gateaux = [&](const PulseSchedule& base, auto&& dir) {
        PulseSchedule plus = base, minus = base;
        for (std::size_t i = 0; i < base.size(); ++i) {
            const double frac = static_cast<double>(i) / static_cast<double>(base.size() - 1);
            const auto [e1, e2] = dir(frac, i);
            plus.omega1[i] += eps * e1;
            plus.omega2[i] += eps * e2;
            minus.omega1[i] -= eps * e1;
            minus.omega2[i] -= eps * e2;
        }
        const double ap = functional_time(plus).value;
        const double am = functional_time(minus).value;
        return std::abs(ap - am) / (ap + am);
    };

    double worst = 0.0;
    for (int n = 1; n <= 3; ++n) {
        worst = std::max(worst, gateaux(qab, [&](double frac, std::size_t i) {
                             const double a = std::sin(n * M_PI * frac);
                             return std::pair{-a * qab.omega2[i], a * qab.omega1[i]};
                         }));
        const PulseSchedule cyc = discretize(
            ProtocolFamily{ProtocolTag::CycloidLinear, kOmegaMax, tau, ChargeMode::Stable}, 2001);
        worst = std::max(worst, gateaux(cyc, [&](double frac, std::size_t) {
                             const double a = std::sin(n * M_PI * frac) * kOmegaMax;
                             return std::pair{a, -a};
                         }));
    }
    const PulseSchedule num = solve_unconstrained(ChargeMode::Stable, tau, kOmegaMax, 1001).schedule;
    for (int n = 1; n <= 3; ++n) {
        worst = std::max(worst, gateaux(num, [&](double frac, std::size_t) {
                             return std::pair{std::sin(n * M_PI * frac) * kOmegaMax, 0.0};
                         }));
        worst = std::max(worst, gateaux(num, [&](double frac, std::size_t) {
                             return std::pair{0.0, std::sin(n * M_PI * frac) * kOmegaMax};
                         }));
    }
    c.check("finite-eps directional derivative at EL solutions <= 1e-6 relative", worst <= 1e-6,
            worst);
    c.finish();
}

void criterion_8_conservation_and_order() {
    Criterion c(8, "numerical conservation and RK4 order", 30.0);

    // Unstable passage puts full weight on the +-gap branches: worst case for
    // norm decay. 1e4 steps at the acceptance settings.
    const PulseSchedule uns = discretize(
        ProtocolFamily{ProtocolTag::QabQuadratic, kOmegaMax, 1e-6, ChargeMode::Unstable}, 2001);
    const auto traj = evolve_schrodinger(PureState::basis(0), uns, 0.1e-9);
    double norm_drift = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i)
        norm_drift = std::max(norm_drift, std::abs(traj.states[i].norm() - 1.0));
    c.check("unitary norm drift over 1e4 steps <= 1e-9", traj.size() == 10001 && norm_drift <= 1e-9,
            norm_drift);

    const auto ltraj =
        evolve_lindblad(DensityMatrix::level(2), kRates, nullptr, 60e-6 / 1e4, 60e-6);
    double trace_drift = 0.0;
    for (std::size_t i = 0; i < ltraj.size(); ++i)
        trace_drift = std::max(trace_drift, std::abs(ltraj.states[i].trace().real() - 1.0));
    c.check("lindblad trace drift over 1e4 steps <= 1e-9",
            ltraj.size() == 10001 && trace_drift <= 1e-9, trace_drift);

    // Order check against the exact constant-drive propagator.
    const double w1 = two_pi * 1.5e6, w2 = two_pi * 2e6;
    const PulseSchedule constant = PulseSchedule::from_samples(
        {0.0, 1e-6}, {w1, w1}, {w2, w2},
        ProtocolFamily{ProtocolTag::LinearRamp, drive_gap(w1, w2), 1e-6, ChargeMode::Stable});
    const EigenSystem es = eig_hermitian(build_drive_hamiltonian(w1, w2));
    const auto exact_err = [&](double dt) {
        const auto run = evolve_schrodinger(PureState::basis(0), constant, dt);
        Vec3 exact;
        const Vec3 psi0 = PureState::basis(0).amplitudes;
        for (std::size_t k = 0; k < 3; ++k)
            exact = exact + std::exp(cplx(0.0, -es.values[k] * run.times.back())) *
                                inner(es.vectors[k], psi0) * es.vectors[k];
        return (run.states.back() - exact).norm();
    };
    const double ratio_u = exact_err(1.25e-9) / exact_err(0.625e-9);
    c.check("unitary halving error ratio in [12, 20]", ratio_u >= 12.0 && ratio_u <= 20.0, ratio_u);

    const auto lindblad_err = [&](double dt) {
        const auto run = evolve_lindblad(DensityMatrix::level(2), kRates, nullptr, dt, 60e-6);
        const auto num = run.populations(run.size() - 1);
        const auto ana = analytic_populations(60e-6, kRates);
        double e = 0.0;
        for (int k = 0; k < 3; ++k) e = std::max(e, std::abs(num[k] - ana[k]));
        return e;
    };
    const double ratio_l = lindblad_err(0.5e-6) / lindblad_err(0.25e-6);
    c.check("lindblad halving error ratio in [12, 20]", ratio_l >= 12.0 && ratio_l <= 20.0,
            ratio_l);
    c.finish();
}

void criterion_9_tomography_round_trip() {
    Criterion c(9, "tomography round trip", 30.0);
    std::mt19937_64 rng(20240814);
    double worst_dist = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const DensityMatrix rho = random_state(rng);
        worst_dist = std::max(worst_dist, trace_distance(rho, reconstruct(simulate_measurements(rho))));
    }
    c.check("exact records: worst trace distance <= 1e-10 over 100 states", worst_dist <= 1e-10,
            worst_dist);

    const DensityMatrix pure = DensityMatrix::pure(random_pure(rng));
    const DensityMatrix est = reconstruct(simulate_measurements(pure, 100000ull, 20240814));
    const double fid = fidelity(pure, est);
    c.check("seeded 1e5-shot fidelity >= 0.99", fid >= 0.99, fid);
    c.finish();
}

} // namespace

int main() {
    std::printf("acceptance suite: three-level battery toolkit\n");
    criterion_1_max_ergotropy();
    criterion_2_stable_charging();
    {
        const auto t0 = std::chrono::steady_clock::now();
        const SweepSummary sweep = run_sweep();
        const double sweep_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("  (shared tau sweep: 4..800 ns step 4 ns, 8 cells, %.1f s)\n", sweep_s);
        criterion_3_stable_ordering(sweep);
        criterion_4_unstable_enhancement(sweep);
    }
    criterion_5_self_discharge_oracles();
    criterion_6_supercapacitor_classification();
    criterion_7_brachistochrone_criticality();
    criterion_8_conservation_and_order();
    criterion_9_tomography_round_trip();

    if (g_failures == 0) {
        std::printf("all acceptance criteria passed\n");
    } else {
        std::printf("%d criterion(s) failed\n", g_failures);
    }
    return g_failures == 0 ? 0 : 1;
}
