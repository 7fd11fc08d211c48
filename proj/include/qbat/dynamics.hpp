#pragma once

// Time evolution: fixed-step RK4 for the driven Schroedinger equation and for
// the dissipative master equation, plus the closed-form populations of the
// sequential-decay cascade.
//
// Both integrators work in the interaction picture of the bare Hamiltonian:
// the drive enters as built (resonant coupling), the bare phases are rotated
// away, and the dissipators are invariant under that rotation. Populations,
// energies and spectra are identical in either frame.

#include <cmath>
#include <optional>
#include <vector>

#include "qbat/pulses.hpp"

namespace qbat {

/// Sequential relaxation and pure-dephasing rates, 1/s.
struct DecayRates {
    double gamma10 = 0.0;  // |1> -> |0>
    double gamma21 = 0.0;  // |2> -> |1>
    double deph1 = 0.0;    // pure dephasing of |1>
    double deph2 = 0.0;    // pure dephasing of |2>

    void validate() const {
        for (double r : {gamma10, gamma21, deph1, deph2})
            if (!(r >= 0.0) || !std::isfinite(r))
                throw invalid_input_error("DecayRates: rates must be finite and non-negative");
    }
    double max_rate() const {
        return std::max(std::max(gamma10, gamma21), std::max(deph1, deph2));
    }
};

struct SchrodingerTrajectory {
    std::vector<double> times;
    std::vector<Vec3> states;  // raw amplitudes; norm drift is never fed back

    std::size_t size() const { return times.size(); }

    /// Populations normalized for reporting.
    std::array<double, 3> populations(std::size_t i) const {
        const double n2 = states[i].norm2();
        return {std::norm(states[i][0]) / n2, std::norm(states[i][1]) / n2,
                std::norm(states[i][2]) / n2};
    }

    PureState state(std::size_t i) const { return PureState::normalized(states[i]); }

    DensityMatrix density(std::size_t i) const { return DensityMatrix::pure(state(i)); }
};

struct LindbladTrajectory {
    std::vector<double> times;
    std::vector<Mat3> states;

    std::size_t size() const { return times.size(); }

    std::array<double, 3> populations(std::size_t i) const {
        return {states[i](0, 0).real(), states[i](1, 1).real(), states[i](2, 2).real()};
    }

    /// Validating accessor; the positivity floor is the integrator budget.
    DensityMatrix state(std::size_t i) const {
        return DensityMatrix::from_matrix(hermitize(states[i]), -1e-8);
    }
};

namespace detail {

inline Vec3 schrodinger_rhs(const Mat3& h, const Vec3& psi) {
    const Vec3 hp = h * psi;
    return cplx(0.0, -1.0) * hp;
}

// Lindblad generator with collapse operators |0><1| (gamma10), |1><2|
// (gamma21) and dephasing projectors on |1>, |2|. Drive may be null.
inline Mat3 lindblad_rhs(const Mat3* h, const DecayRates& r, const Mat3& rho) {
    Mat3 out;
    if (h) out = cplx(0.0, -1.0) * commutator(*h, rho);

    // D[|a><b|] rho = rho_bb |a><a| - 1/2 {|b><b|, rho}
    const auto sequential = [&out, &rho](std::size_t a, std::size_t b, double rate) {
        if (rate == 0.0) return;
        out(a, a) += rate * rho(b, b);
        for (std::size_t k = 0; k < 3; ++k) {
            out(b, k) -= 0.5 * rate * rho(b, k);
            out(k, b) -= 0.5 * rate * rho(k, b);
        }
    };
    sequential(0, 1, r.gamma10);
    sequential(1, 2, r.gamma21);

    // D[|j><j|] rho = rho_jj |j><j| - 1/2 {|j><j|, rho}
    const auto dephase = [&out, &rho](std::size_t j, double rate) {
        if (rate == 0.0) return;
        out(j, j) += rate * rho(j, j);
        for (std::size_t k = 0; k < 3; ++k) {
            out(j, k) -= 0.5 * rate * rho(j, k);
            out(k, j) -= 0.5 * rate * rho(k, j);
        }
    };
    dephase(1, r.deph1);
    dephase(2, r.deph2);
    return out;
}

inline std::size_t step_count(double t_end, double dt) {
    if (!(dt > 0.0) || !(t_end > 0.0))
        throw invalid_input_error("integrator: dt and the horizon must be positive");
    const double raw = t_end / dt;
    std::size_t n = static_cast<std::size_t>(std::llround(raw));
    if (n < 1) n = 1;
    return n;
}

} // namespace detail

/// RK4 integration of i d|psi>/dt = H(t) |psi| with hbar = 1; the envelope is
/// linearly interpolated between schedule samples.
inline SchrodingerTrajectory evolve_schrodinger(const PureState& initial,
                                                const PulseSchedule& schedule, double dt) {
    const double tau = schedule.tau();
    const double peak = schedule.peak_gap();
    if (dt > schedule.grid_step() * (1.0 + 1e-9))
        throw step_size_error("evolve_schrodinger: dt must not exceed the schedule spacing");
    if (dt * peak > 0.05 * (1.0 + 1e-9))
        throw step_size_error("evolve_schrodinger: dt * peak field exceeds the stability bound 0.05");

    const std::size_t n_steps = detail::step_count(tau, dt);
    const double h = tau / static_cast<double>(n_steps);

    SchrodingerTrajectory traj;
    traj.times.reserve(n_steps + 1);
    traj.states.reserve(n_steps + 1);
    Vec3 psi = initial.amplitudes;
    traj.times.push_back(0.0);
    traj.states.push_back(psi);

    const auto hamiltonian = [&schedule](double t) {
        const Envelope e = schedule.at(t);
        return build_drive_hamiltonian(e.omega1, e.omega2);
    };

    for (std::size_t s = 0; s < n_steps; ++s) {
        const double t = static_cast<double>(s) * h;
        const Mat3 h0 = hamiltonian(t);
        const Mat3 h1 = hamiltonian(t + 0.5 * h);
        const Mat3 h2 = hamiltonian(t + h);

        const Vec3 k1 = detail::schrodinger_rhs(h0, psi);
        const Vec3 k2 = detail::schrodinger_rhs(h1, psi + (0.5 * h) * k1);
        const Vec3 k3 = detail::schrodinger_rhs(h1, psi + (0.5 * h) * k2);
        const Vec3 k4 = detail::schrodinger_rhs(h2, psi + h * k3);
        psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        if (std::abs(psi.norm() - 1.0) > 1e-6)
            throw step_size_error("evolve_schrodinger: norm drift above 1e-6, use a smaller dt");
        traj.times.push_back(static_cast<double>(s + 1) * h);
        traj.states.push_back(psi);
    }
    return traj;
}

/// RK4 integration of the master equation over [0, t_end]; schedule may be
/// null for free decay.
inline LindbladTrajectory evolve_lindblad(const DensityMatrix& initial, const DecayRates& rates,
                                          const PulseSchedule* schedule, double dt, double t_end) {
    rates.validate();
    double speed = rates.max_rate();
    if (schedule) {
        speed = std::max(speed, schedule->peak_gap());
        if (dt > schedule->grid_step() * (1.0 + 1e-9))
            throw step_size_error("evolve_lindblad: dt must not exceed the schedule spacing");
    }
    if (dt * speed > 0.05 * (1.0 + 1e-9))
        throw step_size_error("evolve_lindblad: dt * max(rate, field) exceeds the stability bound 0.05");

    const std::size_t n_steps = detail::step_count(t_end, dt);
    const double h = t_end / static_cast<double>(n_steps);

    LindbladTrajectory traj;
    traj.times.reserve(n_steps + 1);
    traj.states.reserve(n_steps + 1);
    Mat3 rho = initial.entries;
    traj.times.push_back(0.0);
    traj.states.push_back(rho);

    const auto drive = [schedule](double t) -> Mat3 {
        const Envelope e = schedule->at(t);
        return build_drive_hamiltonian(e.omega1, e.omega2);
    };

    for (std::size_t s = 0; s < n_steps; ++s) {
        const double t = static_cast<double>(s) * h;
        Mat3 k1, k2, k3, k4;
        if (schedule) {
            const Mat3 h0 = drive(t);
            const Mat3 h1 = drive(t + 0.5 * h);
            const Mat3 h2 = drive(t + h);
            k1 = detail::lindblad_rhs(&h0, rates, rho);
            k2 = detail::lindblad_rhs(&h1, rates, rho + (0.5 * h) * k1);
            k3 = detail::lindblad_rhs(&h1, rates, rho + (0.5 * h) * k2);
            k4 = detail::lindblad_rhs(&h2, rates, rho + h * k3);
        } else {
            k1 = detail::lindblad_rhs(nullptr, rates, rho);
            k2 = detail::lindblad_rhs(nullptr, rates, rho + (0.5 * h) * k1);
            k3 = detail::lindblad_rhs(nullptr, rates, rho + (0.5 * h) * k2);
            k4 = detail::lindblad_rhs(nullptr, rates, rho + h * k3);
        }
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        if (std::abs(rho.trace().real() - 1.0) > 1e-6)
            throw step_size_error("evolve_lindblad: trace drift above 1e-6, use a smaller dt");
        traj.times.push_back(static_cast<double>(s + 1) * h);
        traj.states.push_back(rho);
    }
    return traj;
}

/// Closed-form cascade populations from the fully charged state rho22(0) = 1.
/// The gamma10 == gamma21 limit is handled by the same stable expression.
inline std::array<double, 3> analytic_populations(double t, const DecayRates& rates) {
    if (t < 0.0) throw domain_error("analytic_populations: t must be non-negative");
    rates.validate();
    const double g10 = rates.gamma10, g21 = rates.gamma21;
    const double p2 = std::exp(-g21 * t);
    const double x = (g10 - g21) * t;
    double p1;
    if (std::abs(x) < 1e-3) {
        // Near-degenerate rates: g21 t e^{-g21 t} phi(x), phi(x) = (1-e^{-x})/x -> 1.
        const double phi = x == 0.0 ? 1.0 : -std::expm1(-x) / x;
        p1 = g21 * t * p2 * phi;
    } else {
        p1 = g21 / (g10 - g21) * (p2 - std::exp(-g10 * t));
    }
    return {1.0 - p1 - p2, p1, p2};
}

/// Re Tr[rho H0]; the imaginary part must be negligible.
inline double instantaneous_energy(const DensityMatrix& state, const Mat3& h0) {
    const cplx tr = (state.entries * h0).trace();
    if (std::abs(tr.imag()) > 1e-10 * std::max(1.0, std::abs(tr.real())))
        throw invalid_input_error("instantaneous_energy: trace has a non-negligible imaginary part");
    return tr.real();
}

inline double instantaneous_energy(const PureState& state, const Mat3& h0) {
    const cplx e = inner(state.amplitudes, h0 * state.amplitudes);
    return e.real();
}

} // namespace qbat
