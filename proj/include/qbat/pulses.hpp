#pragma once

// Closed-form charging envelope families and their discretization into
// schedules. Stable charging means Omega1(0) = Omega2(tau) = 0 (the passage
// rides the dark state); unstable swaps the boundary roles.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "qbat/qutrit.hpp"

namespace qbat {

enum class ChargeMode { Stable, Unstable };

enum class ProtocolTag { LinearRamp, CycloidLinear, QabQuadratic, NumericalUnconstrained };

inline const char* to_string(ChargeMode m) { return m == ChargeMode::Stable ? "stable" : "unstable"; }

inline const char* to_string(ProtocolTag t) {
    switch (t) {
        case ProtocolTag::LinearRamp: return "ramp";
        case ProtocolTag::CycloidLinear: return "cycloid";
        case ProtocolTag::QabQuadratic: return "qab";
        case ProtocolTag::NumericalUnconstrained: return "numerical";
    }
    return "?";
}

struct ProtocolFamily {
    ProtocolTag tag = ProtocolTag::QabQuadratic;
    double omega_max = 0.0;  // rad/s
    double tau = 0.0;        // s
    ChargeMode mode = ChargeMode::Stable;

    void validate() const {
        if (!(omega_max > 0.0) || !std::isfinite(omega_max))
            throw invalid_input_error("ProtocolFamily: omega_max must be positive");
        if (!(tau > 0.0) || !std::isfinite(tau))
            throw invalid_input_error("ProtocolFamily: tau must be positive");
    }
};

struct Envelope {
    double omega1 = 0.0;
    double omega2 = 0.0;
};

namespace detail {
inline void check_time_range(double t, double tau) {
    if (!(t >= -1e-12 * tau) || !(t <= tau * (1.0 + 1e-12)))
        throw domain_error("pulse evaluation: t outside [0, tau]");
}
} // namespace detail

/// Stable: Omega1 ramps up, Omega2 ramps down; Omega1 + Omega2 = omega_max.
inline Envelope eval_linear_ramp(double t, double tau, double omega_max, ChargeMode mode) {
    detail::check_time_range(t, tau);
    const double s = t / tau;
    const double up = omega_max * s;
    const double down = omega_max - up;
    return mode == ChargeMode::Stable ? Envelope{up, down} : Envelope{down, up};
}

/// Arc-of-cycloid solution of the linear-constraint problem,
/// Omega1 = omega_max [1 -+ tan(pi (1 - 2 t/tau)/4)]/2, Omega2 = omega_max - Omega1.
inline Envelope eval_cycloid(double t, double tau, double omega_max, ChargeMode mode) {
    detail::check_time_range(t, tau);
    const double u = M_PI * (1.0 - 2.0 * t / tau) / 4.0;
    const double sign = mode == ChargeMode::Stable ? -1.0 : 1.0;
    const double w1 = 0.5 * omega_max * (1.0 + sign * std::tan(u));
    return {w1, omega_max - w1};
}

/// Quadratic-constraint optimum: sin/cos pair at constant gap omega_max.
inline Envelope eval_qab_quadratic(double t, double tau, double omega_max, ChargeMode mode) {
    detail::check_time_range(t, tau);
    const double th = M_PI * t / (2.0 * tau);
    const double s = omega_max * std::sin(th);
    const double c = omega_max * std::cos(th);
    return mode == ChargeMode::Stable ? Envelope{s, c} : Envelope{c, s};
}

inline Envelope eval_family(const ProtocolFamily& f, double t) {
    switch (f.tag) {
        case ProtocolTag::LinearRamp: return eval_linear_ramp(t, f.tau, f.omega_max, f.mode);
        case ProtocolTag::CycloidLinear: return eval_cycloid(t, f.tau, f.omega_max, f.mode);
        case ProtocolTag::QabQuadratic: return eval_qab_quadratic(t, f.tau, f.omega_max, f.mode);
        case ProtocolTag::NumericalUnconstrained:
            throw missing_solution_error(
                "NumericalUnconstrained has no closed form; attach a solver schedule");
    }
    throw invalid_input_error("eval_family: unknown protocol tag");
}

// ---------------------------------------------------------------------------
// Discretized schedule
// ---------------------------------------------------------------------------

struct PulseSchedule {
    std::vector<double> times;   // ascending, times[0] = 0, times.back() = tau
    std::vector<double> omega1;  // rad/s
    std::vector<double> omega2;  // rad/s
    ProtocolFamily family;

    std::size_t size() const { return times.size(); }
    double tau() const { return times.back(); }

    /// Lenient factory for free-form envelopes (integrator tests, custom
    /// drives). Checks grid sanity only, not the family boundary conditions.
    static PulseSchedule from_samples(std::vector<double> t, std::vector<double> w1,
                                      std::vector<double> w2, ProtocolFamily fam) {
        PulseSchedule s;
        s.times = std::move(t);
        s.omega1 = std::move(w1);
        s.omega2 = std::move(w2);
        s.family = fam;
        s.check_grid();
        return s;
    }

    void check_grid() const {
        if (times.size() < 2 || omega1.size() != times.size() || omega2.size() != times.size())
            throw invalid_input_error("PulseSchedule: arrays must share a length of at least 2");
        if (times.front() != 0.0)
            throw invalid_input_error("PulseSchedule: times must start at 0");
        for (std::size_t i = 1; i < times.size(); ++i)
            if (!(times[i] > times[i - 1]))
                throw invalid_input_error("PulseSchedule: times must be strictly increasing");
        // Uniform grids only; integrators and quadrature rely on it.
        const double h = times[1] - times[0];
        for (std::size_t i = 1; i < times.size(); ++i)
            if (std::abs((times[i] - times[i - 1]) - h) > 1e-9 * h)
                throw invalid_input_error("PulseSchedule: non-uniform time grid rejected");
    }

    /// Boundary conditions of the declared ChargeMode, to 1e-12 * omega_max.
    void validate_mode_boundaries() const {
        const double tol = 1e-12 * family.omega_max;
        const bool stable = family.mode == ChargeMode::Stable;
        const double first = stable ? omega1.front() : omega2.front();
        const double last = stable ? omega2.back() : omega1.back();
        if (std::abs(first) > tol || std::abs(last) > tol)
            throw invalid_input_error("PulseSchedule: declared ChargeMode boundary conditions violated");
    }

    double grid_step() const { return times[1] - times[0]; }

    /// Envelope at arbitrary t by linear interpolation (matches AWG output).
    Envelope at(double t) const {
        if (t <= times.front()) return {omega1.front(), omega2.front()};
        if (t >= times.back()) return {omega1.back(), omega2.back()};
        const double h = grid_step();
        std::size_t i = static_cast<std::size_t>((t - times.front()) / h);
        if (i >= times.size() - 1) i = times.size() - 2;
        if (t < times[i]) --i;
        const double w = (t - times[i]) / (times[i + 1] - times[i]);
        return {omega1[i] + w * (omega1[i + 1] - omega1[i]),
                omega2[i] + w * (omega2[i + 1] - omega2[i])};
    }

    double gap_at(std::size_t i) const { return std::hypot(omega1[i], omega2[i]); }

    double peak_gap() const {
        double g = 0.0;
        for (std::size_t i = 0; i < size(); ++i) g = std::max(g, gap_at(i));
        return g;
    }
};

/// Uniform sampling of a closed-form family.
inline PulseSchedule discretize(const ProtocolFamily& family, std::size_t n_samples) {
    family.validate();
    if (n_samples < 2) throw invalid_input_error("discretize: need at least 2 samples");
    if (family.tag == ProtocolTag::NumericalUnconstrained)
        throw missing_solution_error("discretize: NumericalUnconstrained requires a solver schedule");

    PulseSchedule s;
    s.family = family;
    s.times.resize(n_samples);
    s.omega1.resize(n_samples);
    s.omega2.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(n_samples - 1);
        const double t = family.tau * frac;
        const Envelope e = eval_family(family, t);
        s.times[i] = t;
        s.omega1[i] = e.omega1;
        s.omega2[i] = e.omega2;
    }
    s.check_grid();
    s.validate_mode_boundaries();
    return s;
}

/// Resampling of a solved NumericalUnconstrained schedule onto n_samples.
inline PulseSchedule discretize(const ProtocolFamily& family, std::size_t n_samples,
                                const PulseSchedule& solved) {
    family.validate();
    if (n_samples < 2) throw invalid_input_error("discretize: need at least 2 samples");
    if (family.tag != ProtocolTag::NumericalUnconstrained)
        throw invalid_input_error("discretize: solver schedule only applies to NumericalUnconstrained");
    if (solved.family.tag != ProtocolTag::NumericalUnconstrained ||
        solved.family.mode != family.mode)
        throw invalid_input_error("discretize: attached solution does not match the family");

    PulseSchedule s;
    s.family = family;
    s.times.resize(n_samples);
    s.omega1.resize(n_samples);
    s.omega2.resize(n_samples);
    const double amp = family.omega_max / solved.family.omega_max;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(n_samples - 1);
        // The EL system is invariant under time rescaling, so the solved
        // dimensionless profile transfers to any tau.
        const Envelope e = solved.at(solved.tau() * frac);
        s.times[i] = family.tau * frac;
        s.omega1[i] = e.omega1 * amp;
        s.omega2[i] = e.omega2 * amp;
    }
    s.check_grid();
    s.validate_mode_boundaries();
    return s;
}

inline constexpr std::size_t default_n_samples = 2001;

} // namespace qbat
