#pragma once

// Ergotropy and passive states, the closed-form self-discharge law of the
// cascade, population crossing times, and charging figures of merit.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qbat/dynamics.hpp"

namespace qbat {

namespace detail {

inline std::array<double, 3> diagonal_ascending(const Mat3& h0) {
    double off = 0.0;
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c)
            if (r != c) off = std::max(off, std::abs(h0(r, c)));
    if (off > 1e-12 * std::max(1.0, h0.max_abs()))
        throw invalid_input_error("ergotropy: reference Hamiltonian must be diagonal");
    const std::array<double, 3> e = {h0(0, 0).real(), h0(1, 1).real(), h0(2, 2).real()};
    if (!(e[0] <= e[1] && e[1] <= e[2]))
        throw invalid_input_error("ergotropy: reference energies must be ascending");
    return e;
}

} // namespace detail

/// Maximum unitarily extractable work: Tr[rho H0] minus the passive energy
/// (state eigenvalues sorted descending against ascending level energies).
/// Same units as H0; tiny negative rounding is clipped to zero.
inline double ergotropy(const DensityMatrix& state, const Mat3& h0) {
    const auto e = detail::diagonal_ascending(h0);
    const EigenSystem es = eig_hermitian(state.entries);
    // es.values ascending; pair descending populations with ascending energies.
    const double passive = es.values[2] * e[0] + es.values[1] * e[1] + es.values[0] * e[2];
    double value = instantaneous_energy(state, h0) - passive;
    if (value < 0.0) {
        if (value < -1e-12 * std::max(1.0, e[2]))
            throw invalid_input_error("ergotropy: negative beyond rounding tolerance");
        value = 0.0;
    }
    return value;
}

/// The zero-ergotropy state with the same spectrum: diagonal in the energy
/// basis, populations descending in energy. Ties keep the lower-energy slot.
inline DensityMatrix passive_state(const DensityMatrix& state, const Mat3& h0) {
    detail::diagonal_ascending(h0);
    const EigenSystem es = eig_hermitian(state.entries);
    const auto clip = [](double p) { return std::clamp(p, 0.0, 1.0); };
    Mat3 d = Mat3::diag(clip(es.values[2]), clip(es.values[1]), clip(es.values[0]));
    const double tr = d.trace().real();
    d = (1.0 / tr) * d;
    return DensityMatrix::from_matrix(d);
}

/// Closed-form ergotropy of the free-decay trajectory started from the fully
/// charged state. Evaluates the piecewise law for the diagonal state with
/// populations from analytic_populations: one branch per population ordering,
/// each the sorted-spectrum ergotropy in closed form.
inline double self_discharge_ergotropy(double t, const DecayRates& rates,
                                       const BatteryLevels& levels) {
    if (t < 0.0) throw domain_error("self_discharge_ergotropy: t must be non-negative");
    levels.validate();
    const auto p = analytic_populations(t, rates);
    const double p0 = p[0], p1 = p[1], p2 = p[2];
    const auto e = levels.energies();
    const double e1 = e[1], e2 = e[2];

    double value = 0.0;
    if (p2 >= p1 && p1 >= p0)
        value = e2 * (p2 - p0);
    else if (p2 >= p0 && p0 >= p1)
        value = e1 * (p1 - p0) + e2 * (p2 - p1);
    else if (p0 >= p2 && p2 >= p1)
        value = (p2 - p1) * (e2 - e1);
    else if (p0 >= p1 && p1 >= p2)
        value = 0.0;
    else if (p1 >= p2 && p2 >= p0)
        value = e1 * (p1 - p2) + e2 * (p2 - p0);
    else  // p1 >= p0 >= p2
        value = e1 * (p1 - p0);
    return std::max(value, 0.0);
}

// ---------------------------------------------------------------------------
// Crossing times
// ---------------------------------------------------------------------------

enum class PopulationPair { P2P1, P2P0, P1P0 };

inline const char* to_string(PopulationPair p) {
    switch (p) {
        case PopulationPair::P2P1: return "rho2=rho1";
        case PopulationPair::P2P0: return "rho2=rho0";
        case PopulationPair::P1P0: return "rho1=rho0";
    }
    return "?";
}

struct Crossing {
    PopulationPair pair;
    double time = 0.0;
};

namespace detail {

inline double population_difference(double t, const DecayRates& r, PopulationPair pair) {
    const auto p = analytic_populations(t, r);
    switch (pair) {
        case PopulationPair::P2P1: return p[2] - p[1];
        case PopulationPair::P2P0: return p[2] - p[0];
        case PopulationPair::P1P0: return p[1] - p[0];
    }
    return 0.0;
}

inline double bisect_crossing(const DecayRates& r, PopulationPair pair, double t_max) {
    // Scan for the sign change, then bisect to 1e-12 relative. The scan
    // starts just past zero: p1 and p0 both vanish at t = 0, which is not a
    // branch switch.
    const int n_scan = 4096;
    double lo = 1e-9 * t_max;
    double flo = population_difference(lo, r, pair);
    double hi = 0.0;
    bool bracketed = false;
    for (int i = 1; i <= n_scan; ++i) {
        const double t = t_max * static_cast<double>(i) / n_scan;
        const double f = population_difference(t, r, pair);
        if ((flo > 0.0) != (f > 0.0)) {
            hi = t;
            bracketed = true;
            break;
        }
        lo = t;
        flo = f;
    }
    if (!bracketed)
        throw no_crossing_error(std::string("crossing_times: no root for ") + to_string(pair) +
                                " inside the search window");
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double f = population_difference(mid, r, pair);
        if ((flo > 0.0) == (f > 0.0)) {
            lo = mid;
            flo = f;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-12 * hi) break;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

/// The three population crossings of the free-decay trajectory, in the order
/// the ergotropy law switches branch (ascending time).
inline std::array<Crossing, 3> crossing_times(const DecayRates& rates) {
    rates.validate();
    if (rates.gamma10 == rates.gamma21)
        throw invalid_input_error("crossing_times: degenerate rates not supported");
    const double g_min = std::min(rates.gamma10, rates.gamma21);
    if (!(g_min > 0.0)) throw invalid_input_error("crossing_times: rates must be positive");
    const double t_max = 10.0 / g_min;

    std::array<Crossing, 3> out = {
        Crossing{PopulationPair::P2P1, detail::bisect_crossing(rates, PopulationPair::P2P1, t_max)},
        Crossing{PopulationPair::P2P0, detail::bisect_crossing(rates, PopulationPair::P2P0, t_max)},
        Crossing{PopulationPair::P1P0, detail::bisect_crossing(rates, PopulationPair::P1P0, t_max)}};
    std::sort(out.begin(), out.end(),
              [](const Crossing& a, const Crossing& b) { return a.time < b.time; });
    return out;
}

// ---------------------------------------------------------------------------
// Charging figures of merit
// ---------------------------------------------------------------------------

struct ErgotropyTrace {
    std::vector<double> times;      // s
    std::vector<double> ergotropy;  // micro-eV
    double e_max = 0.0;             // micro-eV normalization

    void validate() const {
        if (times.empty() || times.size() != ergotropy.size())
            throw invalid_input_error("ErgotropyTrace: empty or mismatched arrays");
        if (!(e_max > 0.0)) throw invalid_input_error("ErgotropyTrace: e_max must be positive");
    }
};

struct ChargingMetrics {
    double tau_c = 0.0;       // s, first time the threshold fraction is reached
    double mean_power = 0.0;  // micro-eV / s
    double threshold = 0.0;
};

/// First threshold crossing of the trace (linear interpolation between
/// samples); mean power is threshold * e_max / tau_c.
inline ChargingMetrics charging_metrics(const ErgotropyTrace& trace, double threshold) {
    trace.validate();
    if (!(threshold > 0.0) || !(threshold <= 1.0))
        throw invalid_input_error("charging_metrics: threshold must be in (0, 1]");
    const double target = threshold * trace.e_max;

    double tau_c = -1.0;
    if (trace.ergotropy.front() >= target) {
        tau_c = trace.times.front();
    } else {
        for (std::size_t i = 1; i < trace.times.size(); ++i) {
            if (trace.ergotropy[i] >= target) {
                const double de = trace.ergotropy[i] - trace.ergotropy[i - 1];
                const double frac = de == 0.0 ? 1.0 : (target - trace.ergotropy[i - 1]) / de;
                tau_c = trace.times[i - 1] + frac * (trace.times[i] - trace.times[i - 1]);
                break;
            }
        }
    }
    if (tau_c < 0.0)
        throw not_charged_error("charging_metrics: trace never reaches the threshold fraction");
    return {tau_c, target / tau_c, threshold};
}

} // namespace qbat
