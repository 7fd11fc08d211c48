#pragma once

// Qutrit state types, the battery Hamiltonians in the resonant interaction
// picture, and the dark/bright eigenstates of the drive.
//
// Unit system: hbar = 1, all energies in rad/s. Conversion to micro-eV is done
// only at the reporting boundary.

#include <cmath>
#include <tuple>

#include "qbat/linalg.hpp"

namespace qbat {

inline constexpr double hbar_ev_s = 6.582119569e-16;  // eV * s
inline constexpr double two_pi = 6.283185307179586476925286766559;

inline double omega_to_microev(double omega_rad_s) { return omega_rad_s * hbar_ev_s * 1e6; }
inline double microev_to_omega(double e_uev) { return e_uev / (hbar_ev_s * 1e6); }

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Transition frequencies of the three-level battery, rad/s.
struct BatteryLevels {
    double omega01 = 0.0;
    double omega12 = 0.0;

    void validate() const {
        if (!(omega01 > 0.0) || !std::isfinite(omega01) || !(omega12 > 0.0) ||
            !std::isfinite(omega12))
            throw invalid_input_error("BatteryLevels: transition frequencies must be positive and finite");
    }

    // Level energies are cumulative: {0, w01, w01 + w12}.
    std::array<double, 3> energies() const { return {0.0, omega01, omega01 + omega12}; }
    double max_energy() const { return omega01 + omega12; }
};

struct PureState {
    Vec3 amplitudes;

    explicit PureState(const Vec3& a) : amplitudes(a) {
        if (std::abs(a.norm2() - 1.0) > 1e-12)
            throw invalid_input_error("PureState: squared norm must be 1 within 1e-12");
    }

    static PureState normalized(const Vec3& a) {
        const double n = a.norm();
        if (!(n > 0.0)) throw invalid_input_error("PureState: cannot normalize the zero vector");
        return PureState((1.0 / n) * a);
    }

    static PureState basis(std::size_t level) {
        if (level > 2) throw invalid_input_error("PureState: level index out of range");
        Vec3 a;
        a[level] = 1.0;
        return PureState(a);
    }
};

struct DensityMatrix {
    Mat3 entries;

    /// Validating constructor; eig_floor is the positivity tolerance
    /// (-1e-10 for exact states, relaxed by integrators to their own budget).
    static DensityMatrix from_matrix(const Mat3& m, double eig_floor = -1e-10) {
        if (hermiticity_deviation(m) > 1e-12)
            throw invalid_input_error("DensityMatrix: not Hermitian within 1e-12");
        if (std::abs(m.trace().real() - 1.0) > 1e-12 || std::abs(m.trace().imag()) > 1e-12)
            throw invalid_input_error("DensityMatrix: trace must be 1 within 1e-12");
        const EigenSystem es = eig_hermitian(m);
        if (es.values[0] < eig_floor)
            throw invalid_input_error("DensityMatrix: minimum eigenvalue below tolerance");
        DensityMatrix out;
        out.entries = m;
        return out;
    }

    static DensityMatrix pure(const PureState& psi) {
        DensityMatrix out;
        out.entries = outer(psi.amplitudes, psi.amplitudes);
        return out;
    }

    static DensityMatrix maximally_mixed() {
        DensityMatrix out;
        out.entries = (1.0 / 3.0) * Mat3::identity();
        return out;
    }

    static DensityMatrix level(std::size_t n) { return pure(PureState::basis(n)); }

    std::array<double, 3> populations() const {
        return {entries(0, 0).real(), entries(1, 1).real(), entries(2, 2).real()};
    }

private:
    DensityMatrix() = default;
};

// ---------------------------------------------------------------------------
// Hamiltonians
// ---------------------------------------------------------------------------

/// diag(0, w01, w01 + w12) in units hbar = 1.
inline Mat3 build_bare_hamiltonian(const BatteryLevels& levels) {
    levels.validate();
    const auto e = levels.energies();
    return Mat3::diag(e[0], e[1], e[2]);
}

/// Resonant drive: Omega1 couples |0>-|1>, Omega2 couples |1>-|2>.
inline Mat3 build_drive_hamiltonian(double omega1, double omega2) {
    if (!std::isfinite(omega1) || !std::isfinite(omega2))
        throw invalid_input_error("build_drive_hamiltonian: fields must be finite");
    Mat3 h;
    h(0, 1) = omega1;
    h(1, 0) = omega1;
    h(1, 2) = omega2;
    h(2, 1) = omega2;
    return h;
}

/// Instantaneous gap between adjacent drive eigenvalues.
inline double drive_gap(double omega1, double omega2) { return std::hypot(omega1, omega2); }

struct DarkBrightStates {
    PureState dark;          // eigenvalue 0
    PureState bright_plus;   // +gap
    PureState bright_minus;  // -gap
};

/// Closed-form drive eigenstates. dark = (O2|0> - O1|2>)/gap,
/// bright+- = (O1|0> +- gap|1> + O2|2>)/(sqrt(2) gap).
inline DarkBrightStates dark_bright_states(double omega1, double omega2) {
    const double gap = drive_gap(omega1, omega2);
    if (gap == 0.0)
        throw degenerate_eigensystem_error("dark_bright_states: zero field makes the spectrum degenerate");
    const double inv = 1.0 / gap;
    const double inv2 = 1.0 / (std::sqrt(2.0) * gap);
    Vec3 dark{omega2 * inv, 0.0, -omega1 * inv};
    Vec3 bp{omega1 * inv2, 1.0 / std::sqrt(2.0), omega2 * inv2};
    Vec3 bm{omega1 * inv2, -1.0 / std::sqrt(2.0), omega2 * inv2};
    return {PureState(dark), PureState(bp), PureState(bm)};
}

// ---------------------------------------------------------------------------
// State metrics
// ---------------------------------------------------------------------------

namespace detail {
inline Mat3 sqrt_psd(const Mat3& m) {
    const EigenSystem es = eig_hermitian(m);
    Mat3 out;
    for (std::size_t k = 0; k < 3; ++k) {
        const double lam = std::max(es.values[k], 0.0);
        out = out + std::sqrt(lam) * outer(es.vectors[k], es.vectors[k]);
    }
    return out;
}
} // namespace detail

/// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
inline double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
    const Mat3 sr = detail::sqrt_psd(rho.entries);
    const Mat3 inner_m = hermitize(sr * sigma.entries * sr);
    const EigenSystem es = eig_hermitian(inner_m);
    double t = 0.0;
    for (double lam : es.values) t += std::sqrt(std::max(lam, 0.0));
    return t * t;
}

inline double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
    const EigenSystem es = eig_hermitian(rho.entries - sigma.entries);
    double s = 0.0;
    for (double lam : es.values) s += std::abs(lam);
    return 0.5 * s;
}

} // namespace qbat
