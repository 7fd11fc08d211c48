#pragma once

// Adiabatic-time variational machinery: the Lagrangian
//     L = (dw1^2 + dw2^2) / (w1^2 + w2^2)^2,
// its action over a schedule, pointwise Euler-Lagrange residuals, a
// relaxation solver for the unconstrained two-point boundary problem, and a
// Fourier-mode second-derivative (criticality) test.
//
// The EL system implemented here is the stationarity condition of L (derived
// by hand and verified by the finite-variation checks in the tests):
//     (w1^2+w2^2) ddw1 = 2 [ 2 w2 dw1 dw2 + w1 (dw1^2 - dw2^2) ]
//     (w1^2+w2^2) ddw2 = 2 [ 2 w1 dw1 dw2 - w2 (dw1^2 - dw2^2) ]
// It is invariant under amplitude scaling (w -> c w) and time rescaling, which
// the solver exploits: it works in dimensionless units and rescales afterwards
// so the peak gap equals omega_max.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "qbat/pulses.hpp"

namespace qbat {

/// Pointwise Lagrangian value; throws singular_gap_error at zero gap.
inline double lagrangian(double w1, double w2, double dw1, double dw2) {
    const double gap2 = w1 * w1 + w2 * w2;
    if (!(gap2 > 0.0)) throw singular_gap_error("lagrangian: zero drive gap");
    return (dw1 * dw1 + dw2 * dw2) / (gap2 * gap2);
}

struct AdiabaticFunctional {
    double value = 0.0;  // time-rescaled action, >= 0
    PulseSchedule schedule;
};

namespace detail {

// Second-order first derivatives on a uniform grid (one-sided at the ends).
inline std::vector<double> ddt(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    std::vector<double> d(n);
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    return d;
}

// Second-order second derivatives (4-point one-sided at the ends).
inline std::vector<double> d2dt2(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    std::vector<double> d(n);
    const double h2 = h * h;
    d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
    d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    return d;
}

} // namespace detail

/// Trapezoidal quadrature of L over the schedule grid; derivatives estimated
/// by central differences (one-sided at the endpoints).
inline AdiabaticFunctional functional_time(const PulseSchedule& schedule) {
    if (schedule.size() < 3)
        throw invalid_input_error("functional_time: need at least 3 samples");
    const double h = schedule.grid_step();
    for (std::size_t i = 0; i < schedule.size(); ++i)
        if (!(schedule.gap_at(i) > 0.0))
            throw singular_gap_error("functional_time: singular gap at grid index " +
                                     std::to_string(i));
    const auto d1 = detail::ddt(schedule.omega1, h);
    const auto d2 = detail::ddt(schedule.omega2, h);
    double acc = 0.0;
    double prev = lagrangian(schedule.omega1[0], schedule.omega2[0], d1[0], d2[0]);
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        const double cur = lagrangian(schedule.omega1[i], schedule.omega2[i], d1[i], d2[i]);
        acc += 0.5 * h * (prev + cur);
        prev = cur;
    }
    return {acc, schedule};
}

struct ElResidual {
    std::vector<double> r1;
    std::vector<double> r2;
};

/// Pointwise residuals of the EL system with finite-difference derivatives.
inline ElResidual el_residual(const PulseSchedule& schedule) {
    if (schedule.size() < 5) throw invalid_input_error("el_residual: need at least 5 samples");
    const double h = schedule.grid_step();
    const auto& w1 = schedule.omega1;
    const auto& w2 = schedule.omega2;
    const auto d1 = detail::ddt(w1, h);
    const auto d2 = detail::ddt(w2, h);
    const auto dd1 = detail::d2dt2(w1, h);
    const auto dd2 = detail::d2dt2(w2, h);
    ElResidual out;
    out.r1.resize(schedule.size());
    out.r2.resize(schedule.size());
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const double gap2 = w1[i] * w1[i] + w2[i] * w2[i];
        const double kin = d1[i] * d1[i] - d2[i] * d2[i];
        out.r1[i] = gap2 * dd1[i] - 2.0 * (2.0 * w2[i] * d1[i] * d2[i] + w1[i] * kin);
        out.r2[i] = gap2 * dd2[i] - 2.0 * (2.0 * w1[i] * d1[i] * d2[i] - w2[i] * kin);
    }
    return out;
}

/// Residual projected onto the linear constraint w1 + w2 = const.
inline std::vector<double> el_residual_linear_projected(const PulseSchedule& schedule) {
    const ElResidual r = el_residual(schedule);
    std::vector<double> out(r.r1.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = r.r1[i] - r.r2[i];
    return out;
}

/// Residual projected onto the quadratic constraint w1^2 + w2^2 = const.
inline std::vector<double> el_residual_quadratic_projected(const PulseSchedule& schedule) {
    const ElResidual r = el_residual(schedule);
    std::vector<double> out(r.r1.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = schedule.omega2[i] * r.r1[i] - schedule.omega1[i] * r.r2[i];
    return out;
}

// ---------------------------------------------------------------------------
// Unconstrained boundary-value solver (relaxation + damped Newton)
// ---------------------------------------------------------------------------

struct UnconstrainedSolveReport {
    PulseSchedule schedule;
    std::vector<double> residual_history;  // max-norm per Newton iteration
    double final_residual = 0.0;           // dimensionless discrete residual
    int iterations = 0;
};

namespace detail {

struct Block2 {
    double a = 0, b = 0, c = 0, d = 0;  // [[a, b], [c, d]]

    Block2 inverse() const {
        const double det = a * d - b * c;
        if (det == 0.0) throw convergence_error("solve_unconstrained: singular Newton block");
        const double inv = 1.0 / det;
        return {d * inv, -b * inv, -c * inv, a * inv};
    }
};

inline Block2 mul(const Block2& x, const Block2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c,
            x.c * y.b + x.d * y.d};
}
inline std::array<double, 2> mul(const Block2& x, const std::array<double, 2>& v) {
    return {x.a * v[0] + x.b * v[1], x.c * v[0] + x.d * v[1]};
}
inline Block2 sub(const Block2& x, const Block2& y) {
    return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d};
}

// Discrete EL residual on the dimensionless grid with fixed boundary nodes.
inline void el_discrete_residual(const std::vector<double>& x1, const std::vector<double>& x2,
                                 double h, std::vector<double>& f) {
    const std::size_t n = x1.size();
    f.assign(2 * (n - 2), 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double d1 = (x1[i + 1] - x1[i - 1]) / (2.0 * h);
        const double d2 = (x2[i + 1] - x2[i - 1]) / (2.0 * h);
        const double dd1 = (x1[i + 1] - 2.0 * x1[i] + x1[i - 1]) / (h * h);
        const double dd2 = (x2[i + 1] - 2.0 * x2[i] + x2[i - 1]) / (h * h);
        const double gap2 = x1[i] * x1[i] + x2[i] * x2[i];
        const double kin = d1 * d1 - d2 * d2;
        f[2 * (i - 1)] = gap2 * dd1 - 2.0 * (2.0 * x2[i] * d1 * d2 + x1[i] * kin);
        f[2 * (i - 1) + 1] = gap2 * dd2 - 2.0 * (2.0 * x1[i] * d1 * d2 - x2[i] * kin);
    }
}

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace detail

/// Relaxation solution of the unconstrained EL system with the mode's
/// boundary values, rescaled so the peak gap equals omega_max.
inline UnconstrainedSolveReport solve_unconstrained(ChargeMode mode, double tau, double omega_max,
                                                    std::size_t n_grid = default_n_samples) {
    if (n_grid < 51) throw invalid_input_error("solve_unconstrained: n_grid must be at least 51");
    if (!(tau > 0.0) || !(omega_max > 0.0))
        throw invalid_input_error("solve_unconstrained: tau and omega_max must be positive");

    const std::size_t n = n_grid;
    const double h = 1.0 / static_cast<double>(n - 1);
    const bool stable = mode == ChargeMode::Stable;

    // Dimensionless unknowns with the sin/cos profile as the initial guess.
    std::vector<double> x1(n), x2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) * h;
        const double up = std::sin(M_PI * s / 2.0);
        const double down = std::cos(M_PI * s / 2.0);
        x1[i] = stable ? up : down;
        x2[i] = stable ? down : up;
    }
    x1.front() = stable ? 0.0 : 1.0;
    x2.front() = stable ? 1.0 : 0.0;
    x1.back() = stable ? 1.0 : 0.0;
    x2.back() = stable ? 0.0 : 1.0;

    const std::size_t m = n - 2;
    std::vector<double> f, f_trial;
    detail::el_discrete_residual(x1, x2, h, f);
    double fnorm = detail::max_abs(f);
    // Roundoff floor of the discrete residual scales as eps / h^2.
    const double floor = 64.0 * 2.2e-16 / (h * h);
    const double tol = std::max(1e-11 * std::max(1.0, fnorm), floor);

    UnconstrainedSolveReport report;
    report.residual_history.push_back(fnorm);

    std::vector<detail::Block2> blk_a(m), blk_b(m), blk_c(m);
    std::vector<detail::Block2> gauss_e(m);
    std::vector<std::array<double, 2>> gauss_y(m);
    std::vector<double> t1(n), t2(n);

    int iter = 0;
    for (; iter < 60 && fnorm > tol; ++iter) {
        // Assemble the block-tridiagonal Jacobian.
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double d1 = (x1[i + 1] - x1[i - 1]) / (2.0 * h);
            const double d2 = (x2[i + 1] - x2[i - 1]) / (2.0 * h);
            const double dd1 = (x1[i + 1] - 2.0 * x1[i] + x1[i - 1]) / (h * h);
            const double dd2 = (x2[i + 1] - 2.0 * x2[i] + x2[i - 1]) / (h * h);
            const double gap2 = x1[i] * x1[i] + x2[i] * x2[i];
            const double kin = d1 * d1 - d2 * d2;
            const double g = 2.0 * (x1[i] * d1 + x2[i] * d2);
            const double q = 2.0 * (x2[i] * d1 - x1[i] * d2);
            const double k = i - 1;

            blk_b[k] = {2.0 * x1[i] * dd1 - 2.0 * gap2 / (h * h) - 2.0 * kin,
                        2.0 * x2[i] * dd1 - 4.0 * d1 * d2,
                        2.0 * x1[i] * dd2 - 4.0 * d1 * d2,
                        2.0 * x2[i] * dd2 - 2.0 * gap2 / (h * h) + 2.0 * kin};
            blk_c[k] = {gap2 / (h * h) - g / h, -q / h, q / h, gap2 / (h * h) - g / h};
            blk_a[k] = {gap2 / (h * h) + g / h, q / h, -q / h, gap2 / (h * h) + g / h};
        }

        // Block-Thomas forward sweep on J delta = -f.
        detail::Block2 dk = blk_b[0];
        gauss_e[0] = detail::mul(dk.inverse(), blk_c[0]);
        gauss_y[0] = detail::mul(dk.inverse(), std::array<double, 2>{-f[0], -f[1]});
        for (std::size_t k = 1; k < m; ++k) {
            dk = detail::sub(blk_b[k], detail::mul(blk_a[k], gauss_e[k - 1]));
            const detail::Block2 dinv = dk.inverse();
            gauss_e[k] = detail::mul(dinv, blk_c[k]);
            const std::array<double, 2> ay = detail::mul(blk_a[k], gauss_y[k - 1]);
            gauss_y[k] = detail::mul(
                dinv, std::array<double, 2>{-f[2 * k] - ay[0], -f[2 * k + 1] - ay[1]});
        }
        std::vector<std::array<double, 2>> delta(m);
        delta[m - 1] = gauss_y[m - 1];
        for (std::size_t k = m - 1; k-- > 0;) {
            const std::array<double, 2> ed = detail::mul(gauss_e[k], delta[k + 1]);
            delta[k] = {gauss_y[k][0] - ed[0], gauss_y[k][1] - ed[1]};
        }

        // Backtracking line search on the residual max-norm.
        double lambda = 1.0;
        double trial_norm = fnorm;
        for (int half = 0; half < 25; ++half) {
            t1 = x1;
            t2 = x2;
            for (std::size_t k = 0; k < m; ++k) {
                t1[k + 1] += lambda * delta[k][0];
                t2[k + 1] += lambda * delta[k][1];
            }
            detail::el_discrete_residual(t1, t2, h, f_trial);
            trial_norm = detail::max_abs(f_trial);
            if (trial_norm < fnorm) break;
            lambda *= 0.5;
        }
        if (!(trial_norm < fnorm)) {
            if (fnorm <= 1e-6) break;  // stuck on the roundoff floor, good enough
            throw convergence_error("solve_unconstrained: line search stalled at residual " +
                                    std::to_string(fnorm));
        }
        x1 = t1;
        x2 = t2;
        f = f_trial;
        fnorm = trial_norm;
        report.residual_history.push_back(fnorm);
    }
    if (fnorm > tol)
        throw convergence_error("solve_unconstrained: no convergence, residual " +
                                std::to_string(fnorm));

    // Amplitude scaling: the EL system is homogeneous of degree three in the
    // fields, so a pure rescale keeps it a solution. Pin the peak gap.
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, std::hypot(x1[i], x2[i]));
    const double amp = omega_max / peak;

    PulseSchedule s;
    s.family = {ProtocolTag::NumericalUnconstrained, omega_max, tau, mode};
    s.times.resize(n);
    s.omega1.resize(n);
    s.omega2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.times[i] = tau * (static_cast<double>(i) / static_cast<double>(n - 1));
        s.omega1[i] = amp * x1[i];
        s.omega2[i] = amp * x2[i];
    }
    s.check_grid();
    s.validate_mode_boundaries();

    report.schedule = std::move(s);
    report.final_residual = fnorm;
    report.iterations = iter;
    return report;
}

// ---------------------------------------------------------------------------
// Second-derivative (criticality) test
// ---------------------------------------------------------------------------

enum class Criticality { Minimum, Maximum, Saddle, Inconclusive };

inline const char* to_string(Criticality c) {
    switch (c) {
        case Criticality::Minimum: return "minimum";
        case Criticality::Maximum: return "maximum";
        case Criticality::Saddle: return "saddle";
        case Criticality::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct CriticalityVerdict {
    // lambda[j][n-1]: second variation along the single Fourier mode
    // eta_j = sin(n pi t / tau) in coordinate j.
    std::array<std::vector<double>, 2> lambda_terms;
    Criticality verdict = Criticality::Inconclusive;
};

namespace detail {

// Best normalized EL residual over the raw system and its two constrained
// projections; "critical for some constraint class" gate.
inline double normalized_criticality_residual(const PulseSchedule& schedule) {
    const double peak = schedule.peak_gap();
    const double rate = M_PI / schedule.tau();
    const double rscale = peak * peak * peak * rate * rate;
    const ElResidual r = el_residual(schedule);
    double raw = 0.0, lin = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < r.r1.size(); ++i) {
        raw = std::max(raw, std::max(std::abs(r.r1[i]), std::abs(r.r2[i])));
        lin = std::max(lin, std::abs(r.r1[i] - r.r2[i]));
        quad = std::max(quad,
                        std::abs(schedule.omega2[i] * r.r1[i] - schedule.omega1[i] * r.r2[i]) / peak);
    }
    return std::min({raw, lin, quad}) / rscale;
}

} // namespace detail

/// Fourier-mode second-derivative test along an EL solution. Each term is the
/// second variation for a single sine mode; the verdict aggregates signs with
/// tolerance 1e-9 * max |term|.
inline CriticalityVerdict second_derivative_test(const PulseSchedule& schedule, int n_modes) {
    if (n_modes < 1) throw invalid_input_error("second_derivative_test: n_modes must be >= 1");
    if (schedule.size() < 16)
        throw invalid_input_error("second_derivative_test: schedule grid too coarse");
    if (detail::normalized_criticality_residual(schedule) > 1e-3)
        throw not_critical_error(
            "second_derivative_test: schedule does not solve an EL system (residual above threshold)");

    const std::size_t n = schedule.size();
    const double h = schedule.grid_step();
    const double tau = schedule.tau();
    const auto d1 = detail::ddt(schedule.omega1, h);
    const auto d2 = detail::ddt(schedule.omega2, h);

    // Second partials of L along the solution, by central differences.
    const double peak = schedule.peak_gap();
    double dmax = peak / tau;
    for (std::size_t i = 0; i < n; ++i)
        dmax = std::max({dmax, std::abs(d1[i]), std::abs(d2[i])});
    const double hw = 1e-6 * peak;
    const double hd = 1e-6 * dmax;

    std::vector<double> xi_1[2], xi_2[2], xi_3[2];
    for (int j = 0; j < 2; ++j) {
        xi_1[j].resize(n);
        xi_2[j].resize(n);
        xi_3[j].resize(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double w1 = schedule.omega1[i], w2 = schedule.omega2[i];
        const double v1 = d1[i], v2 = d2[i];
        const double l0 = lagrangian(w1, w2, v1, v2);
        for (int j = 0; j < 2; ++j) {
            const auto lw = [&](double dw, double dv) {
                return j == 0 ? lagrangian(w1 + dw, w2, v1 + dv, v2)
                              : lagrangian(w1, w2 + dw, v1, v2 + dv);
            };
            xi_1[j][i] = (lw(hw, 0) - 2.0 * l0 + lw(-hw, 0)) / (hw * hw);
            xi_3[j][i] = (lw(0, hd) - 2.0 * l0 + lw(0, -hd)) / (hd * hd);
            xi_2[j][i] = 2.0 * (lw(hw, hd) - lw(hw, -hd) - lw(-hw, hd) + lw(-hw, -hd)) /
                         (4.0 * hw * hd);
        }
    }

    CriticalityVerdict out;
    for (int j = 0; j < 2; ++j) out.lambda_terms[j].resize(static_cast<std::size_t>(n_modes));
    for (int mode_n = 1; mode_n <= n_modes; ++mode_n) {
        const double k = static_cast<double>(mode_n) * M_PI / tau;
        for (int j = 0; j < 2; ++j) {
            double acc = 0.0;
            double prev = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double sn = std::sin(k * schedule.times[i]);
                const double cs = std::cos(k * schedule.times[i]);
                const double integrand =
                    xi_1[j][i] * sn * sn + xi_2[j][i] * k * sn * cs + xi_3[j][i] * k * k * cs * cs;
                if (i > 0) acc += 0.5 * h * (prev + integrand);
                prev = integrand;
            }
            out.lambda_terms[j][static_cast<std::size_t>(mode_n - 1)] = acc;
        }
    }

    double max_mag = 0.0;
    for (int j = 0; j < 2; ++j)
        for (double v : out.lambda_terms[j]) max_mag = std::max(max_mag, std::abs(v));
    const double tol = 1e-9 * max_mag;
    bool any_pos = false, any_neg = false, any_zero = false;
    for (int j = 0; j < 2; ++j)
        for (double v : out.lambda_terms[j]) {
            if (v > tol)
                any_pos = true;
            else if (v < -tol)
                any_neg = true;
            else
                any_zero = true;
        }
    if (any_pos && any_neg)
        out.verdict = Criticality::Saddle;
    else if (any_pos && !any_zero)
        out.verdict = Criticality::Minimum;
    else if (any_neg && !any_zero)
        out.verdict = Criticality::Maximum;
    else
        out.verdict = Criticality::Inconclusive;
    return out;
}

} // namespace qbat
