#pragma once

// Exponential decay models for ergotropy traces: damped Gauss-Newton fits of
// a e^{-t/tau} and a1 e^{-t/tau1} + a2 e^{-t/tau2}, and an AIC-based verdict
// on whether one time constant suffices.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qbat/ergotropy.hpp"

namespace qbat {

struct ExpFit {
    std::vector<double> amplitudes;      // micro-eV, one or two entries
    std::vector<double> time_constants;  // s, ascending for double fits
    double rss = 0.0;                    // residual sum of squares
    int n_params = 0;                    // 2 or 4
    bool degenerate = false;             // hit the time-constant cap or a collapsed pair
};

enum class DischargeModel { Ohmic, Supercapacitor };

inline const char* to_string(DischargeModel m) {
    return m == DischargeModel::Ohmic ? "ohmic" : "supercapacitor";
}

struct DischargeVerdict {
    DischargeModel model = DischargeModel::Ohmic;
    double evidence = 0.0;  // AIC(single) - AIC(double); decisive at >= 10
    ExpFit single_fit;
    ExpFit double_fit;
};

namespace detail {

inline double rss_of(const std::vector<double>& t, const std::vector<double>& y,
                     const std::vector<double>& amp, const std::vector<double>& tc) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double model = 0.0;
        for (std::size_t k = 0; k < amp.size(); ++k) model += amp[k] * std::exp(-t[i] / tc[k]);
        const double r = y[i] - model;
        s += r * r;
    }
    return s;
}

// Linear least squares for the amplitudes at fixed time constants.
inline std::vector<double> amplitudes_ls(const std::vector<double>& t, const std::vector<double>& y,
                                         const std::vector<double>& tc) {
    const std::size_t k = tc.size();
    std::vector<double> g(k * k, 0.0), b(k, 0.0);
    for (std::size_t i = 0; i < t.size(); ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double ep = std::exp(-t[i] / tc[p]);
            b[p] += ep * y[i];
            for (std::size_t q = 0; q < k; ++q) g[p * k + q] += ep * std::exp(-t[i] / tc[q]);
        }
    // Tiny ridge keeps collapsed pairs solvable.
    for (std::size_t p = 0; p < k; ++p) g[p * k + p] += 1e-14 * g[p * k + p] + 1e-300;
    if (k == 1) return {b[0] / g[0]};
    const double det = g[0] * g[3] - g[1] * g[2];
    if (det == 0.0) return {0.0, 0.0};
    return {(b[0] * g[3] - b[1] * g[1]) / det, (g[0] * b[1] - g[2] * b[0]) / det};
}

struct GnResult {
    std::vector<double> amp, tc;
    double rss = 0.0;
    bool degenerate = false;
    bool converged = false;
};

// Damped Gauss-Newton on (amplitudes, time constants) with a time-constant
// cap; converges on a relative parameter step below 1e-10.
inline GnResult gauss_newton_exp(const std::vector<double>& t, const std::vector<double>& y,
                                 std::vector<double> amp, std::vector<double> tc, int max_iter) {
    const std::size_t k = amp.size();
    const std::size_t np = 2 * k;
    const double span = t.back() - t.front();
    const double tc_cap = 1e6 * span;
    const double tc_floor = 1e-9 * span;

    GnResult out;
    double rss = rss_of(t, y, amp, tc);
    int cap_hits = 0;
    for (int iter = 0; iter < max_iter; ++iter) {
        // Normal equations J^T J dx = J^T r.
        std::vector<double> jtj(np * np, 0.0), jtr(np, 0.0);
        for (std::size_t i = 0; i < t.size(); ++i) {
            double model = 0.0;
            std::vector<double> row(np);
            for (std::size_t p = 0; p < k; ++p) {
                const double e = std::exp(-t[i] / tc[p]);
                model += amp[p] * e;
                row[2 * p] = e;                                        // d/d amp
                row[2 * p + 1] = amp[p] * e * t[i] / (tc[p] * tc[p]);  // d/d tau
            }
            const double r = y[i] - model;
            for (std::size_t p = 0; p < np; ++p) {
                jtr[p] += row[p] * r;
                for (std::size_t q = 0; q < np; ++q) jtj[p * np + q] += row[p] * row[q];
            }
        }
        // Marquardt-scaled ridge: relative per column, so the wildly different
        // amplitude and time-constant curvatures stay balanced.
        double trace = 0.0;
        for (std::size_t p = 0; p < np; ++p) trace += jtj[p * np + p];
        for (std::size_t p = 0; p < np; ++p)
            jtj[p * np + p] += 1e-10 * jtj[p * np + p] + 1e-300 * trace;

        // Solve the tiny dense system by Gaussian elimination.
        std::vector<double> m = jtj, rhs = jtr, dx(np, 0.0);
        for (std::size_t col = 0; col < np; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < np; ++r)
                if (std::abs(m[r * np + col]) > std::abs(m[piv * np + col])) piv = r;
            for (std::size_t c = 0; c < np; ++c) std::swap(m[piv * np + c], m[col * np + c]);
            std::swap(rhs[piv], rhs[col]);
            if (m[col * np + col] == 0.0) break;
            for (std::size_t r = col + 1; r < np; ++r) {
                const double f = m[r * np + col] / m[col * np + col];
                for (std::size_t c = col; c < np; ++c) m[r * np + c] -= f * m[col * np + c];
                rhs[r] -= f * rhs[col];
            }
        }
        for (std::size_t r = np; r-- > 0;) {
            double s = rhs[r];
            for (std::size_t c = r + 1; c < np; ++c) s -= m[r * np + c] * dx[c];
            dx[r] = m[r * np + r] == 0.0 ? 0.0 : s / m[r * np + r];
        }

        // Backtracking on the rss.
        double lambda = 1.0;
        std::vector<double> amp_t = amp, tc_t = tc;
        double rss_t = rss;
        bool improved = false;
        for (int half = 0; half < 30; ++half) {
            for (std::size_t p = 0; p < k; ++p) {
                amp_t[p] = amp[p] + lambda * dx[2 * p];
                tc_t[p] = std::clamp(tc[p] + lambda * dx[2 * p + 1], tc_floor, tc_cap);
            }
            rss_t = rss_of(t, y, amp_t, tc_t);
            if (rss_t <= rss) {
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved) {
            out.converged = true;  // local floor
            break;
        }

        double step = 0.0;
        bool at_cap = false;
        for (std::size_t p = 0; p < k; ++p) {
            step = std::max(step, std::abs(amp_t[p] - amp[p]) /
                                      std::max(std::abs(amp_t[p]), 1e-30));
            step = std::max(step, std::abs(tc_t[p] - tc[p]) / tc_t[p]);
            if (tc_t[p] >= tc_cap * (1.0 - 1e-12)) at_cap = true;
        }
        const double gain = rss - rss_t;
        amp = amp_t;
        tc = tc_t;
        rss = rss_t;
        if (at_cap && ++cap_hits >= 2) {
            out.converged = true;
            break;
        }
        // Primary criterion: relative parameter step below 1e-10. Secondary:
        // the rss has stopped moving at floating precision.
        if (step < 1e-10 || gain <= 1e-14 * std::max(rss, 1e-300)) {
            out.converged = true;
            break;
        }
    }
    out.amp = amp;
    out.tc = tc;
    out.rss = rss;
    for (double c : tc)
        if (c >= tc_cap * (1.0 - 1e-9)) out.degenerate = true;
    return out;
}

inline void check_trace_for_fit(const ErgotropyTrace& trace, std::size_t min_samples) {
    trace.validate();
    if (trace.times.size() < min_samples)
        throw invalid_input_error("decay fit: need at least " + std::to_string(min_samples) +
                                  " samples");
    for (double v : trace.ergotropy)
        if (!(v > 0.0))
            throw invalid_input_error("decay fit: trace values must be positive");
}

} // namespace detail

/// The leading strictly-positive samples of a trace. The closed-form
/// self-discharge hits exact zero after its last crossing; fits take the
/// positive prefix.
inline ErgotropyTrace positive_prefix(const ErgotropyTrace& trace) {
    trace.validate();
    ErgotropyTrace out;
    out.e_max = trace.e_max;
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        if (!(trace.ergotropy[i] > 0.0)) break;
        out.times.push_back(trace.times[i]);
        out.ergotropy.push_back(trace.ergotropy[i]);
    }
    return out;
}

/// Single-exponential fit, initialized from a log-linear regression.
inline ExpFit fit_single_exp(const ErgotropyTrace& trace) {
    detail::check_trace_for_fit(trace, 8);
    const auto& t = trace.times;
    const auto& y = trace.ergotropy;

    // log y = log a - t / tau
    const std::size_t n = t.size();
    double st = 0, sl = 0, stt = 0, stl = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double l = std::log(y[i]);
        st += t[i];
        sl += l;
        stt += t[i] * t[i];
        stl += t[i] * l;
    }
    const double denom = n * stt - st * st;
    const double slope = denom == 0.0 ? 0.0 : (n * stl - st * sl) / denom;
    const double intercept = (sl - slope * st) / n;
    const double span = t.back() - t.front();
    double tau0 = slope < 0.0 ? -1.0 / slope : 1e6 * span;
    tau0 = std::clamp(tau0, 1e-9 * span, 1e6 * span);

    const auto res = detail::gauss_newton_exp(t, y, {std::exp(intercept)}, {tau0}, 200);
    if (!res.converged)
        throw fit_error("fit_single_exp: no convergence after 200 iterations, rss " +
                        std::to_string(res.rss));
    return {res.amp, res.tc, res.rss, 2, res.degenerate};
}

/// Double-exponential fit from a deterministic multi-start grid around the
/// single-exponential time constant; returns the best residual.
inline ExpFit fit_double_exp(const ErgotropyTrace& trace) {
    detail::check_trace_for_fit(trace, 12);
    const auto& t = trace.times;
    const auto& y = trace.ergotropy;

    const ExpFit single = fit_single_exp(trace);
    const double ts = single.time_constants[0];

    // Best residual over the deterministic start grid. A start that runs out
    // of iterations still counts with its final state (collapsing pairs crawl
    // along a degenerate valley); only non-finite results are discarded.
    ExpFit best;
    best.rss = std::numeric_limits<double>::infinity();
    const std::array<std::pair<double, double>, 5> starts = {{
        {ts / 3.0, 3.0 * ts},
        {ts / 10.0, ts},
        {ts, 10.0 * ts},
        {ts / 2.0, 2.0 * ts},
        {ts, 3.0 * ts},  // nested continuation of the single fit
    }};
    for (const auto& [t1, t2] : starts) {
        std::vector<double> tc = {t1, t2};
        std::vector<double> amp = detail::amplitudes_ls(t, y, tc);
        const auto res = detail::gauss_newton_exp(t, y, amp, tc, 200);
        if (!std::isfinite(res.rss)) continue;
        if (res.rss < best.rss) {
            best.amplitudes = res.amp;
            best.time_constants = res.tc;
            best.rss = res.rss;
            best.degenerate = res.degenerate;
        }
    }
    if (!std::isfinite(best.rss)) throw fit_error("fit_double_exp: every start failed");
    best.n_params = 4;
    if (best.time_constants[0] > best.time_constants[1]) {
        std::swap(best.time_constants[0], best.time_constants[1]);
        std::swap(best.amplitudes[0], best.amplitudes[1]);
    }
    if (best.time_constants[1] - best.time_constants[0] < 1e-6 * best.time_constants[1])
        best.degenerate = true;
    return best;
}

/// AIC with a precision floor so that near-perfect fits stay comparable.
inline double aic(const ExpFit& fit, std::size_t n_samples, double y_scale) {
    const double floor = static_cast<double>(n_samples) * std::pow(1e-12 * y_scale, 2);
    const double rss = std::max(fit.rss, floor);
    return static_cast<double>(n_samples) * std::log(rss / static_cast<double>(n_samples)) +
           2.0 * fit.n_params;
}

/// Model selection: supercapacitor-like iff the double-exponential model wins
/// by at least 10 AIC units.
inline DischargeVerdict classify(const ErgotropyTrace& trace) {
    DischargeVerdict v;
    v.single_fit = fit_single_exp(trace);
    v.double_fit = fit_double_exp(trace);
    double y_scale = 0.0;
    for (double e : trace.ergotropy) y_scale = std::max(y_scale, std::abs(e));
    v.evidence = aic(v.single_fit, trace.times.size(), y_scale) -
                 aic(v.double_fit, trace.times.size(), y_scale);
    v.model = v.evidence >= 10.0 ? DischargeModel::Supercapacitor : DischargeModel::Ohmic;
    return v;
}

} // namespace qbat
