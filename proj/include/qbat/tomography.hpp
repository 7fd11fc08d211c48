#pragma once

// The nine-rotation measurement set, simulated measurement records, and
// linear-inversion state reconstruction with a positivity projection.
//
// Rotation convention: (theta)_x/y^{ab} = exp(-i theta/2 sigma_{x/y}^{ab}) on
// the {a,b} subspace. Each composed rotation must map its basis state to |0>;
// the builder verifies that contract and, because the source table fixes
// targets rather than phases, retries the composition order and the pulse
// angle signs until the contract holds (the ninth row needs the flipped
// y-rotation sign; everything else takes the printed form).

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "qbat/qutrit.hpp"

namespace qbat {

struct TomographyRotation {
    int index = 0;        // 1-based, as listed
    Mat3 unitary;         // maps target to |0> up to a global phase
    Vec3 target;          // measurement basis state |psi_i>
};

struct MeasurementRecord {
    std::array<std::array<double, 3>, 9> probabilities{};
    std::optional<std::uint64_t> shots;  // absent = exact probabilities
};

namespace detail {

enum class Axis { X, Y };

struct Pulse {
    Axis axis;
    double theta;
    std::size_t a, b;  // subspace levels, a < b
};

inline Mat3 subspace_rotation(const Pulse& p, double sign) {
    const double half = 0.5 * sign * p.theta;
    const double c = std::cos(half), s = std::sin(half);
    Mat3 u = Mat3::identity();
    if (p.axis == Axis::X) {
        u(p.a, p.a) = c;
        u(p.b, p.b) = c;
        u(p.a, p.b) = cplx(0.0, -s);
        u(p.b, p.a) = cplx(0.0, -s);
    } else {
        u(p.a, p.a) = c;
        u(p.b, p.b) = c;
        u(p.a, p.b) = -s;
        u(p.b, p.a) = s;
    }
    return u;
}

inline bool maps_to_ground(const Mat3& u, const Vec3& target) {
    const Vec3 mapped = u * target;
    return std::abs(std::abs(mapped[0]) - 1.0) <= 1e-10;
}

} // namespace detail

/// The nine rotations with their measurement basis states. Throws
/// construction_error if any row cannot satisfy the ground-state contract.
inline const std::array<TomographyRotation, 9>& tomography_set() {
    static const std::array<TomographyRotation, 9> set = [] {
        using detail::Axis;
        using detail::Pulse;
        const double pi = M_PI;
        const cplx j(0.0, 1.0);
        const double rt = 1.0 / std::sqrt(2.0);

        struct Row {
            std::vector<Pulse> pulses;  // as listed, left to right
            Vec3 target;
        };
        const std::array<Row, 9> rows = {{
            {{}, {1.0, 0.0, 0.0}},
            {{{Axis::X, pi, 0, 1}}, {0.0, 1.0, 0.0}},
            {{{Axis::X, pi, 0, 1}, {Axis::X, pi, 1, 2}}, {0.0, 0.0, 1.0}},
            {{{Axis::Y, pi / 2, 0, 1}}, {rt, -rt, 0.0}},
            {{{Axis::X, pi / 2, 0, 1}}, {rt, j * rt, 0.0}},
            {{{Axis::X, pi, 0, 1}, {Axis::Y, pi / 2, 1, 2}}, {0.0, rt, -rt}},
            {{{Axis::X, pi, 0, 1}, {Axis::X, pi / 2, 1, 2}}, {0.0, rt, j * rt}},
            {{{Axis::X, pi / 2, 0, 1}, {Axis::X, pi, 1, 2}}, {rt, 0.0, -rt}},
            {{{Axis::Y, pi / 2, 0, 1}, {Axis::X, pi, 1, 2}}, {rt, 0.0, j * rt}},
        }};

        std::array<TomographyRotation, 9> out;
        for (int i = 0; i < 9; ++i) {
            const Row& row = rows[static_cast<std::size_t>(i)];
            bool found = false;
            Mat3 chosen;
            if (row.pulses.empty()) {
                chosen = Mat3::identity();
                found = detail::maps_to_ground(chosen, row.target);
            } else {
                // Candidate search: composition order (last-listed applied
                // first, then reversed) times per-pulse angle signs.
                const std::size_t np = row.pulses.size();
                for (int order = 0; order < 2 && !found; ++order)
                    for (std::size_t signs = 0; signs < (1u << np) && !found; ++signs) {
                        Mat3 u = Mat3::identity();
                        for (std::size_t k = 0; k < np; ++k) {
                            const std::size_t pk = order == 0 ? k : np - 1 - k;
                            const double sign = (signs >> pk) & 1u ? -1.0 : 1.0;
                            u = u * detail::subspace_rotation(row.pulses[pk], sign);
                        }
                        if (detail::maps_to_ground(u, row.target)) {
                            chosen = u;
                            found = true;
                        }
                    }
            }
            if (!found)
                throw construction_error("tomography_set: row " + std::to_string(i + 1) +
                                         " cannot satisfy the ground-state contract");
            out[static_cast<std::size_t>(i)] = {i + 1, chosen, row.target};
        }
        return out;
    }();
    return set;
}

namespace detail {

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// 27x9 real design matrix: outcome probabilities as linear functions of the
// nine real parameters (d0, d1, d2, Re/Im of the three upper off-diagonals).
inline const std::array<std::array<double, 9>, 27>& design_matrix() {
    static const std::array<std::array<double, 9>, 27> a = [] {
        std::array<std::array<double, 9>, 27> out{};
        const auto& set = tomography_set();
        for (int i = 0; i < 9; ++i) {
            const Mat3& u = set[static_cast<std::size_t>(i)].unitary;
            for (std::size_t k = 0; k < 3; ++k) {
                auto& rowk = out[static_cast<std::size_t>(3 * i) + k];
                for (std::size_t m = 0; m < 3; ++m) rowk[m] = std::norm(u(k, m));
                int col = 3;
                for (std::size_t m = 0; m < 3; ++m)
                    for (std::size_t nn = m + 1; nn < 3; ++nn) {
                        const cplx z = u(k, m) * std::conj(u(k, nn));
                        rowk[static_cast<std::size_t>(col)] = 2.0 * z.real();
                        rowk[static_cast<std::size_t>(col + 1)] = -2.0 * z.imag();
                        col += 2;
                    }
            }
        }
        return out;
    }();
    return a;
}

// Dense symmetric-positive solve by Gaussian elimination with partial pivots.
template <std::size_t N>
inline std::array<double, N> solve_dense(std::array<std::array<double, N>, N> m,
                                         std::array<double, N> rhs) {
    for (std::size_t col = 0; col < N; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < N; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        std::swap(m[piv], m[col]);
        std::swap(rhs[piv], rhs[col]);
        if (m[col][col] == 0.0)
            throw construction_error("tomography: singular normal equations");
        for (std::size_t r = col + 1; r < N; ++r) {
            const double f = m[r][col] / m[col][col];
            for (std::size_t c = col; c < N; ++c) m[r][c] -= f * m[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    std::array<double, N> x{};
    for (std::size_t r = N; r-- > 0;) {
        double s = rhs[r];
        for (std::size_t c = r + 1; c < N; ++c) s -= m[r][c] * x[c];
        x[r] = s / m[r][r];
    }
    return x;
}

// Real symmetric Jacobi eigenvalues, for the design condition number.
template <std::size_t N>
inline std::array<double, N> symmetric_eigenvalues(std::array<std::array<double, N>, N> m) {
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (std::size_t r = 0; r < N; ++r)
            for (std::size_t c = r + 1; c < N; ++c) off += m[r][c] * m[r][c];
        if (off < 1e-26) break;
        for (std::size_t p = 0; p < N; ++p)
            for (std::size_t q = p + 1; q < N; ++q) {
                if (m[p][q] == 0.0) continue;
                const double zeta = (m[p][p] - m[q][q]) / (2.0 * m[p][q]);
                const double t =
                    (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(zeta * zeta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < N; ++k) {
                    const double mp = m[p][k], mq = m[q][k];
                    m[p][k] = c * mp + s * mq;
                    m[q][k] = -s * mp + c * mq;
                }
                for (std::size_t k = 0; k < N; ++k) {
                    const double mp = m[k][p], mq = m[k][q];
                    m[k][p] = c * mp + s * mq;
                    m[k][q] = -s * mp + c * mq;
                }
            }
    }
    std::array<double, N> d{};
    for (std::size_t k = 0; k < N; ++k) d[k] = m[k][k];
    std::sort(d.begin(), d.end());
    return d;
}

inline std::array<std::array<double, 9>, 9> normal_matrix() {
    const auto& a = design_matrix();
    std::array<std::array<double, 9>, 9> out{};
    for (std::size_t r = 0; r < 9; ++r)
        for (std::size_t c = 0; c < 9; ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k < 27; ++k) s += a[k][r] * a[k][c];
            out[r][c] = s;
        }
    return out;
}

} // namespace detail

/// Condition number of the 27x9 design matrix (informational completeness).
inline double design_condition_number() {
    const auto d = detail::symmetric_eigenvalues<9>(detail::normal_matrix());
    if (!(d.front() > 0.0)) return std::numeric_limits<double>::infinity();
    return std::sqrt(d.back() / d.front());
}

/// Outcome probabilities for every rotation; with shots, seeded multinomial
/// counts normalized per row (the generator is explicit, no global state).
inline MeasurementRecord simulate_measurements(const DensityMatrix& state,
                                               std::optional<std::uint64_t> shots = std::nullopt,
                                               std::uint64_t seed = 0) {
    if (shots && *shots == 0) throw invalid_input_error("simulate_measurements: shots must be > 0");
    MeasurementRecord rec;
    rec.shots = shots;
    std::mt19937_64 rng(seed);
    const auto& set = tomography_set();
    for (std::size_t i = 0; i < 9; ++i) {
        const Mat3& u = set[i].unitary;
        const Mat3 rotated = u * state.entries * u.adjoint();
        std::array<double, 3> p = {std::max(rotated(0, 0).real(), 0.0),
                                   std::max(rotated(1, 1).real(), 0.0),
                                   std::max(rotated(2, 2).real(), 0.0)};
        if (!shots) {
            rec.probabilities[i] = {rotated(0, 0).real(), rotated(1, 1).real(),
                                    rotated(2, 2).real()};
            continue;
        }
        const double total = p[0] + p[1] + p[2];
        std::array<std::uint64_t, 3> counts{};
        for (std::uint64_t n = 0; n < *shots; ++n) {
            const double u01 = detail::uniform01(rng) * total;
            if (u01 < p[0])
                ++counts[0];
            else if (u01 < p[0] + p[1])
                ++counts[1];
            else
                ++counts[2];
        }
        for (int k = 0; k < 3; ++k)
            rec.probabilities[i][static_cast<std::size_t>(k)] =
                static_cast<double>(counts[static_cast<std::size_t>(k)]) /
                static_cast<double>(*shots);
    }
    return rec;
}

/// Least-squares inversion of the 27 outcome probabilities followed by
/// projection to the physical cone (eigenvalue clipping, trace renorm).
inline DensityMatrix reconstruct(const MeasurementRecord& record) {
    const double cond = design_condition_number();
    if (!(cond < 1e3))
        throw construction_error("reconstruct: tomography set lost informational completeness");

    const auto& a = detail::design_matrix();
    std::array<double, 9> rhs{};
    for (std::size_t k = 0; k < 27; ++k) {
        const double y = record.probabilities[k / 3][k % 3];
        for (std::size_t c = 0; c < 9; ++c) rhs[c] += a[k][c] * y;
    }
    const auto x = detail::solve_dense<9>(detail::normal_matrix(), rhs);

    Mat3 est = Mat3::diag(x[0], x[1], x[2]);
    est(0, 1) = cplx(x[3], x[4]);
    est(1, 0) = std::conj(est(0, 1));
    est(0, 2) = cplx(x[5], x[6]);
    est(2, 0) = std::conj(est(0, 2));
    est(1, 2) = cplx(x[7], x[8]);
    est(2, 1) = std::conj(est(1, 2));

    const EigenSystem es = eig_hermitian(hermitize(est));
    Mat3 proj;
    double tr = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        const double lam = std::max(es.values[k], 0.0);
        tr += lam;
        proj = proj + lam * outer(es.vectors[k], es.vectors[k]);
    }
    if (!(tr > 0.0)) throw invalid_input_error("reconstruct: record implies a zero state");
    proj = (1.0 / tr) * proj;
    return DensityMatrix::from_matrix(hermitize(proj));
}

} // namespace qbat
