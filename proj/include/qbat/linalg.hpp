#pragma once

// Dense complex 3x3 linear algebra: just enough for a qutrit, no external
// dependency. Matrices are row-major value types.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>

#include "qbat/errors.hpp"

namespace qbat {

using cplx = std::complex<double>;

struct Vec3 {
    std::array<cplx, 3> v{};

    cplx& operator[](std::size_t i) { return v[i]; }
    const cplx& operator[](std::size_t i) const { return v[i]; }

    double norm2() const {
        double s = 0.0;
        for (const auto& c : v) s += std::norm(c);
        return s;
    }
    double norm() const { return std::sqrt(norm2()); }

    Vec3 conj() const { return {std::conj(v[0]), std::conj(v[1]), std::conj(v[2])}; }
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) {
    return {a.v[0] + b.v[0], a.v[1] + b.v[1], a.v[2] + b.v[2]};
}
inline Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a.v[0] - b.v[0], a.v[1] - b.v[1], a.v[2] - b.v[2]};
}
inline Vec3 operator*(cplx s, const Vec3& a) { return {s * a.v[0], s * a.v[1], s * a.v[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return cplx(s, 0.0) * a; }

// <a|b> with the physics convention: conjugate-linear in the first slot.
inline cplx inner(const Vec3& a, const Vec3& b) {
    cplx s{};
    for (std::size_t i = 0; i < 3; ++i) s += std::conj(a.v[i]) * b.v[i];
    return s;
}

struct Mat3 {
    std::array<cplx, 9> m{};

    cplx& operator()(std::size_t r, std::size_t c) { return m[3 * r + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return m[3 * r + c]; }

    static Mat3 zero() { return {}; }
    static Mat3 identity() {
        Mat3 out;
        out(0, 0) = out(1, 1) = out(2, 2) = 1.0;
        return out;
    }
    static Mat3 diag(double a, double b, double c) {
        Mat3 out;
        out(0, 0) = a;
        out(1, 1) = b;
        out(2, 2) = c;
        return out;
    }

    Mat3 adjoint() const {
        Mat3 out;
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c) out(r, c) = std::conj((*this)(c, r));
        return out;
    }

    cplx trace() const { return m[0] + m[4] + m[8]; }

    double max_abs() const {
        double s = 0.0;
        for (const auto& c : m) s = std::max(s, std::abs(c));
        return s;
    }

    double frob_norm() const {
        double s = 0.0;
        for (const auto& c : m) s += std::norm(c);
        return std::sqrt(s);
    }
};

inline Mat3 operator+(const Mat3& a, const Mat3& b) {
    Mat3 out;
    for (std::size_t i = 0; i < 9; ++i) out.m[i] = a.m[i] + b.m[i];
    return out;
}
inline Mat3 operator-(const Mat3& a, const Mat3& b) {
    Mat3 out;
    for (std::size_t i = 0; i < 9; ++i) out.m[i] = a.m[i] - b.m[i];
    return out;
}
inline Mat3 operator*(cplx s, const Mat3& a) {
    Mat3 out;
    for (std::size_t i = 0; i < 9; ++i) out.m[i] = s * a.m[i];
    return out;
}
inline Mat3 operator*(double s, const Mat3& a) { return cplx(s, 0.0) * a; }

inline Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 out;
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) {
            cplx s{};
            for (std::size_t k = 0; k < 3; ++k) s += a(r, k) * b(k, c);
            out(r, c) = s;
        }
    return out;
}

inline Vec3 operator*(const Mat3& a, const Vec3& x) {
    Vec3 out;
    for (std::size_t r = 0; r < 3; ++r) {
        cplx s{};
        for (std::size_t c = 0; c < 3; ++c) s += a(r, c) * x.v[c];
        out.v[r] = s;
    }
    return out;
}

// |u><v|
inline Mat3 outer(const Vec3& u, const Vec3& v) {
    Mat3 out;
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) out(r, c) = u.v[r] * std::conj(v.v[c]);
    return out;
}

inline Mat3 commutator(const Mat3& a, const Mat3& b) { return a * b - b * a; }

inline double hermiticity_deviation(const Mat3& a) {
    double d = 0.0;
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) d = std::max(d, std::abs(a(r, c) - std::conj(a(c, r))));
    return d;
}

// Tolerance scales with the matrix so rad/s magnitudes stay checkable.
inline bool is_hermitian(const Mat3& a, double tol = 1e-12) {
    return hermiticity_deviation(a) <= tol * std::max(1.0, a.max_abs());
}

inline Mat3 hermitize(const Mat3& a) { return 0.5 * (a + a.adjoint()); }

// ---------------------------------------------------------------------------
// Hermitian eigensolver: cyclic Jacobi with complex Givens rotations.
// ---------------------------------------------------------------------------

struct EigenSystem {
    std::array<double, 3> values{};  // ascending
    std::array<Vec3, 3> vectors{};   // orthonormal columns, paired with values

    Mat3 reconstruct() const {
        Mat3 out;
        for (std::size_t k = 0; k < 3; ++k) out = out + values[k] * outer(vectors[k], vectors[k]);
        return out;
    }
};

namespace detail {

// One rotation in the (p,q) plane zeroing H(p,q); accumulates into V.
inline void jacobi_rotate(Mat3& h, Mat3& v, std::size_t p, std::size_t q) {
    const cplx apq = h(p, q);
    const double r = std::abs(apq);
    if (r == 0.0) return;
    const cplx phase = apq / r;

    const double app = h(p, p).real();
    const double aqq = h(q, q).real();
    const double zeta = (app - aqq) / (2.0 * r);
    // Smaller-angle root of tan(2 theta) = 2r / (app - aqq).
    const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(zeta * zeta + 1.0));
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const double s = t * c;

    Mat3 u = Mat3::identity();
    u(p, p) = c;
    u(q, q) = c;
    u(p, q) = -phase * s;
    u(q, p) = std::conj(phase) * s;

    h = u.adjoint() * h * u;
    h(p, q) = 0.0;  // exact by construction; kill the rounding residue
    h(q, p) = 0.0;
    v = v * u;
}

inline double off_diag_norm(const Mat3& h) {
    double s = 0.0;
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c)
            if (r != c) s += std::norm(h(r, c));
    return std::sqrt(s);
}

} // namespace detail

/// Eigensystem of a Hermitian 3x3. Eigenvalues ascending; each eigenvector's
/// largest-magnitude component is made real-positive so tests are reproducible.
inline EigenSystem eig_hermitian(const Mat3& input) {
    if (!is_hermitian(input)) throw invalid_input_error("eig_hermitian: matrix is not Hermitian");

    Mat3 h = hermitize(input);
    Mat3 v = Mat3::identity();
    const double scale = std::max(h.frob_norm(), 1e-300);

    bool converged = false;
    for (int sweep = 0; sweep < 100; ++sweep) {
        if (detail::off_diag_norm(h) <= 1e-14 * scale) {
            converged = true;
            break;
        }
        detail::jacobi_rotate(h, v, 0, 1);
        detail::jacobi_rotate(h, v, 0, 2);
        detail::jacobi_rotate(h, v, 1, 2);
    }
    if (!converged && detail::off_diag_norm(h) > 1e-14 * scale)
        throw convergence_error("eig_hermitian: Jacobi sweeps did not converge");

    std::array<std::size_t, 3> order = {0, 1, 2};
    const std::array<double, 3> d = {h(0, 0).real(), h(1, 1).real(), h(2, 2).real()};
    if (d[order[0]] > d[order[1]]) std::swap(order[0], order[1]);
    if (d[order[1]] > d[order[2]]) std::swap(order[1], order[2]);
    if (d[order[0]] > d[order[1]]) std::swap(order[0], order[1]);

    EigenSystem out;
    for (std::size_t k = 0; k < 3; ++k) {
        const std::size_t col = order[k];
        out.values[k] = d[col];
        Vec3 w{v(0, col), v(1, col), v(2, col)};
        std::size_t imax = 0;
        for (std::size_t i = 1; i < 3; ++i)
            if (std::abs(w.v[i]) > std::abs(w.v[imax])) imax = i;
        const double mag = std::abs(w.v[imax]);
        if (mag > 0.0) w = (std::conj(w.v[imax]) / mag) * w;
        const double n = w.norm();
        if (n > 0.0) w = (1.0 / n) * w;
        out.vectors[k] = w;
    }
    return out;
}

} // namespace qbat
