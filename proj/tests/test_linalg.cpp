#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "qbat/linalg.hpp"

using namespace qbat;

namespace {

// Independent eigenvalue oracle: roots of the characteristic polynomial of a
// Hermitian 3x3, solved with the trigonometric cubic formula. Never touches
// the Jacobi path.
std::array<double, 3> char_poly_roots(const Mat3& a) {
    const double tr = a.trace().real();
    // Sum of principal 2x2 minors (real for Hermitian input).
    const auto minor = [&](std::size_t i, std::size_t j) {
        return (a(i, i) * a(j, j) - a(i, j) * a(j, i)).real();
    };
    const double c1 = minor(0, 1) + minor(0, 2) + minor(1, 2);
    const double det = (a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
                        a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
                        a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)))
                           .real();
    // lambda^3 - tr lambda^2 + c1 lambda - det = 0; shift lambda = x + tr/3.
    const double p = c1 - tr * tr / 3.0;
    const double q = -2.0 * tr * tr * tr / 27.0 + tr * c1 / 3.0 - det;
    std::array<double, 3> roots{};
    if (std::abs(p) < 1e-30) {
        const double r = std::cbrt(-q);
        roots = {r, r, r};
    } else {
        const double m = 2.0 * std::sqrt(-p / 3.0);
        double arg = 3.0 * q / (p * m);
        arg = std::clamp(arg, -1.0, 1.0);
        const double theta = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k)
            roots[k] = m * std::cos(theta - 2.0 * M_PI * k / 3.0);
    }
    for (auto& r : roots) r += tr / 3.0;
    std::sort(roots.begin(), roots.end());
    return roots;
}

Mat3 random_hermitian(std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Mat3 h;
    for (std::size_t i = 0; i < 3; ++i) h(i, i) = u(rng);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = i + 1; j < 3; ++j) {
            const cplx z(u(rng), u(rng));
            h(i, j) = z;
            h(j, i) = std::conj(z);
        }
    return h;
}

} // namespace

TEST_CASE("identity eigensystem") {
    const EigenSystem es = eig_hermitian(Mat3::identity());
    for (double v : es.values) CHECK(v == Catch::Approx(1.0).margin(1e-14));
    // Orthonormality survives degeneracy.
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            const cplx g = inner(es.vectors[i], es.vectors[j]);
            CHECK(std::abs(g - (i == j ? 1.0 : 0.0)) < 1e-10);
        }
}

TEST_CASE("drive-like matrix (3,4) has spectrum (-5, 0, 5)") {
    Mat3 h;
    h(0, 1) = h(1, 0) = 3.0;
    h(1, 2) = h(2, 1) = 4.0;
    const EigenSystem es = eig_hermitian(h);
    CHECK(es.values[0] == Catch::Approx(-5.0).margin(1e-12));
    CHECK(es.values[1] == Catch::Approx(0.0).margin(1e-12));
    CHECK(es.values[2] == Catch::Approx(5.0).margin(1e-12));
}

TEST_CASE("random Hermitian matrices agree with the cubic-root oracle") {
    std::mt19937_64 rng(20240811);
    for (int trial = 0; trial < 100; ++trial) {
        const Mat3 h = random_hermitian(rng);
        const EigenSystem es = eig_hermitian(h);
        const auto oracle = char_poly_roots(h);
        const double scale = std::max(1.0, h.max_abs());
        for (std::size_t k = 0; k < 3; ++k)
            CHECK(std::abs(es.values[k] - oracle[k]) < 1e-8 * scale);

        // Reconstruction residual and Gram identity.
        const Mat3 rec = es.reconstruct();
        CHECK((rec - h).max_abs() <= 1e-10 * std::max(h.max_abs(), 1e-30));
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) {
                const cplx g = inner(es.vectors[i], es.vectors[j]);
                CHECK(std::abs(g - (i == j ? 1.0 : 0.0)) < 1e-10);
            }
    }
}

TEST_CASE("large-magnitude entries keep relative accuracy") {
    std::mt19937_64 rng(7);
    const Mat3 h = random_hermitian(rng, 1e10);
    const EigenSystem es = eig_hermitian(h);
    const auto oracle = char_poly_roots(h);
    for (std::size_t k = 0; k < 3; ++k)
        CHECK(std::abs(es.values[k] - oracle[k]) < 1e-6 * h.max_abs());
}

TEST_CASE("non-Hermitian input is rejected") {
    Mat3 h;
    h(0, 1) = 1.0;
    h(1, 0) = 0.5;  // breaks the symmetry
    CHECK_THROWS_AS(eig_hermitian(h), invalid_input_error);
}

TEST_CASE("eigenvector phase convention is deterministic") {
    std::mt19937_64 rng(99);
    const Mat3 h = random_hermitian(rng);
    const EigenSystem a = eig_hermitian(h);
    const EigenSystem b = eig_hermitian(h);
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(a.vectors[k].v[i] == b.vectors[k].v[i]);
    // Largest component real-positive.
    for (std::size_t k = 0; k < 3; ++k) {
        std::size_t imax = 0;
        for (std::size_t i = 1; i < 3; ++i)
            if (std::abs(a.vectors[k].v[i]) > std::abs(a.vectors[k].v[imax])) imax = i;
        CHECK(a.vectors[k].v[imax].real() > 0.0);
        CHECK(std::abs(a.vectors[k].v[imax].imag()) < 1e-12);
    }
}
