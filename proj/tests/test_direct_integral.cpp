#include "doctest.h"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "lpsim/errors.hpp"
#include "support.hpp"

using namespace lpsim;
using lptest::max_abs;

TEST_CASE("time grid geometry") {
    const TimeGrid g(-2.0, 6.0, 16);
    CHECK(g.spacing() == doctest::Approx(0.5));
    CHECK(g.point(0) == -2.0);
    CHECK(g.point(15) == doctest::Approx(5.5));
    const RVector s = g.sigma();
    CHECK(s.size() == 16);
    for (Eigen::Index i = 1; i < s.size(); ++i) CHECK(s[i] > s[i - 1]);
    CHECK(s[8] == 0.0);
    CHECK(g.sigma_spacing() == doctest::Approx(2.0 * std::numbers::pi / 8.0));
    CHECK(g.nearest(0.3) == 5);

    CHECK_THROWS_AS(TimeGrid(0.0, 1.0, 12), ValidationError);
    CHECK_THROWS_AS(TimeGrid(0.0, 1.0, 4), ValidationError);
    CHECK_THROWS_AS(TimeGrid(1.0, 1.0, 16), ValidationError);
    CHECK_THROWS_AS(AuxSpace(0), ValidationError);
}

TEST_CASE("inner product") {
    const TimeGrid g(0.0, 8.0, 16);
    const AuxSpace aux(2);
    LpVector zero(g, aux);
    CHECK(inner_product(zero, zero) == cplx(0.0, 0.0));

    CMatrix e1 = CMatrix::Zero(16, 2), e2 = CMatrix::Zero(16, 2);
    e1(3, 0) = 1.0;
    e2(3, 1) = 1.0;
    CHECK(inner_product(LpVector(g, aux, e1), LpVector(g, aux, e2)) == cplx(0.0, 0.0));

    // Constant unit vector on 16 nodes of spacing 0.5: 16 * 0.5.
    CMatrix c = CMatrix::Zero(16, 2);
    c.col(0).setConstant(1.0);
    CHECK(inner_product(LpVector(g, aux, c), LpVector(g, aux, c)).real() == doctest::Approx(8.0).epsilon(1e-15));

    std::mt19937_64 rng(1);
    const LpVector f = lptest::random_state(rng, g, aux), h = lptest::random_state(rng, g, aux);
    CHECK(std::abs(inner_product(f, h) - std::conj(inner_product(h, f))) <= 1e-14);
    // Conjugate-linear in the first slot.
    LpVector f2 = f;
    f2.values() *= cplx(0.0, 2.0);
    CHECK(std::abs(inner_product(f2, h) - cplx(0.0, -2.0) * inner_product(f, h)) <= 1e-13);

    CHECK_THROWS_AS(inner_product(f, LpVector(TimeGrid(0.0, 4.0, 16), aux)), DimensionError);
    CHECK_THROWS_AS(LpVector(g, aux, CMatrix::Zero(8, 2)), DimensionError);
}

TEST_CASE("Parseval and round trip on random states") {
    std::mt19937_64 rng(7);
    for (std::size_t n : {8u, 64u, 256u}) {
        const TimeGrid g(-3.0, 5.0, n);
        for (int d : {1, 3}) {
            const AuxSpace aux(d);
            for (int trial = 0; trial < 10; ++trial) {
                const LpVector f = lptest::random_state(rng, g, aux);
                const SpectralVector fh = to_spectral(f);
                CHECK(std::abs(fh.norm() - f.norm()) <= 1e-10 * f.norm());
                const LpVector back = from_spectral(fh);
                CHECK(max_abs(back.values() - f.values()) <= 1e-12 * max_abs(f.values()));
            }
        }
    }
    const TimeGrid g(0.0, 4.0, 32);
    CHECK(max_abs(to_spectral(LpVector(g, AuxSpace(1))).values()) == 0.0);
}

TEST_CASE("transform convention: direct sum e^{-i sigma t_k} f_k h") {
    const TimeGrid g(-1.5, 2.5, 16);
    const AuxSpace aux(1);
    std::mt19937_64 rng(3);
    const LpVector f = lptest::random_state(rng, g, aux);
    const SpectralVector fh = to_spectral(f);
    const RVector s = g.sigma();
    for (Eigen::Index m = 0; m < s.size(); ++m) {
        cplx sum = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            sum += std::exp(cplx(0.0, -s[m] * g.point(k))) * f.values()(static_cast<Eigen::Index>(k), 0) * g.spacing();
        }
        CHECK(std::abs(fh.values()(m, 0) - sum) <= 1e-12);
    }
}

TEST_CASE("plane wave concentrates at its frequency") {
    const TimeGrid g(-8.0, 8.0, 128);
    const AuxSpace aux(2);
    const double sigma0 = 7.3 * g.sigma_spacing();
    CMatrix v = CMatrix::Zero(128, 2);
    const double u0 = 0.6, u1 = 0.8;
    for (Eigen::Index k = 0; k < 128; ++k) {
        const cplx ph = std::exp(cplx(0.0, sigma0 * g.point(static_cast<std::size_t>(k))));
        v(k, 0) = u0 * ph;
        v(k, 1) = cplx(0.0, u1) * ph;
    }
    const SpectralVector fh = to_spectral(LpVector(g, aux, v));
    Eigen::Index best = 0;
    fh.values().rowwise().norm().maxCoeff(&best);
    const RVector s = g.sigma();
    Eigen::Index nearest = 0;
    (s.array() - sigma0).abs().minCoeff(&nearest);
    CHECK(best == nearest);
    CHECK(s[best] == doctest::Approx(7.0 * g.sigma_spacing()));
}

TEST_CASE("translation") {
    const TimeGrid g(-4.0, 4.0, 64);
    const AuxSpace aux(2);
    std::mt19937_64 rng(5);
    const LpVector f = lptest::random_state(rng, g, aux);
    CHECK(max_abs(translate(f, 0.0).values() - f.values()) == 0.0);

    // Delta at node j moves to node j + 3.
    CMatrix v = CMatrix::Zero(64, 2);
    v(20, 1) = 1.0;
    const LpVector moved = translate(LpVector(g, aux, v), 3.0 * g.spacing());
    CHECK(moved.values()(23, 1) == cplx(1.0, 0.0));
    CHECK(moved.values().cwiseAbs().sum() == doctest::Approx(1.0));

    for (double a : {0.3, 1.25, -0.71}) {
        for (double b : {0.5, -2.2}) {
            const LpVector lhs = translate(translate(f, a), b);
            const LpVector rhs = translate(f, a + b);
            CHECK(max_abs(lhs.values() - rhs.values()) <= 1e-12 * max_abs(f.values()));
            CHECK(std::abs(translate(f, a).norm() - f.norm()) <= 1e-12 * f.norm());
        }
    }
    // Lattice translation is the spectral phase e^{-i sigma tau} exactly.
    const double tau = 5.0 * g.spacing();
    const SpectralVector lhs = to_spectral(translate(f, tau));
    const SpectralVector rhs = to_spectral(f);
    const RVector s = g.sigma();
    for (Eigen::Index m = 0; m < s.size(); ++m) {
        const cplx ph = std::exp(cplx(0.0, -s[m] * tau));
        CHECK(max_abs(lhs.values().row(m) - ph * rhs.values().row(m)) <= 1e-12 * max_abs(rhs.values()));
    }
    CHECK(max_abs(shift_nodes(f, -64).values() - f.values()) == 0.0);
}

TEST_CASE("free generator is multiplication by sigma") {
    const TimeGrid g(-2.0, 2.0, 32);
    const CMatrix K0 = free_generator(g);
    CHECK(max_abs(K0 - K0.adjoint()) <= 1e-13);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(K0, Eigen::EigenvaluesOnly);
    RVector s = g.sigma();
    std::sort(s.data(), s.data() + s.size());
    CHECK((es.eigenvalues() - s).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("support margin warning") {
    const TimeGrid g(-4.0, 4.0, 64);
    const AuxSpace aux(1);
    std::vector<std::string> seen;
    const WarningHandler old = set_warning_handler([&](std::string_view m) { seen.emplace_back(m); });
    CMatrix v = CMatrix::Zero(64, 1);
    v(32, 0) = 1.0;
    CHECK(check_support_margin(LpVector(g, aux, v)));
    CHECK(seen.empty());
    v(1, 0) = 1.0;
    CHECK(support_margin(LpVector(g, aux, v)) == 1);
    CHECK_FALSE(check_support_margin(LpVector(g, aux, v)));
    CHECK(seen.size() == 1);
    set_warning_handler(old);
}
