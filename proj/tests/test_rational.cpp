#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "lpsim/errors.hpp"
#include "lpsim/rational.hpp"

using namespace lpsim;

namespace {

Eigen::VectorXcd real_samples(int n, double lo, double hi) {
    Eigen::VectorXcd z(n);
    for (int i = 0; i < n; ++i) z[i] = lo + (hi - lo) * i / (n - 1);
    return z;
}

double nearest(const Eigen::VectorXcd& v, cplx p) {
    double best = 1e300;
    for (Eigen::Index i = 0; i < v.size(); ++i) best = std::min(best, std::abs(v[i] - p));
    return best;
}

}  // namespace

TEST_CASE("AAA recovers poles, residues and zeros of a rational function") {
    const cplx p1(1.0, -0.5), p2(-2.0, -0.3);
    auto f = [&](cplx z) { return 1.0 / (z - p1) + 2.0 / (z - p2); };
    const Eigen::VectorXcd z = real_samples(200, -6.0, 6.0);
    Eigen::VectorXcd fz(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) fz[i] = f(z[i]);
    const AaaResult fit = aaa_fit(z, fz);
    CHECK(fit.converged);
    CHECK(fit.holdout_error <= 1e-10 * fz.cwiseAbs().maxCoeff());

    const Eigen::VectorXcd poles = fit.approximant.poles();
    CHECK(nearest(poles, p1) <= 1e-8);
    CHECK(nearest(poles, p2) <= 1e-8);
    Eigen::VectorXcd two(2);
    two << p1, p2;
    // Use the fitted pole locations for the residues.
    for (int k = 0; k < 2; ++k) {
        Eigen::Index at = 0;
        (poles.array() - two[k]).abs().minCoeff(&at);
        Eigen::VectorXcd one(1);
        one << poles[at];
        CHECK(std::abs(fit.approximant.residues(one)[0] - (k == 0 ? 1.0 : 2.0)) <= 1e-7);
    }
    // f = 3 (z - z0) / ((z - p1)(z - p2)) with z0 = (2 p1 + p2) / 3.
    CHECK(nearest(fit.approximant.zeros(), (2.0 * p1 + p2) / 3.0) <= 1e-8);
    // Evaluation off the samples, including the upper half-plane.
    for (cplx w : {cplx(0.37, 0.0), cplx(3.0, 1.0), cplx(-1.0, 2.0)}) {
        CHECK(std::abs(fit.approximant(w) - f(w)) <= 1e-9);
    }
}

TEST_CASE("AAA on a unimodular Blaschke-type factor") {
    // S(sigma) = (sigma - conj(p)) / (sigma - p): unit modulus on the real line.
    const cplx p(0.5, -0.2);
    const Eigen::VectorXcd z = real_samples(301, -3.0, 3.0);
    Eigen::VectorXcd fz(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) fz[i] = (z[i] - std::conj(p)) / (z[i] - p);
    const AaaResult fit = aaa_fit(z, fz);
    CHECK(fit.converged);
    CHECK(fit.approximant.degree() <= 3);
    CHECK(nearest(fit.approximant.poles(), p) <= 1e-10);
    CHECK(nearest(fit.approximant.zeros(), std::conj(p)) <= 1e-10);
}

TEST_CASE("barycentric form interpolates its support") {
    Eigen::VectorXcd s(3), v(3), w(3);
    s << 0.0, 1.0, 2.0;
    v << 1.0, 2.0, 5.0;
    w << 1.0, -2.0, 1.0;
    const BarycentricApproximant r(s, v, w);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(r(s[i]) - v[i]) <= 1e-15);
    // Weights (1, -2, 1) give the quadratic interpolant 1 + z^2.
    CHECK(std::abs(r(cplx(0.5, 0.5)) - (1.0 + cplx(0.5, 0.5) * cplx(0.5, 0.5))) <= 1e-14);
    CHECK(r.degree() == 2);
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(aaa_fit(Eigen::VectorXcd::Zero(3), Eigen::VectorXcd::Zero(3)), DimensionError);
    CHECK_THROWS_AS(aaa_fit(real_samples(10, 0, 1), Eigen::VectorXcd::Zero(9)), DimensionError);
    Eigen::VectorXcd bad = Eigen::VectorXcd::Ones(10);
    bad[3] = cplx(NAN, 0.0);
    CHECK_THROWS_AS(aaa_fit(real_samples(10, 0, 1), bad), ValidationError);
    CHECK_THROWS_AS(BarycentricApproximant(Eigen::VectorXcd::Zero(2), Eigen::VectorXcd::Zero(3), Eigen::VectorXcd::Zero(2)),
                    DimensionError);
}
