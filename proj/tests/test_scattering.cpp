#include "doctest.h"

#include <cmath>
#include <memory>
#include <vector>

#include "lpsim/errors.hpp"
#include "lpsim/scattering.hpp"
#include "support.hpp"

using namespace lpsim;
using lptest::max_abs;

namespace {

// Single-resonance scalar scenario on [-40, 88) with 1024 nodes.
struct Resonant {
    TimeGrid grid{-40.0, 88.0, 1024};
    AuxSpace aux{1};
    SubspaceLayout layout{grid, 8.0};
    GeneratorK K;
    LaxPhillipsSystem sys;
    SMatrix S;

    static GeneratorK make(const TimeGrid& g, const AuxSpace& a, const SubspaceLayout& l, double lambda) {
        KappaSpec s;
        s.family = KappaFamily::separable;
        s.lambda = lambda;
        s.width = 0.6;
        return GeneratorK(g, a, make_kappa(l, a, s));
    }

    Resonant() : K(make(grid, aux, layout, 1.5)), sys(K, layout), S(s_matrix(K, sys.group(), 90.0)) {}
};

const Resonant& resonant() {
    static const Resonant r;
    return r;
}

std::vector<LpVector> inner_probes(const SMatrix& S) {
    return gaussian_probes(S.grid, AuxSpace(S.d), -6.0, -2.0);
}

}  // namespace

TEST_CASE("gaussian probes") {
    const TimeGrid g(-16.0, 16.0, 256);
    const std::vector<LpVector> p = gaussian_probes(g, AuxSpace(2), -10.0, -2.0);
    CHECK(p.size() == 4);
    for (const LpVector& f : p) CHECK(f.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(gaussian_probes(g, AuxSpace(1), -1.0, -0.5), ValidationError);
}

TEST_CASE("wave operators") {
    const TimeGrid g(-24.0, 40.0, 256);
    const AuxSpace aux(1);
    const GeneratorK K0 = GeneratorK::free(g, aux);
    for (WaveSign s : {WaveSign::plus, WaveSign::minus}) {
        const WaveOperator w = wave_operator(K0, s, 30.0);
        CHECK(max_abs(w.matrix - CMatrix::Identity(256, 256)) <= 1e-12);
        CHECK(w.certificate_gap <= 1e-12);
        CHECK(w.cook_tail == 0.0);
    }

    const Resonant& r = resonant();
    const auto dim = static_cast<Eigen::Index>(r.grid.size());
    for (WaveSign s : {WaveSign::plus, WaveSign::minus}) {
        const WaveOperator w = wave_operator(r.K, r.sys.group(), s, 90.0, gaussian_probes(r.grid, r.aux, -10.0, -2.0));
        CHECK(max_abs(w.matrix.adjoint() * w.matrix - CMatrix::Identity(dim, dim)) <= 1e-8);
        CHECK(w.certificate_gap <= 1e-6);
        CHECK(w.cook_tail <= 1e-8);
    }
    // A state far left in D- has not met the interaction: W- psi = psi.
    const WaveOperator wm = wave_operator(r.K, r.sys.group(), WaveSign::minus, 90.0, gaussian_probes(r.grid, r.aux, -10.0, -2.0));
    for (const LpVector& p : gaussian_probes(r.grid, r.aux, -20.0, -12.0)) {
        CHECK((wm.matrix * p.flat() - p.flat()).norm() * std::sqrt(r.grid.spacing()) <= 1e-8);
    }
    // Too short a limit: the doubling certificate fails and reports the gap.
    try {
        wave_operator(r.K, r.sys.group(), WaveSign::plus, 10.0, gaussian_probes(r.grid, r.aux, -10.0, -2.0));
        FAIL("expected LimitNotReached");
    } catch (const LimitNotReached& e) {
        CHECK(e.gap() > 1e-6);
    }
}

TEST_CASE("free S-matrix is the identity kernel") {
    const TimeGrid g(-40.0, 88.0, 1024);
    const AuxSpace aux(2);
    const GeneratorK K0 = GeneratorK::free(g, aux);
    const SMatrix S = s_matrix(K0, 90.0);
    CHECK(S.convergence_gap <= 1e-12);
    const Eigen::Index ref = static_cast<Eigen::Index>(S.probe_nodes[S.reference]);
    for (Eigen::Index k = 0; k < S.kernel.rows(); ++k) {
        CMatrix block(2, 2);
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) block(a, b) = S.kernel(k, a * 2 + b);
        }
        if (k == ref) {
            CHECK(max_abs(block - CMatrix::Identity(2, 2)) <= 1e-12);
        } else {
            CHECK(max_abs(block) <= 1e-12);
        }
    }
    for (const CMatrix& s : S.spectral) CHECK(max_abs(s - CMatrix::Identity(2, 2)) <= 1e-12);
    CHECK(stationarity_defect(identity_s_matrix(g, aux), inner_probes(S)) <= 1e-6);
    CHECK(S.sigma_variation() <= 1e-12);
}

TEST_CASE("resonant S-matrix: unitary, stationary, intertwining, sigma-dependent") {
    const Resonant& r = resonant();
    CHECK(r.S.convergence_gap <= 1e-6);
    CHECK(r.S.unitarity_defect() <= 1e-6);
    CHECK(r.S.sigma_variation() > 1e-2);
    CHECK(stationarity_defect(r.S, inner_probes(r.S)) <= 1e-6);
    const double tau = 4.0 * r.grid.spacing();
    CHECK(intertwining_defect(r.S, gaussian_probes(r.grid, r.aux, -6.0, -2.5), tau) <= 1e-6);
    // States outside the probe window are refused.
    CHECK_THROWS_AS(r.S.apply(gaussian_probes(r.grid, r.aux, 10.0, 14.0)[0]), ValidationError);
}

TEST_CASE("truncated limit is a negative control") {
    const Resonant& r = resonant();
    SMatrixOptions o;
    o.require_convergence = false;
    const SMatrix half = s_matrix(r.K, r.sys.group(), 9.0, o);
    CHECK(half.convergence_gap > 1e-6);
    CHECK(stationarity_defect(half, inner_probes(half)) > 100.0 * stationarity_defect(r.S, inner_probes(r.S)));
    try {
        s_matrix(r.K, r.sys.group(), 9.0);
        FAIL("expected LimitNotReached");
    } catch (const LimitNotReached& e) {
        CHECK(e.gap() == doctest::Approx(half.convergence_gap));
    }
}

TEST_CASE("S-matrix window validation") {
    const Resonant& r = resonant();
    SMatrixOptions o;
    o.window_lo = -3.0;
    o.window_hi = 0.0;
    CHECK_THROWS_AS(s_matrix(r.K, r.sys.group(), 90.0, o), ValidationError);
    o.window_lo = -8.0;
    o.window_hi = 2.0;
    CHECK_THROWS_AS(s_matrix(r.K, r.sys.group(), 90.0, o), ValidationError);
    CHECK_THROWS_AS(s_matrix(r.K, r.sys.group(), 90.01), DomainError);
}

TEST_CASE("diagonal evolution has a sigma-independent S-hat") {
    const TimeGrid g(-40.0, 88.0, 1024);
    const AuxSpace aux(1);
    const SubspaceLayout layout(g, 8.0);
    KappaSpec s;
    s.family = KappaFamily::diagonal;
    s.lambda = 0.8;
    s.edge = 2.5;
    s.smooth = 0.7;
    const SMatrix S = s_matrix(GeneratorK(g, aux, make_kappa(layout, aux, s)), 90.0);
    CHECK(S.sigma_variation() <= 1e-6);
    CHECK(S.unitarity_defect() <= 1e-6);
    // The constant is the accumulated phase exp(-i int lambda b(t) dt).
    double phase = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double t = g.point(k);
        phase += 0.8 * 0.5 * (std::erf((t - 2.5) / 0.7) - std::erf((t - 8.0 + 2.5) / 0.7)) * g.spacing();
    }
    CHECK(std::abs(S.spectral[512](0, 0) - std::exp(cplx(0.0, -phase))) <= 1e-6);
}

TEST_CASE("continued singularities match the eigenvalues of B") {
    const Resonant& r = resonant();
    SingularityReport rep = continue_and_locate_singularities(r.S);
    CHECK(rep.fit_converged);
    REQUIRE(rep.singularities.size() == 1);
    const Singularity& z = rep.singularities[0];
    CHECK(z.confidence_radius > 0.0);
    CHECK(z.confidence_radius < 1e-3);
    match_eigenvalues(rep, generator_spectrum(r.sys));
    REQUIRE(rep.matches.size() == 1);
    CHECK(rep.unmatched_eigenvalues.empty());
    CHECK(rep.unmatched_singularities.empty());
    const MatchedPair& m = rep.matches[0];
    CHECK(m.within_tolerance);
    CHECK(m.distance <= 1e-2 * std::abs(m.eigenvalue.imag()));
    // Regression values of this discretization.
    CHECK(std::abs(z.position - cplx(2.4282109965, -0.4493085953)) <= 1e-6);
    CHECK(std::abs(m.eigenvalue - cplx(2.4282128204, -0.4493080133)) <= 1e-6);

    const GeneratorK K0 = GeneratorK::free(r.grid, r.aux);
    const SMatrix S0 = s_matrix(K0, 90.0);
    CHECK(continue_and_locate_singularities(S0).singularities.empty());
}

TEST_CASE("pole moves toward the real axis as the coupling grows") {
    const Resonant& r = resonant();
    std::vector<double> im;
    for (double lambda : {1.0, 1.25, 1.5}) {
        const LaxPhillipsSystem sys(Resonant::make(r.grid, r.aux, r.layout, lambda), r.layout);
        const SMatrix S = s_matrix(sys.generator(), sys.group(), 90.0);
        SingularityReport rep = continue_and_locate_singularities(S);
        match_eigenvalues(rep, generator_spectrum(sys));
        REQUIRE(rep.matches.size() == 1);
        im.push_back(std::abs(rep.matches[0].singularity.imag()));
    }
    CHECK(im[0] > im[1]);
    CHECK(im[1] > im[2]);
}

TEST_CASE("age expectation") {
    const TimeGrid g(-16.0, 16.0, 256);
    const AuxSpace aux(1);
    const SubspaceLayout layout(g, 8.0);
    CMatrix v = CMatrix::Zero(256, 1);
    v(static_cast<Eigen::Index>(g.nearest(2.0)), 0) = 1.0;
    CHECK(age_expectation(layout, LpVector(g, aux, v)) == doctest::Approx(2.0));

    const LpVector p = gaussian_probes(g, aux, 1.0, 5.0)[0];
    const double a0 = age_expectation(layout, p);
    for (double tau : {0.5, 1.0, 3.0}) CHECK(age_expectation(layout, translate(p, tau)) == doctest::Approx(a0 + tau));

    v.setZero();
    v(10, 0) = 1.0;
    CHECK_THROWS_AS(age_expectation(layout, LpVector(g, aux, v)), UndefinedAgeError);
}

TEST_CASE("age of a trapped state grows while it decays") {
    const Resonant& r = resonant();
    // Start just past t = 0 inside the K-subspace.
    CMatrix v = CMatrix::Zero(1024, 1);
    for (Eigen::Index k = 0; k < 1024; ++k) {
        const double t = r.grid.point(static_cast<std::size_t>(k));
        v(k, 0) = std::exp(-(t - 0.5) * (t - 0.5) / (2.0 * 0.04));
    }
    const LpVector psi(r.grid, r.aux, v);
    double prev = age_expectation(r.layout, psi);
    CHECK(prev < 0.6);
    for (int i = 1; i <= 40; ++i) {
        const LpVector moved = LpVector::from_flat(r.grid, r.aux, r.sys.group().apply(0.5 * i, psi.flat()));
        const double a = age_expectation(r.layout, moved);
        CHECK(a > prev);
        prev = a;
    }
}

TEST_CASE("incoming and outgoing time operators") {
    const TimeGrid g(-8.0, 8.0, 64);
    const AuxSpace aux(2);
    const AgeObservable tin = incoming_time_operator(g, aux);
    const CMatrix I = CMatrix::Identity(128, 128);
    CHECK(max_abs(outgoing_time_operator(I, tin).matrix() - tin.matrix()) <= 1e-14);

    // A constant auxiliary phase commutes with the node masks.
    CMatrix phase = CMatrix::Zero(128, 128);
    for (Eigen::Index k = 0; k < 64; ++k) {
        phase(2 * k, 2 * k) = std::exp(cplx(0.0, 0.4));
        phase(2 * k + 1, 2 * k + 1) = std::exp(cplx(0.0, -1.1));
    }
    const AgeObservable tph = outgoing_time_operator(phase, tin);
    CHECK(max_abs(tph.matrix() - tin.matrix()) <= 1e-14);
    CHECK(max_abs(tph.spectral_projection(1.0) - tin.spectral_projection(1.0)) <= 1e-14);

    // Nontrivial S from a kernel: the spectrum is preserved.
    const SubspaceLayout layout(g, 4.0);
    KappaSpec s;
    s.family = KappaFamily::separable;
    s.lambda = 1.0;
    s.width = 0.5;
    const UnitaryGroup G(GeneratorK(g, aux, make_kappa(layout, aux, s)));
    const CMatrix S = s_matrix_operator(G, g, 2, 4.0);
    const AgeObservable tout = outgoing_time_operator(S, tin);
    CHECK((tout.spectrum() - tin.spectrum()).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(max_abs(tout.matrix() - tin.matrix()) > 1e-3);
    CHECK_THROWS_AS(outgoing_time_operator(2.0 * I, tin), ValidationError);
}

TEST_CASE("superselection") {
    const TimeGrid g(-12.0, 20.0, 128);
    const AuxSpace aux(3);
    const SubspaceLayout layout(g, 8.0);
    std::mt19937_64 rng(2024);
    double worst_cross = 0.0, worst_res = 0.0;
    for (int i = 0; i < 100; ++i) {
        const LpVector psi = lptest::random_state(rng, g, aux);
        const CMatrix A = lptest::random_hermitian(rng, 3);
        const SuperselectionReport r = superselection_check(layout, psi, A);
        worst_cross = std::max(worst_cross, r.cross_terms);
        worst_res = std::max(worst_res, r.residual / std::max(1.0, std::abs(r.global)));
    }
    CHECK(worst_cross <= 1e-12);
    CHECK(worst_res <= 1e-12);

    const LpVector psi = lptest::random_state(rng, g, aux);
    const SuperselectionReport id = superselection_check(layout, psi, CMatrix::Identity(3, 3));
    CHECK(std::abs(id.d_minus + id.k_part + id.d_plus - psi.norm() * psi.norm()) <= 1e-12 * psi.norm() * psi.norm());

    const LpVector plus = layout.project(psi, SubspaceLayout::Part::d_plus);
    const SuperselectionReport rp = superselection_check(layout, plus, lptest::random_hermitian(rng, 3));
    CHECK(rp.d_minus == cplx(0.0, 0.0));
    CHECK(rp.k_part == cplx(0.0, 0.0));
    CHECK(rp.global == rp.d_plus);

    CHECK_THROWS_AS(superselection_check(layout, psi, CMatrix::Identity(2, 2)), ContractViolation);
    CMatrix full = CMatrix::Zero(384, 384);
    for (Eigen::Index k = 0; k < 128; ++k) full.block(3 * k, 3 * k, 3, 3) = CMatrix::Identity(3, 3);
    CHECK(superselection_check_full(layout, psi, full).cross_terms == 0.0);
    full(0, 3) = 0.5;
    CHECK_THROWS_AS(superselection_check_full(layout, psi, full), ContractViolation);
    full(0, 3) = 0.0;
    full(9, 9) = 2.0;
    CHECK_THROWS_AS(superselection_check_full(layout, psi, full), ContractViolation);
}
