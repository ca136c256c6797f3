#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "lpsim/errors.hpp"
#include "lpsim/friedrichs.hpp"

using namespace lpsim;

namespace {

const FriedrichsModel flat_model() { return FriedrichsModel(1.0, Coupling::flat(0.2)); }
const FriedrichsModel threshold_model() { return FriedrichsModel(2.0, Coupling::half_line_sqrt(0.1, 10.0)); }

}  // namespace

TEST_CASE("model validation") {
    CHECK_THROWS_AS(Coupling::flat(0.0), ValidationError);
    CHECK_THROWS_AS(Coupling::half_line_sqrt(0.1, -1.0), ValidationError);
    CHECK_THROWS_AS(FriedrichsModel(-1.0, Coupling::half_line_sqrt(0.1, 10.0)), ValidationError);
    CHECK_THROWS_AS(FriedrichsModel(NAN, Coupling::flat(0.1)), ValidationError);
    CHECK(flat_model().continuum_support().whole_line());
    CHECK(threshold_model().continuum_support().lower == 0.0);
}

TEST_CASE("flat self-energy is -i gamma/2 on the upper half-plane") {
    const FriedrichsModel m = flat_model();
    for (cplx z : {cplx(0.3, 0.1), cplx(-4.0, 2.0), cplx(10.0, 1e-3)}) {
        CHECK(std::abs(self_energy(m, z, Sheet::first).sigma - cplx(0.0, -0.1)) <= 1e-12);
        CHECK(std::abs(self_energy(m, std::conj(z), Sheet::second).sigma - cplx(0.0, -0.1)) <= 1e-12);
    }
    // Weak-coupling limit.
    const FriedrichsModel weak(1.0, Coupling::flat(1e-12));
    CHECK(std::abs(self_energy(weak, cplx(0.0, 1.0), Sheet::first).sigma) <= 1e-12);
}

TEST_CASE("threshold self-energy: reference values and sign") {
    const FriedrichsModel m = threshold_model();
    // mpmath quadrature of lambda^2 sqrt(w) e^{-w/omega_c} / (z - w) over w >= 0.
    const cplx ref(-0.0399575597022422925, -0.0246641776906911088);
    CHECK(std::abs(self_energy(m, cplx(1.0, 0.5), Sheet::first).sigma - ref) <= 1e-12);
    const cplx below = self_energy(m, cplx(-1.0, 0.0), Sheet::first).sigma;
    CHECK(below.real() < 0.0);
    CHECK(std::abs(below.imag()) <= 1e-14);
    CHECK_THROWS_AS(self_energy(m, cplx(1.0, 0.0), Sheet::first), BranchCutError);
}

TEST_CASE("Herglotz property and reflection on the first sheet") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> re(-5.0, 15.0), im(0.01, 5.0);
    for (const FriedrichsModel& m : {flat_model(), threshold_model()}) {
        for (int i = 0; i < 100; ++i) {
            const cplx z(re(rng), im(rng));
            const cplx s = self_energy(m, z, Sheet::first).sigma;
            CHECK(s.imag() * z.imag() < 0.0);
            const cplx sb = self_energy(m, std::conj(z), Sheet::first).sigma;
            CHECK(std::abs(sb - std::conj(s)) <= 1e-12 * std::max(1.0, std::abs(s)));
        }
    }
}

TEST_CASE("second sheet continues the first across the cut") {
    const FriedrichsModel m = threshold_model();
    // Approaching omega = 1.5 from above on sheet I equals approaching from below on sheet II.
    const cplx up = self_energy(m, cplx(1.5, 1e-7), Sheet::first).sigma;
    const cplx down = self_energy(m, cplx(1.5, -1e-7), Sheet::second).sigma;
    CHECK(std::abs(up - down) <= 1e-6);
}

TEST_CASE("resonance poles") {
    const ResonancePole flat = find_resonance_pole(flat_model());
    CHECK(std::abs(flat.position - cplx(1.0, -0.1)) <= 1e-8);
    CHECK(std::abs(flat.residue - 1.0) <= 1e-10);

    // Newton root independently found with mpmath findroot on the continued equation.
    const ResonancePole p = find_resonance_pole(threshold_model());
    CHECK(std::abs(p.position - cplx(1.96308688651238763, -0.0364875049818842017)) <= 1e-10);
    CHECK(p.position.imag() < 0.0);
    CHECK(std::abs(p.residue) > 0.0);
    const double pert = -std::numbers::pi * threshold_model().coupling().density(2.0);
    CHECK(std::abs(p.position.imag() - pert) <= 0.1 * std::abs(pert));

    // Decoupled limit: the pole approaches e0 from below.
    const ResonancePole weak = find_resonance_pole(FriedrichsModel(2.0, Coupling::half_line_sqrt(1e-4, 10.0)));
    CHECK(std::abs(weak.position - 2.0) <= 1e-6);
    CHECK(weak.position.imag() < 0.0);
}

TEST_CASE("flat survival amplitude is the Wigner-Weisskopf exponential") {
    const FriedrichsModel m = flat_model();
    std::vector<double> t;
    for (int i = 0; i <= 100; ++i) t.push_back(0.5 * i);
    const std::vector<cplx> a = survival_curve(m, t, SurvivalMethod::spectral_quadrature);
    const std::vector<cplx> b = survival_curve(m, t, SurvivalMethod::pole_plus_background);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const cplx exact = std::exp(cplx(-0.1 * t[i], -t[i]));
        CHECK(std::abs(a[i] - exact) <= 1e-6);
        CHECK(std::abs(b[i] - exact) <= 1e-6);
        CHECK(std::abs(decay_probability(m, t[i]) - std::exp(-0.2 * t[i])) <= 1e-6);
    }
    CHECK(std::abs(survival_amplitude(m, 0.0, SurvivalMethod::spectral_quadrature) - 1.0) <= 1e-8);
    CHECK_THROWS_AS(survival_amplitude(m, -1.0, SurvivalMethod::spectral_quadrature), DomainError);
}

TEST_CASE("threshold model: normalization, bounds and method agreement") {
    const FriedrichsModel m = threshold_model();
    std::vector<double> t;
    for (int i = 0; i <= 80; ++i) t.push_back(2.5 * i);
    const std::vector<cplx> a = survival_curve(m, t, SurvivalMethod::spectral_quadrature);
    const std::vector<cplx> b = survival_curve(m, t, SurvivalMethod::pole_plus_background);
    CHECK(std::abs(a[0] - 1.0) <= 1e-8);
    CHECK(std::abs(b[0] - 1.0) <= 1e-8);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(std::abs(a[i] - b[i]) <= 1e-6);
        CHECK(std::norm(a[i]) <= 1.0 + 1e-9);
    }
    // The level is embedded in the continuum: no bound state below threshold.
    CHECK(bound_states(m).empty());
    CHECK(spectral_weight(m, -1.0) == 0.0);
    CHECK(spectral_weight(m, 2.0) > 0.0);
}

TEST_CASE("threshold model: t^2 start and t^-3/2 tail") {
    const FriedrichsModel m = threshold_model();
    std::vector<double> ts, ys, tl, yl;
    for (int i = 0; i < 20; ++i) ts.push_back(1e-4 * std::pow(100.0, i / 19.0));
    for (const cplx& z : survival_curve(m, ts, SurvivalMethod::spectral_quadrature)) ys.push_back(1.0 - std::norm(z));
    CHECK(std::abs(loglog_slope(ts, ys) - 2.0) <= 0.05);
    for (int i = 0; i < 15; ++i) tl.push_back(2000.0 * std::pow(20.0, i / 14.0));
    for (const cplx& z : survival_curve(m, tl, SurvivalMethod::pole_plus_background)) yl.push_back(std::abs(z));
    CHECK(std::abs(loglog_slope(tl, yl) + 1.5) <= 0.2);
}

TEST_CASE("bound state below a finite threshold") {
    // Strong coupling with e0 near the threshold pulls a real level below 0.
    const FriedrichsModel m(0.05, Coupling::half_line_sqrt(1.0, 10.0));
    const std::vector<ResonancePole> bs = bound_states(m);
    REQUIRE(bs.size() == 1);
    const double E = bs[0].position.real();
    CHECK(E < 0.0);
    const cplx F = cplx(E) - 0.05 - self_energy(m, cplx(E, 0.0), Sheet::first).sigma;
    CHECK(std::abs(F) <= 1e-10);
    CHECK(bs[0].residue.real() > 0.0);
    CHECK(bs[0].residue.real() < 1.0);
}

TEST_CASE("loglog slope") {
    const std::vector<double> x{1.0, 2.0, 4.0, 8.0};
    const std::vector<double> y{3.0, 12.0, 48.0, 192.0};
    CHECK(loglog_slope(x, y) == doctest::Approx(2.0));
    CHECK_THROWS_AS(loglog_slope(std::vector<double>{1.0}, std::vector<double>{1.0}), DimensionError);
    CHECK_THROWS_AS(loglog_slope(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, -1.0}), DomainError);
}
