#pragma once

// Lee-Friedrichs model: a discrete level e0 coupled to a continuum by g(omega).
// Reduced resolvent R'(z) = 1 / (z - e0 - Sigma(z)).

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace lpsim {

using cplx = std::complex<double>;

enum class CouplingFamily { flat, half_line_sqrt };

/// Coupling density |g(omega)|^2.
///   flat(gamma):                 gamma / 2pi on the whole real line
///   half_line_sqrt(lam, omega_c): lam^2 sqrt(omega) e^{-omega/omega_c} on omega >= 0
struct Coupling {
    CouplingFamily family = CouplingFamily::flat;
    double gamma = 0.0;
    double lambda = 0.0;
    double omega_c = 1.0;

    static Coupling flat(double gamma);
    static Coupling half_line_sqrt(double lambda, double omega_c);

    /// |g(omega)|^2 for real omega (zero off the support).
    double density(double omega) const;
    /// Analytic extension of |g|^2 (principal sqrt for the half-line family).
    cplx density(cplx z) const;
    std::string describe() const;
};

/// Continuum support [lower, +inf); lower = -inf for the flat family.
struct ContinuumSupport {
    double lower;
    bool whole_line() const;
};

class FriedrichsModel {
public:
    FriedrichsModel(double e0, Coupling coupling);

    double e0() const noexcept { return e0_; }
    const Coupling& coupling() const noexcept { return coupling_; }
    ContinuumSupport continuum_support() const;

private:
    double e0_;
    Coupling coupling_;
};

enum class Sheet { first, second };

struct SelfEnergyEval {
    cplx z;
    cplx sigma;
    Sheet sheet;
};

/// First sheet: Sigma(z) = int |g(w)|^2 / (z - w) dw. Second sheet: the other
/// branch of the two-sheeted continuation; in the lower half-plane it equals
/// Sigma(z) - 2 pi i |g(z)|^2.
SelfEnergyEval self_energy(const FriedrichsModel& m, cplx z, Sheet sheet);

/// d Sigma / dz on the requested sheet.
cplx self_energy_derivative(const FriedrichsModel& m, cplx z, Sheet sheet);

struct ResonancePole {
    cplx position;
    cplx residue;
    int iterations = 0;
};

/// Newton iteration for z - e0 - Sigma_II(z) = 0 from e0 - i pi |g(e0)|^2.
/// Residue is 1 / (1 - Sigma_II'(z)).
ResonancePole find_resonance_pole(const FriedrichsModel& m);

/// Real solutions of E - e0 - Sigma(E) = 0 below the continuum threshold,
/// with residue 1 / (1 - Sigma'(E)) stored in the pole record.
std::vector<ResonancePole> bound_states(const FriedrichsModel& m);

/// w(omega) = (1/pi) Im 1 / (omega - i0 - e0 - Sigma(omega - i0)) for the
/// absolutely continuous part.
double spectral_weight(const FriedrichsModel& m, double omega);

enum class SurvivalMethod { spectral_quadrature, pole_plus_background };

/// A(t) = (psi, e^{-iHt} psi) for the bare level.
cplx survival_amplitude(const FriedrichsModel& m, double t, SurvivalMethod method);

/// Same, for many t at once. The quadrature grid is built once for max(t).
std::vector<cplx> survival_curve(const FriedrichsModel& m, std::span<const double> t,
                                 SurvivalMethod method);

/// p(t) = |A(t)|^2.
double decay_probability(const FriedrichsModel& m, double t,
                         SurvivalMethod method = SurvivalMethod::spectral_quadrature);

/// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace lpsim
