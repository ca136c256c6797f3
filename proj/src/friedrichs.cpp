#include "lpsim/friedrichs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "lpsim/errors.hpp"
#include "lpsim/special.hpp"

namespace lpsim {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// Half-line closed form in u = sqrt(-z / omega_c):
// Sigma = -lam^2 sqrt(wc) [sqrt(pi) - pi u w(iu)].
cplx half_line_sigma(const Coupling& c, cplx u) {
    const double pre = c.lambda * c.lambda * std::sqrt(c.omega_c);
    return -pre * (std::sqrt(kPi) - kPi * u * faddeeva(kI * u));
}

cplx half_line_dsigma(const Coupling& c, cplx u) {
    const double pre = c.lambda * c.lambda * std::sqrt(c.omega_c);
    const cplx dsdu = pre * kPi * (faddeeva(kI * u) * (1.0 + 2.0 * u * u) - 2.0 * u / std::sqrt(kPi));
    return dsdu * (-1.0 / (2.0 * c.omega_c * u));
}

// Branch variable u for the requested sheet. The first sheet uses the
// principal root (Re u >= 0); the second sheet flips its sign.
cplx half_line_u(const Coupling& c, cplx z, Sheet sheet) {
    const cplx u = std::sqrt(-z / c.omega_c);
    return sheet == Sheet::first ? u : -u;
}

void check_first_sheet(const FriedrichsModel& m, cplx z) {
    const ContinuumSupport s = m.continuum_support();
    if (z.imag() == 0.0 && (s.whole_line() || z.real() >= s.lower)) {
        throw BranchCutError("first-sheet self-energy requested on the continuum cut at z = " +
                             std::to_string(z.real()));
    }
}

// Breakpoints from a to b with local step bounded by max_step(x).
template <class F>
std::vector<double> march(double a, double b, F max_step) {
    std::vector<double> br{a};
    double x = a;
    while (x < b) {
        const double step = std::max(max_step(x), 1e-12 * std::max(1.0, std::abs(b - a)));
        x = std::min(b, x + step);
        br.push_back(x);
    }
    return br;
}

cplx resolvent(const FriedrichsModel& m, cplx z, Sheet sheet) {
    return 1.0 / (z - m.e0() - self_energy(m, z, sheet).sigma);
}

// Exact contribution of the Lorentzian weight beyond |omega - e0| > L.
cplx flat_tail(double e0, double a, double L, double t) {
    if (t == 0.0) return 1.0 - (2.0 / kPi) * std::atan(L / a);
    auto T = [&](cplx b) {
        return std::exp(-kI * (e0 + b) * t) * (expint_e1(kI * t * (L - b)) - expint_e1(-kI * t * (L + b)));
    };
    return (T(kI * a) - T(-kI * a)) / (2.0 * kPi * kI);
}

struct SpectralNodes {
    std::vector<double> omega;
    std::vector<double> weight;  // w(omega) times the quadrature weight
};

SpectralNodes spectral_nodes(const FriedrichsModel& m, double t_max) {
    const Coupling& c = m.coupling();
    const double period = t_max > 0.0 ? 2.0 * kPi / t_max : std::numeric_limits<double>::infinity();
    SpectralNodes out;
    std::vector<double> x, w;
    if (c.family == CouplingFamily::flat) {
        const double a = 0.5 * c.gamma;
        const double L = 50.0 * c.gamma;
        const double e0 = m.e0();
        auto br = march(e0 - L, e0 + L, [&](double om) {
            const double d = std::abs(om - e0);
            return std::min(0.5 * period, d <= 10.0 * a ? 0.25 * a : 0.5 * d);
        });
        composite_nodes(br, x, w);
        out.omega = x;
        out.weight.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out.weight[i] = w[i] * spectral_weight(m, x[i]);
        return out;
    }
    // Half line: omega = s^2 removes the sqrt threshold.
    const ResonancePole pole = find_resonance_pole(m);
    const double re_p = pole.position.real();
    const double im_p = std::abs(pole.position.imag());
    const double omega_max = std::max(re_p, 0.0) + 50.0 * c.omega_c;
    const double S = std::sqrt(omega_max);
    auto br = march(0.0, S, [&](double s) {
        const double om = s * s;
        const double slope = 2.0 * s + 1e-3;
        const double d = std::abs(om - re_p);
        const double domega = std::min(0.5 * period, d <= 10.0 * im_p ? 0.25 * im_p : 0.5 * d);
        return std::min({0.05 * std::sqrt(c.omega_c), domega / slope});
    });
    composite_nodes(br, x, w);
    out.omega.resize(x.size());
    out.weight.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double om = x[i] * x[i];
        out.omega[i] = om;
        out.weight[i] = w[i] * 2.0 * x[i] * spectral_weight(m, om);
    }
    return out;
}

cplx spectral_amplitude(const FriedrichsModel& m, const SpectralNodes& nodes,
                        const std::vector<ResonancePole>& bound, double t) {
    cplx acc = 0.0;
    for (std::size_t i = 0; i < nodes.omega.size(); ++i) {
        acc += nodes.weight[i] * std::exp(cplx(0.0, -nodes.omega[i] * t));
    }
    const Coupling& c = m.coupling();
    if (c.family == CouplingFamily::flat) {
        acc += flat_tail(m.e0(), 0.5 * c.gamma, 50.0 * c.gamma, t);
    }
    for (const ResonancePole& b : bound) acc += b.residue * std::exp(-kI * b.position * t);
    return acc;
}

// Background integral along the negative imaginary axis from the threshold:
// -(1/2pi) int_0^inf [R_I(-iy) - R_II(-iy)] e^{-yt} dy with y = s^2.
cplx background(const FriedrichsModel& m, double t) {
    const Coupling& c = m.coupling();
    const double Y = t > 0.0 ? std::min(40.0 / t, 1e6) : 1e6;
    const double S = std::sqrt(Y);
    auto br = march(0.0, S, [&](double s) {
        return std::min({S / 40.0, 0.1 * std::sqrt(c.omega_c), kPi * c.omega_c / (2.0 * s + 1e-300)});
    });
    std::vector<double> x, w;
    composite_nodes(br, x, w);
    cplx acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double y = x[i] * x[i];
        if (y == 0.0) continue;
        const cplx z(0.0, -y);
        const cplx diff = resolvent(m, z, Sheet::first) - resolvent(m, z, Sheet::second);
        acc += w[i] * 2.0 * x[i] * diff * std::exp(-y * t);
    }
    return -acc / (2.0 * kPi);
}

}  // namespace

Coupling Coupling::flat(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("flat coupling needs gamma > 0");
    Coupling c;
    c.family = CouplingFamily::flat;
    c.gamma = gamma;
    return c;
}

Coupling Coupling::half_line_sqrt(double lambda, double omega_c) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("half_line_sqrt needs lambda > 0");
    if (!(omega_c > 0.0) || !std::isfinite(omega_c)) throw ValidationError("half_line_sqrt needs omega_c > 0");
    Coupling c;
    c.family = CouplingFamily::half_line_sqrt;
    c.lambda = lambda;
    c.omega_c = omega_c;
    return c;
}

double Coupling::density(double omega) const {
    if (family == CouplingFamily::flat) return gamma / (2.0 * kPi);
    if (omega < 0.0) return 0.0;
    return lambda * lambda * std::sqrt(omega) * std::exp(-omega / omega_c);
}

cplx Coupling::density(cplx z) const {
    if (family == CouplingFamily::flat) return gamma / (2.0 * kPi);
    return lambda * lambda * std::sqrt(z) * std::exp(-z / omega_c);
}

std::string Coupling::describe() const {
    std::ostringstream os;
    if (family == CouplingFamily::flat) {
        os << "flat(gamma=" << gamma << ")";
    } else {
        os << "half_line_sqrt(lambda=" << lambda << ", omega_c=" << omega_c << ")";
    }
    return os.str();
}

bool ContinuumSupport::whole_line() const { return std::isinf(lower); }

FriedrichsModel::FriedrichsModel(double e0, Coupling coupling) : e0_(e0), coupling_(coupling) {
    if (!std::isfinite(e0)) throw ValidationError("e0 must be finite");
    if (coupling.family == CouplingFamily::half_line_sqrt && !(e0 > 0.0)) {
        throw ValidationError("half_line_sqrt requires e0 > 0 (level embedded in the continuum)");
    }
    if (coupling.family == CouplingFamily::flat && !(coupling.gamma > 0.0)) {
        throw ValidationError("flat coupling needs gamma > 0");
    }
    if (coupling.family == CouplingFamily::half_line_sqrt &&
        (!(coupling.lambda > 0.0) || !(coupling.omega_c > 0.0))) {
        throw ValidationError("half_line_sqrt needs lambda > 0 and omega_c > 0");
    }
}

ContinuumSupport FriedrichsModel::continuum_support() const {
    if (coupling_.family == CouplingFamily::flat) return {-std::numeric_limits<double>::infinity()};
    return {0.0};
}

SelfEnergyEval self_energy(const FriedrichsModel& m, cplx z, Sheet sheet) {
    if (!finite(z)) throw DomainError("self_energy: non-finite z");
    if (sheet == Sheet::first) check_first_sheet(m, z);
    const Coupling& c = m.coupling();
    if (c.family == CouplingFamily::flat) {
        // First sheet: -i gamma/2 above the axis, +i gamma/2 below; the second
        // sheet swaps the half-planes (on the real axis it is the value from above).
        const double half = 0.5 * c.gamma;
        const bool upper = z.imag() > 0.0;
        const bool minus = (sheet == Sheet::first) ? upper : !upper;
        return {z, cplx(0.0, minus ? -half : half), sheet};
    }
    return {z, half_line_sigma(c, half_line_u(c, z, sheet)), sheet};
}

cplx self_energy_derivative(const FriedrichsModel& m, cplx z, Sheet sheet) {
    if (sheet == Sheet::first) check_first_sheet(m, z);
    const Coupling& c = m.coupling();
    if (c.family == CouplingFamily::flat) return 0.0;
    if (z == cplx(0.0, 0.0)) throw DomainError("self-energy derivative is singular at the threshold");
    return half_line_dsigma(c, half_line_u(c, z, sheet));
}

ResonancePole find_resonance_pole(const FriedrichsModel& m) {
    auto F = [&](cplx z) { return z - m.e0() - self_energy(m, z, Sheet::second).sigma; };
    auto dF = [&](cplx z) { return 1.0 - self_energy_derivative(m, z, Sheet::second); };

    cplx z = cplx(m.e0(), -kPi * m.coupling().density(m.e0()));
    cplx z_prev = z;
    cplx f_prev = 0.0;
    std::ostringstream trace;
    for (int it = 1; it <= 100; ++it) {
        const cplx f = F(z);
        trace << "  iter " << it << ": z = " << z << ", |F| = " << std::abs(f) << '\n';
        if (std::abs(f) < 1e-14 * std::max(1.0, std::abs(z))) {
            if (!(z.imag() < 0.0)) break;
            return {z, 1.0 / dF(z), it};
        }
        cplx d = dF(z);
        if (!finite(d) || std::abs(d) == 0.0) {
            // Secant fallback through the previous iterate.
            d = (it > 1 && z != z_prev) ? (f - f_prev) / (z - z_prev) : cplx(1.0, 0.0);
        }
        z_prev = z;
        f_prev = f;
        z -= f / d;
        if (!finite(z)) break;
    }
    const cplx f = finite(z) ? F(z) : cplx(std::numeric_limits<double>::infinity());
    if (std::abs(f) < 1e-10 && z.imag() < 0.0) return {z, 1.0 / dF(z), 100};
    throw ConvergenceError("resonance pole search did not converge for " + m.coupling().describe() +
                           "\n" + trace.str());
}

std::vector<ResonancePole> bound_states(const FriedrichsModel& m) {
    const Coupling& c = m.coupling();
    if (c.family == CouplingFamily::flat) return {};
    // f(E) = E - e0 - Sigma(E) is increasing on E < 0.
    auto f = [&](double E) { return E - m.e0() - self_energy(m, cplx(E, 0.0), Sheet::first).sigma.real(); };
    const double f0 = -m.e0() + c.lambda * c.lambda * std::sqrt(kPi * c.omega_c);
    if (!(f0 > 0.0)) return {};
    double hi = -1e-300;
    double lo = -1.0;
    while (f(lo) > 0.0) {
        lo *= 2.0;
        if (lo < -1e12) throw ConvergenceError("bound-state bracket search failed");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? hi : lo) = mid;
    }
    const double E = 0.5 * (lo + hi);
    const cplx res = 1.0 / (1.0 - self_energy_derivative(m, cplx(E, 0.0), Sheet::first));
    return {ResonancePole{cplx(E, 0.0), res, 0}};
}

double spectral_weight(const FriedrichsModel& m, double omega) {
    const Coupling& c = m.coupling();
    cplx sigma;
    if (c.family == CouplingFamily::flat) {
        sigma = cplx(0.0, 0.5 * c.gamma);
    } else {
        if (omega <= 0.0) return 0.0;
        // Boundary value from below the cut: u = i sqrt(omega / omega_c).
        sigma = half_line_sigma(c, cplx(0.0, std::sqrt(omega / c.omega_c)));
    }
    return (1.0 / (omega - m.e0() - sigma)).imag() / kPi;
}

std::vector<cplx> survival_curve(const FriedrichsModel& m, std::span<const double> t,
                                 SurvivalMethod method) {
    for (double ti : t) {
        if (!(ti >= 0.0) || !std::isfinite(ti)) throw DomainError("survival amplitude needs finite t >= 0");
    }
    std::vector<cplx> out;
    out.reserve(t.size());
    const std::vector<ResonancePole> bound = bound_states(m);
    if (method == SurvivalMethod::spectral_quadrature) {
        const double t_max = t.empty() ? 0.0 : *std::max_element(t.begin(), t.end());
        const SpectralNodes nodes = spectral_nodes(m, t_max);
        for (double ti : t) out.push_back(spectral_amplitude(m, nodes, bound, ti));
        return out;
    }
    const ResonancePole pole = find_resonance_pole(m);
    const bool has_branch_point = !m.continuum_support().whole_line();
    for (double ti : t) {
        cplx a = pole.residue * std::exp(-kI * pole.position * ti);
        if (has_branch_point) a += background(m, ti);
        for (const ResonancePole& b : bound) a += b.residue * std::exp(-kI * b.position * ti);
        out.push_back(a);
    }
    return out;
}

cplx survival_amplitude(const FriedrichsModel& m, double t, SurvivalMethod method) {
    const double ts[1] = {t};
    return survival_curve(m, ts, method).front();
}

double decay_probability(const FriedrichsModel& m, double t, SurvivalMethod method) {
    return std::norm(survival_amplitude(m, t, method));
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw DimensionError("loglog_slope needs >= 2 paired samples");
    double mx = 0.0, my = 0.0;
    const auto n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("loglog_slope needs positive samples");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

}  // namespace lpsim
