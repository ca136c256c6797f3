#include "lpsim/special.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

#include "lpsim/errors.hpp"

namespace lpsim {

namespace {

using cplx = std::complex<double>;

// Weideman's rational expansion in Z = (L + iz) / (L - iz).
constexpr int kFaddeevaTerms = 48;

struct FaddeevaTable {
    double L;
    std::array<double, kFaddeevaTerms> a;  // a[j] multiplies Z^j

    FaddeevaTable() {
        const int N = kFaddeevaTerms;
        const int M = 2 * N;
        const int M2 = 2 * M;
        L = std::sqrt(N / std::numbers::sqrt2);
        // f sampled at k = -M+1 .. M-1 with a leading zero, then fftshift.
        std::vector<double> f(M2, 0.0);
        for (int k = -M + 1; k < M; ++k) {
            const double t = L * std::tan(0.5 * k * std::numbers::pi / M);
            f[static_cast<std::size_t>(k + M)] = std::exp(-t * t) * (L * L + t * t);
        }
        std::vector<double> shifted(M2);
        for (int i = 0; i < M2; ++i) shifted[static_cast<std::size_t>((i + M) % M2)] = f[static_cast<std::size_t>(i)];
        for (int j = 1; j <= N; ++j) {
            double re = 0.0;
            for (int n = 0; n < M2; ++n) {
                re += shifted[static_cast<std::size_t>(n)] * std::cos(2.0 * std::numbers::pi * j * n / M2);
            }
            a[static_cast<std::size_t>(j - 1)] = re / M2;
        }
    }
};

const FaddeevaTable& faddeeva_table() {
    static const FaddeevaTable table;
    return table;
}

cplx faddeeva_upper(cplx z) {
    const FaddeevaTable& tab = faddeeva_table();
    const cplx i(0.0, 1.0);
    const cplx denom = tab.L - i * z;
    const cplx Z = (tab.L + i * z) / denom;
    cplx p = 0.0;
    for (int j = kFaddeevaTerms - 1; j >= 0; --j) p = p * Z + tab.a[static_cast<std::size_t>(j)];
    return 2.0 * p / (denom * denom) + (1.0 / std::sqrt(std::numbers::pi)) / denom;
}

}  // namespace

cplx faddeeva(cplx z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        throw DomainError("faddeeva: non-finite argument");
    }
    if (z.imag() >= 0.0) return faddeeva_upper(z);
    return 2.0 * std::exp(-z * z) - faddeeva_upper(-z);
}

cplx expint_e1(cplx z) {
    if (z == cplx(0.0, 0.0)) throw DomainError("expint_e1: logarithmic singularity at 0");
    if (std::abs(z) <= 2.0) {
        // Power series: E1 = -gamma - log z - sum (-z)^k / (k k!).
        cplx term = 1.0;
        cplx sum = 0.0;
        for (int k = 1; k < 200; ++k) {
            term *= -z / static_cast<double>(k);
            const cplx add = term / static_cast<double>(k);
            sum += add;
            if (std::abs(add) < 1e-17 * std::abs(sum)) break;
        }
        return -std::numbers::egamma - std::log(z) - sum;
    }
    // Continued fraction e^{-z} / (z + 1 - 1^2/(z + 3 - 2^2/(z + 5 - ...))), modified Lentz.
    constexpr double tiny = 1e-300;
    cplx b = z + 1.0;
    cplx c = 1.0 / tiny;
    cplx d = 1.0 / b;
    cplx h = d;
    for (int k = 1; k < 20000; ++k) {
        const double an = -static_cast<double>(k) * k;
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        const cplx delta = c * d;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) return h * std::exp(-z);
    }
    throw ConvergenceError("expint_e1: continued fraction did not converge");
}

const QuadratureRule& gauss_legendre_30() {
    static const QuadratureRule rule = [] {
        using G = boost::math::quadrature::gauss<double, 30>;
        QuadratureRule r;
        const auto& x = G::abscissa();
        const auto& w = G::weights();
        // Boost stores the nonnegative half; 30 is even so there is no zero node.
        for (std::size_t i = x.size(); i-- > 0;) {
            r.nodes.push_back(-x[i]);
            r.weights.push_back(w[i]);
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            r.nodes.push_back(x[i]);
            r.weights.push_back(w[i]);
        }
        return r;
    }();
    return rule;
}

void composite_nodes(const std::vector<double>& breaks, std::vector<double>& x,
                     std::vector<double>& w) {
    const QuadratureRule& rule = gauss_legendre_30();
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double a = breaks[p];
        const double b = breaks[p + 1];
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            x.push_back(mid + half * rule.nodes[i]);
            w.push_back(half * rule.weights[i]);
        }
    }
}

}  // namespace lpsim
