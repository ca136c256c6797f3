#pragma once

#include <complex>
#include <vector>

namespace lpsim {

/// Faddeeva function w(z) = e^{-z^2} erfc(-iz) on the whole complex plane.
std::complex<double> faddeeva(std::complex<double> z);

/// Exponential integral E1(z) = int_z^inf e^{-u}/u du, principal branch.
std::complex<double> expint_e1(std::complex<double> z);

/// Gauss-Legendre nodes and weights on [-1, 1].
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// 30-point Gauss-Legendre rule (tabulated, full double precision).
const QuadratureRule& gauss_legendre_30();

/// Composite rule on the given panel breakpoints; appends mapped nodes and
/// weights to the output vectors.
void composite_nodes(const std::vector<double>& breaks, std::vector<double>& x,
                     std::vector<double>& w);

}  // namespace lpsim
