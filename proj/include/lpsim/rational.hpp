#pragma once

// Barycentric rational approximation by the AAA algorithm, with poles,
// residues and zeros of the fitted approximant.

#include <complex>

#include <Eigen/Dense>

namespace lpsim {

using cplx = std::complex<double>;

class BarycentricApproximant {
public:
    BarycentricApproximant() = default;
    BarycentricApproximant(Eigen::VectorXcd support, Eigen::VectorXcd values, Eigen::VectorXcd weights);

    cplx operator()(cplx z) const;
    Eigen::VectorXcd evaluate(const Eigen::VectorXcd& z) const;

    Eigen::Index degree() const noexcept { return support_.size() - 1; }
    const Eigen::VectorXcd& support() const noexcept { return support_; }
    const Eigen::VectorXcd& values() const noexcept { return values_; }
    const Eigen::VectorXcd& weights() const noexcept { return weights_; }

    /// Roots of the denominator sum w_j / (z - z_j).
    Eigen::VectorXcd poles() const;
    /// Roots of the numerator sum w_j f_j / (z - z_j).
    Eigen::VectorXcd zeros() const;
    /// Residue N(p) / D'(p) at each given pole.
    Eigen::VectorXcd residues(const Eigen::VectorXcd& poles) const;

private:
    Eigen::VectorXcd roots_of(const Eigen::VectorXcd& coeff) const;

    Eigen::VectorXcd support_, values_, weights_;
};

struct AaaResult {
    BarycentricApproximant approximant;
    double train_error = 0.0;    // max |f - r| on the fitting samples
    double holdout_error = 0.0;  // max |f - r| on the held-out samples
    bool converged = false;      // holdout_error <= tol * max |f|
};

/// AAA on (z, f). Every second sample is held out; the degree grows until the
/// held-out relative error drops below tol or max_degree is reached, and the
/// approximant with the smallest held-out error is returned.
AaaResult aaa_fit(const Eigen::VectorXcd& z, const Eigen::VectorXcd& f, double tol = 1e-10,
                  int max_degree = 100);

}  // namespace lpsim
