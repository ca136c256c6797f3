#pragma once

#include "lpsim/direct_integral.hpp"

namespace lpsim {

/// A = V diag(evals) V^dagger for Hermitian A (ascending eigenvalues).
void hermitian_eigensystem(const CMatrix& a, RVector& evals, CMatrix& evecs);

/// Largest singular value.
double spectral_norm(const CMatrix& m);

}  // namespace lpsim
