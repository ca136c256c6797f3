#include "lpsim/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "lpsim/errors.hpp"

#include <algorithm>
#include <string>
#include <vector>

#ifdef LPSIM_HAVE_LAPACKE
#include <lapacke.h>
#endif

namespace lpsim {

void hermitian_eigensystem(const CMatrix& a, RVector& evals, CMatrix& evecs) {
    if (a.rows() != a.cols()) throw DimensionError("eigensystem of a non-square matrix");
#ifdef LPSIM_HAVE_LAPACKE
    // zheevr (MRRR); zheevd from some OpenBLAS builds returns garbage for n >= ~500.
    const auto n = static_cast<lapack_int>(a.rows());
    CMatrix work = a;
    evals.resize(a.rows());
    evecs.resize(a.rows(), a.rows());
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(std::max<lapack_int>(n, 1)));
    lapack_int found = 0;
    const lapack_int info = LAPACKE_zheevr(
        LAPACK_COL_MAJOR, 'V', 'A', 'L', n, reinterpret_cast<lapack_complex_double*>(work.data()), n, 0.0,
        0.0, 0, 0, 0.0, &found, evals.data(), reinterpret_cast<lapack_complex_double*>(evecs.data()), n,
        support.data());
    if (info != 0 || found != n) throw ConvergenceError("zheevr failed with info " + std::to_string(info));
#else
    Eigen::SelfAdjointEigenSolver<CMatrix> es(a);
    if (es.info() != Eigen::Success) throw ConvergenceError("Hermitian eigensolver failed");
    evals = es.eigenvalues();
    evecs = es.eigenvectors();
#endif
}

double spectral_norm(const CMatrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::BDCSVD<CMatrix> svd(m);
    return svd.singularValues()(0);
}

}  // namespace lpsim
