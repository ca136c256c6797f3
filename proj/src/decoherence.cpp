#include "lpsim/decoherence.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "lpsim/errors.hpp"

namespace lpsim {

namespace {

bool hermitian(const CMatrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

CMatrix expm_hermitian(const CMatrix& H, double step) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
    const CVector phase = (es.eigenvalues().cast<cplx>() * cplx(0.0, -step)).array().exp().matrix();
    return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

long lattice_steps(const TimeGrid& grid, double tau) {
    const double steps = tau / grid.spacing();
    const double r = std::round(steps);
    if (!(tau >= 0.0) || std::abs(steps - r) > 1e-9 * std::max(1.0, std::abs(steps))) {
        throw DomainError("tau must be a nonnegative multiple of the grid spacing");
    }
    return static_cast<long>(r);
}

}  // namespace

ReducedDensity::ReducedDensity(AuxSpace aux, CMatrix matrix) : aux_(aux), matrix_(std::move(matrix)) {
    const int d = aux_.dimension;
    if (matrix_.rows() != d || matrix_.cols() != d) throw DimensionError("density must be d x d");
    if (!hermitian(matrix_, 1e-12)) throw ValidationError("density must be Hermitian");
    if (std::abs(matrix_.trace() - cplx(1.0, 0.0)) > 1e-12) throw ValidationError("density must have unit trace");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(matrix_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12) throw ValidationError("density must be positive semidefinite");
}

cplx ReducedDensity::expectation(const CMatrix& A) const {
    if (A.rows() != aux_.dimension || A.cols() != aux_.dimension) throw DimensionError("operator must be d x d");
    return (matrix_ * A).trace();
}

ReducedDensity reduce(const LpVector& psi) {
    const double nrm = psi.norm();
    if (!(nrm > 0.0)) throw DomainError("cannot reduce the zero vector");
    // Rows are psi_k^T, so V^T conj(V) = sum_k psi_k psi_k^dagger.
    const CMatrix& v = psi.values();
    CMatrix rho = v.transpose() * v.conjugate();
    rho *= psi.grid().spacing() / (nrm * nrm);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return ReducedDensity(psi.aux(), std::move(rho));
}

double purity(const ReducedDensity& rho) { return (rho.matrix() * rho.matrix()).trace().real(); }

PurityWitness effectively_pure_check(const LpVector& psi) {
    if (!(psi.norm() > 0.0)) throw DomainError("purity check of the zero vector");
    Eigen::JacobiSVD<CMatrix> svd(psi.values(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector s = svd.singularValues();
    const double ratio = s.size() > 1 ? s[1] / s[0] : 0.0;
    // values = s0 u0 v0^dagger, so psi_k = (s0 u0_k) conj(v0).
    PurityWitness w{ratio <= 1e-10, ratio, svd.matrixU().col(0) * s[0], svd.matrixV().col(0).conjugate()};
    return w;
}

TimeDependentHamiltonian::TimeDependentHamiltonian(TimeGrid grid, std::vector<CMatrix> per_node)
    : grid_(grid), d_(0), h_(std::move(per_node)) {
    if (h_.size() != grid_.size()) throw DimensionError("one Hamiltonian per grid node is required");
    d_ = static_cast<int>(h_.front().rows());
    cells_.reserve(h_.size());
    for (std::size_t k = 0; k < h_.size(); ++k) {
        if (h_[k].rows() != d_ || h_[k].cols() != d_) throw DimensionError("H(t) must be d x d at every node");
        if (!hermitian(h_[k], 1e-12)) {
            throw ValidationError("H(t) is not Hermitian at node " + std::to_string(k));
        }
        cells_.push_back(expm_hermitian(h_[k], grid_.spacing()));
    }
}

TimeDependentHamiltonian TimeDependentHamiltonian::constant(const TimeGrid& grid, const CMatrix& H) {
    return TimeDependentHamiltonian(grid, std::vector<CMatrix>(grid.size(), H));
}

TimeDependentHamiltonian TimeDependentHamiltonian::switching(const TimeGrid& grid, const CMatrix& H_before,
                                                             const CMatrix& H_after, double t_switch) {
    std::vector<CMatrix> h;
    h.reserve(grid.size());
    const double eps = 1e-9 * grid.spacing();
    for (std::size_t k = 0; k < grid.size(); ++k) h.push_back(grid.point(k) < t_switch - eps ? H_before : H_after);
    return TimeDependentHamiltonian(grid, std::move(h));
}

CMatrix fibre_propagator(const TimeDependentHamiltonian& H, std::size_t node, double tau) {
    const long m = lattice_steps(H.grid(), tau);
    const auto n = static_cast<long>(H.grid().size());
    CMatrix W = CMatrix::Identity(H.dimension(), H.dimension());
    for (long j = 0; j < m; ++j) W = H.cell_propagator(static_cast<std::size_t>((static_cast<long>(node) + j) % n)) * W;
    return W;
}

LpVector nonstationary_evolve(const LpVector& psi, const TimeDependentHamiltonian& H, double tau) {
    if (!(psi.grid() == H.grid())) throw DimensionError("state and Hamiltonian use different grids");
    if (psi.aux().dimension != H.dimension()) throw DimensionError("state and Hamiltonian dimensions differ");
    const long m = lattice_steps(psi.grid(), tau);
    const auto n = static_cast<long>(psi.grid().size());
    CMatrix out(psi.values().rows(), psi.values().cols());
    for (long k = 0; k < n; ++k) {
        const CMatrix W = fibre_propagator(H, static_cast<std::size_t>(k), tau);
        out.row((k + m) % n) = (W * psi.values().row(k).transpose()).transpose();
    }
    return LpVector(psi.grid(), psi.aux(), std::move(out));
}

CMatrix commutator_superoperator(const CMatrix& A) {
    const auto d = A.rows();
    const CMatrix I = CMatrix::Identity(d, d);
    CMatrix L(d * d, d * d);
    // Kronecker products written out: (X (x) Y)(a d + b, c d + e) = X(a, c) Y(b, e).
    for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index c = 0; c < d; ++c) {
            L.block(a * d, c * d, d, d) = I(a, c) * A - A(c, a) * I;
        }
    }
    return L;
}

CMatrix LiouvilleKernel::full() const {
    const auto n = free_part.rows();
    const auto q = static_cast<Eigen::Index>(hs_dim);
    CMatrix L = CMatrix::Zero(n * q, n * q);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
            if (free_part(j, k) != cplx(0.0, 0.0)) L.block(j * q, k * q, q, q).diagonal().setConstant(free_part(j, k));
        }
        L.block(j * q, j * q, q, q) += interaction;
    }
    return L;
}

double LiouvilleKernel::self_adjointness_defect() const {
    const CMatrix L = full();
    double defect = (L - L.adjoint()).cwiseAbs().maxCoeff();
    defect = std::max(defect, (l0 - l0.adjoint()).cwiseAbs().maxCoeff());
    return std::max(defect, (interaction - interaction.adjoint()).cwiseAbs().maxCoeff());
}

double LiouvilleKernel::interaction_offdiagonal_mass() const {
    // Off-block mass is invariant under unitary changes of basis inside each
    // eigenspace, so any eigenbasis of L0 will do.
    Eigen::SelfAdjointEigenSolver<CMatrix> es(l0);
    const RVector& evals = es.eigenvalues();
    const CMatrix M = es.eigenvectors().adjoint() * interaction * es.eigenvectors();
    const double total = M.norm();
    if (total == 0.0) return 0.0;
    const double scale = std::max(1.0, evals.cwiseAbs().maxCoeff());
    double off = 0.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            if (std::abs(evals[i] - evals[j]) > 1e-9 * scale) off += std::norm(M(i, j));
        }
    }
    return std::sqrt(off) / total;
}

RVector LiouvilleKernel::l0_spectrum() const {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(l0, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

LiouvilleKernel liouville_kernel(const CMatrix& H0, const CMatrix& V, const TimeGrid& grid) {
    if (H0.rows() != H0.cols() || V.rows() != H0.rows() || V.cols() != H0.cols()) {
        throw DimensionError("H0 and V must be square and of equal size");
    }
    if (!hermitian(H0, 1e-12)) throw ValidationError("H0 must be Hermitian");
    if (!hermitian(V, 1e-12)) throw ValidationError("V must be Hermitian");
    const auto n = static_cast<Eigen::Index>(grid.size());
    const int d = static_cast<int>(H0.rows());
    CMatrix D = CMatrix::Zero(n, n);
    const double h = grid.spacing();
    for (Eigen::Index k = 0; k < n; ++k) {
        D(k, (k + 1) % n) += cplx(0.0, -0.5 / h);
        D(k, (k + n - 1) % n) += cplx(0.0, 0.5 / h);
    }
    return LiouvilleKernel{grid, d, d * d, std::move(D), commutator_superoperator(H0), commutator_superoperator(V)};
}

}  // namespace lpsim
