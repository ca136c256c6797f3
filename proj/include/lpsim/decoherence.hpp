#pragma once

// Effectively pure and mixed states of the direct-integral space, fibre-wise
// time-ordered evolution, and the Liouville-space time-representation kernel.

#include <vector>

#include "lpsim/direct_integral.hpp"

namespace lpsim {

/// Hermitian, unit-trace, positive semidefinite d x d matrix.
class ReducedDensity {
public:
    ReducedDensity(AuxSpace aux, CMatrix matrix);

    const AuxSpace& aux() const noexcept { return aux_; }
    const CMatrix& matrix() const noexcept { return matrix_; }
    /// Tr(rho A).
    cplx expectation(const CMatrix& A) const;

private:
    AuxSpace aux_;
    CMatrix matrix_;
};

/// rho = sum_k psi_k psi_k^dagger h / ||psi||^2.
ReducedDensity reduce(const LpVector& psi);

/// Tr rho^2.
double purity(const ReducedDensity& rho);

struct PurityWitness {
    bool effectively_pure;
    double singular_ratio;  // s_2 / s_1 of the n x d value matrix
    CVector f;              // psi_k = f_k phi0 for a pure state
    CVector phi0;           // unit vector
};

/// Rank-one test of the value matrix: s_2 <= 1e-10 s_1.
PurityWitness effectively_pure_check(const LpVector& psi);

/// Piecewise-constant H(t): one d x d Hermitian matrix per grid node, acting
/// on the cell [t_k, t_k + h).
class TimeDependentHamiltonian {
public:
    TimeDependentHamiltonian(TimeGrid grid, std::vector<CMatrix> per_node);
    static TimeDependentHamiltonian constant(const TimeGrid& grid, const CMatrix& H);
    /// H_before for t < t_switch, H_after from t_switch on.
    static TimeDependentHamiltonian switching(const TimeGrid& grid, const CMatrix& H_before,
                                              const CMatrix& H_after, double t_switch);

    const TimeGrid& grid() const noexcept { return grid_; }
    int dimension() const noexcept { return d_; }
    const CMatrix& at(std::size_t node) const { return h_.at(node); }
    /// e^{-i H(t_k) h} for the cell at node k.
    const CMatrix& cell_propagator(std::size_t node) const { return cells_.at(node); }

private:
    TimeGrid grid_;
    int d_;
    std::vector<CMatrix> h_;
    std::vector<CMatrix> cells_;
};

/// W_t(tau): ordered product of cell propagators over [t_k, t_k + tau), the
/// latest cell leftmost. Node indices wrap with the periodic grid.
CMatrix fibre_propagator(const TimeDependentHamiltonian& H, std::size_t node, double tau);

/// (psi^tau)_{t + tau} = W_t(tau) psi_t for a lattice tau >= 0.
LpVector nonstationary_evolve(const LpVector& psi, const TimeDependentHamiltonian& H, double tau);

/// vec(A X - X A) = (I (x) A - A^T (x) I) vec(X), column-major vec.
CMatrix commutator_superoperator(const CMatrix& A);

/// Kernel <t|L|t'> = -i D(t, t') (x) I + delta(t, t') L_I on L^2(t) (x) HS(d),
/// with D the periodic central difference and L_I = [V, .]. L0 = [H0, .] is
/// the Liouvillian whose spectral representation the t-variable stands for.
struct LiouvilleKernel {
    TimeGrid grid;
    int d;
    int hs_dim;           // d^2
    CMatrix free_part;    // n x n, -i times the central difference
    CMatrix l0;           // [H0, .], d^2 x d^2
    CMatrix interaction;  // [V, .], d^2 x d^2

    /// (n d^2) x (n d^2), index k * d^2 + vec index.
    CMatrix full() const;
    /// ||L - L^dagger||_max over the full kernel and the superoperators.
    double self_adjointness_defect() const;
    /// ||off-block part of L_I||_F / ||L_I||_F in the eigenbasis of L0, blocks
    /// being the L0 eigenspaces (eigenvalues E_i - E_j). Zero for V = 0.
    double interaction_offdiagonal_mass() const;
    /// Eigenvalues of L0: all differences E_i - E_j of H0 eigenvalues.
    RVector l0_spectrum() const;
};

LiouvilleKernel liouville_kernel(const CMatrix& H0, const CMatrix& V, const TimeGrid& grid);

}  // namespace lpsim
