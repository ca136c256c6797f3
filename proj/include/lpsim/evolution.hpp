#pragma once

// Unitary evolution U(tau) = exp(-i K tau) on the discretized direct-integral
// space, the incoming/outgoing subspaces, the compressed semigroup Z(tau) and
// its dissipative generator B.

#include <span>
#include <vector>

#include "lpsim/direct_integral.hpp"

namespace lpsim {

/// Node-support masks for D- (t < 0), the K-subspace (0 <= t < rho) and
/// D+ (t >= rho). The node at t = 0 belongs to K.
class SubspaceLayout {
public:
    SubspaceLayout(const TimeGrid& grid, double rho);

    enum class Part { d_minus, k_subspace, d_plus };

    double rho() const noexcept { return rho_; }
    const TimeGrid& grid() const noexcept { return grid_; }
    Part part_of(std::size_t node) const;

    const std::vector<std::size_t>& nodes(Part p) const;
    /// Indices into the node-major flattening for an auxiliary dimension d.
    std::vector<Eigen::Index> flat_indices(Part p, int d) const;

    /// Node mask projection: zero every node outside part p.
    LpVector project(const LpVector& f, Part p) const;

private:
    TimeGrid grid_;
    double rho_;
    std::vector<Part> part_;
    std::vector<std::size_t> minus_, k_, plus_;
};

enum class KappaFamily { none, separable, banded, diagonal };

/// Interaction kernel families, all supported on the K-subspace:
///   separable: lambda h v(t) v(t') A,  v = exp(-(t - center)^2 / 2 width^2)
///   banded:    lambda h exp(-(t - t')^2 / 2 width^2) b(t) b(t') A
///   diagonal:  lambda b(t) delta_{t t'} A
/// with b(t) = (erf((t - edge)/smooth) - erf((t - rho + edge)/smooth)) / 2.
/// h is the grid spacing (quadrature weight of the kernel).
struct KappaSpec {
    KappaFamily family = KappaFamily::none;
    double lambda = 0.0;
    double width = 0.6;
    double center = -1.0;  // negative means rho / 2
    double edge = 2.0;
    double smooth = 0.5;
    CMatrix aux_op;  // d x d Hermitian; empty means identity
};

/// Builds the (n d) x (n d) kernel matrix for a family.
CMatrix make_kappa(const SubspaceLayout& layout, const AuxSpace& aux, const KappaSpec& spec);

/// K = K0 (x) I_d + kappa.
class GeneratorK {
public:
    GeneratorK(TimeGrid grid, AuxSpace aux, CMatrix kappa);
    static GeneratorK free(TimeGrid grid, AuxSpace aux);

    const TimeGrid& grid() const noexcept { return grid_; }
    const AuxSpace& aux() const noexcept { return aux_; }
    const CMatrix& kappa() const noexcept { return kappa_; }
    CMatrix free_part() const;
    CMatrix full() const;
    Eigen::Index dimension() const noexcept { return kappa_.rows(); }
    bool interacting() const noexcept { return kappa_.cwiseAbs().maxCoeff() > 0.0; }

private:
    TimeGrid grid_;
    AuxSpace aux_;
    CMatrix kappa_;
};

/// Largest |kappa| entry coupling D- to D+, or either of them to K.
double kernel_constraint_violation(const GeneratorK& K, const SubspaceLayout& layout);
/// Throws KernelConstraintError when the violation exceeds 1e-14.
void check_kernel_constraint(const GeneratorK& K, const SubspaceLayout& layout);

/// Eigendecomposition K = V diag(e) V^dagger, reused for every tau. For
/// kappa = 0 and lattice tau the group is applied as an exact node shift.
class UnitaryGroup {
public:
    explicit UnitaryGroup(const GeneratorK& K);

    CMatrix at(double tau) const;
    CVector apply(double tau, const CVector& psi) const;
    /// Rows/cols restricted to the given flat indices: U(tau)[idx, idx].
    CMatrix block(double tau, const std::vector<Eigen::Index>& rows,
                  const std::vector<Eigen::Index>& cols) const;
    const RVector& eigenvalues() const noexcept { return evals_; }
    const CMatrix& eigenvectors() const noexcept { return evecs_; }

private:
    long free_shift(double tau) const;  // node shift, or -1 when not applicable

    RVector evals_;
    CMatrix evecs_;
    bool free_ = false;
    long n_ = 0;
    int d_ = 1;
    double h_ = 0.0;
};

/// U(tau) as a dense matrix.
CMatrix build_unitary(const GeneratorK& K, double tau);

/// A generator together with its layout, eigendecomposition and generator B.
class LaxPhillipsSystem {
public:
    LaxPhillipsSystem(GeneratorK K, SubspaceLayout layout);

    const GeneratorK& generator() const noexcept { return K_; }
    const SubspaceLayout& layout() const noexcept { return layout_; }
    const UnitaryGroup& group() const noexcept { return group_; }
    const std::vector<Eigen::Index>& k_indices() const noexcept { return k_idx_; }
    Eigen::Index k_dimension() const noexcept { return static_cast<Eigen::Index>(k_idx_.size()); }

    /// Z(tau) = P+ U(tau) P- restricted to the K-subspace.
    CMatrix semigroup(double tau) const;
    /// Z(tau) psi for psi in the K-subspace (flat K coordinates).
    CVector apply_semigroup(double tau, const CVector& psi) const;
    const CMatrix& semigroup_generator() const noexcept { return B_; }

    /// Embeds a K-coordinate vector into the full space and back.
    LpVector embed(const CVector& psi_k) const;
    CVector restrict_to_k(const LpVector& psi) const;

private:
    GeneratorK K_;
    SubspaceLayout layout_;
    UnitaryGroup group_;
    std::vector<Eigen::Index> k_idx_;
    CMatrix B_;
};

CMatrix semigroup(const LaxPhillipsSystem& sys, double tau);

/// B = B0 + kappa_KK. B0 is -i times the upwind-biased 7th-order derivative on
/// the K nodes with zero inflow values (the D- side is projected out); its
/// anti-Hermitian part is negative semidefinite.
CMatrix semigroup_generator(const GeneratorK& K, const SubspaceLayout& layout);

/// Upwind-biased first-derivative weights (unit spacing) for offsets -p .. p-1.
std::vector<double> upwind_derivative_weights(int half_width);

/// -i[(phi, B phi) - (B phi, phi)] with the grid-weighted inner product.
double dissipativity_defect(const CMatrix& B, const CVector& phi, double spacing);

/// ||Z(tau) psi|| (grid-weighted) for each tau (ascending, nonnegative).
std::vector<double> contraction_profile(const LaxPhillipsSystem& sys, const CVector& psi,
                                        std::span<const double> taus);

/// max over probes of ||(Z(delta) phi - phi)/(-i delta) - B phi|| / ||B phi||,
/// by default after one Richardson step (delta and delta/2).
double generator_consistency(const LaxPhillipsSystem& sys, const std::vector<CVector>& probes,
                             double delta, bool extrapolate = true);

/// ||Z(a) Z(b) - Z(a+b)||_2 / ||Z(a+b)||_2 (absolute when Z(a+b) vanishes).
double semigroup_residual(const LaxPhillipsSystem& sys, double a, double b);

/// Eigenvalues of B.
CVector generator_spectrum(const LaxPhillipsSystem& sys);

}  // namespace lpsim
