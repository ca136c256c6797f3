#pragma once

// Wave operators, the Lax-Phillips S-matrix in the free translation
// representation, continuation of S(sigma), time operators and the
// superselection decomposition.

#include <string>
#include <vector>

#include "lpsim/evolution.hpp"
#include "lpsim/rational.hpp"

namespace lpsim {

enum class WaveSign { plus, minus };

struct WaveOperator {
    WaveSign sign;
    double tau_max;
    CMatrix matrix;          // U(-T) U0(T) for plus, U(T) U0(-T) for minus
    double certificate_gap;  // max over probes of ||W(T) psi - W(T/2) psi||
    double cook_tail;        // max over probes of int_T^2T ||kappa U0(+-tau) psi|| dtau
};

/// Gaussian probe states (width 0.5) centred every 2 time units inside
/// [t_lo, t_hi], unit norm, auxiliary component cycling through the basis.
std::vector<LpVector> gaussian_probes(const TimeGrid& grid, const AuxSpace& aux, double t_lo,
                                      double t_hi);

/// W+ = s-lim U(-T) U0(T), W- = s-lim U(T) U0(-T), approximated at T = tau_max
/// and certified against T/2 on probes left of the interaction region.
/// Throws LimitNotReached when the gap or the Cook tail exceeds 1e-6 / 1e-8.
WaveOperator wave_operator(const GeneratorK& K, const UnitaryGroup& group, WaveSign sign,
                           double tau_max, const std::vector<LpVector>& probes);
WaveOperator wave_operator(const GeneratorK& K, WaveSign sign, double tau_max);

struct SMatrixOptions {
    double window_lo = -8.0;  // probe window J = [window_lo, window_hi) inside D-
    double window_hi = 0.0;
    double reference_t = -1.0;  // the kernel S(t - t') is read off the probe nearest this time
    double gap_tolerance = 1e-6;
    bool require_convergence = true;
};

/// S = W+^{-1} W- on delta probes in the window J. For t' in D-, W- delta = delta,
/// so each column is U0(-T) U(T) delta_{t'}.
struct SMatrix {
    TimeGrid grid;
    int d;
    double tau_max;
    double convergence_gap;  // T vs T/2 on smooth probes inside the window
    std::vector<std::size_t> probe_nodes;
    std::vector<CMatrix> columns;  // (n d) x d block per probe node
    std::size_t reference;         // index into probe_nodes
    CMatrix kernel;                // n x (d d): row k holds S(t_k - t_ref), row-major d x d
    std::vector<CMatrix> spectral; // S-hat(sigma_m), ascending sigma (TimeGrid::sigma)

    /// S phi for phi supported on the probe window.
    LpVector apply(const LpVector& phi) const;
    /// Band of sigma with |sigma| <= pi / (2h), where the lattice symbol is resolved.
    std::vector<std::size_t> resolved_band() const;
    /// max over the resolved band of ||S^dagger S - I||_2.
    double unitarity_defect() const;
    /// max over the resolved band of ||S(sigma) - S(sigma_0)||, sigma_0 the node nearest 0.
    double sigma_variation() const;
    /// det S-hat(sigma) on the resolved band.
    Eigen::VectorXcd determinant_band() const;
};

SMatrix s_matrix(const GeneratorK& K, const UnitaryGroup& group, double tau_max,
                 const SMatrixOptions& opts = {});
SMatrix s_matrix(const GeneratorK& K, double tau_max, const SMatrixOptions& opts = {});

/// Identity S-matrix on a grid (the free case, exactly).
SMatrix identity_s_matrix(const TimeGrid& grid, const AuxSpace& aux, const SMatrixOptions& opts = {});

/// ||K0 S phi - S K0 phi|| / (||S|| ||K0 phi||) maximised over probes supported
/// in the probe window (||S|| = 1 for a unitary S).
double stationarity_defect(const SMatrix& S, const std::vector<LpVector>& probes);
/// ||S U0(tau) phi - U0(tau) S phi|| / ||phi|| for a lattice tau; probes and
/// their translates must stay in the probe window.
double intertwining_defect(const SMatrix& S, const std::vector<LpVector>& probes, double tau);

struct Singularity {
    cplx position;
    cplx residue;
    double confidence_radius;
};

struct MatchedPair {
    cplx singularity;
    cplx eigenvalue;
    double distance;
    bool within_tolerance;  // distance <= 1e-2 |Im eigenvalue|
};

struct SingularityReport {
    std::vector<Singularity> singularities;  // lower half-plane poles of the continued det S
    std::vector<cplx> flagged;               // rejected: Froissart doublets / pole-zero cancellations
    int degree = 0;
    double holdout_error = 0.0;
    bool fit_converged = false;
    bool entry_agreement = true;             // d > 1: entry (0,0) continuation shows the same poles

    // Filled by match_eigenvalues.
    std::vector<cplx> eigenvalues;           // eigenvalues of B inside the window
    std::vector<MatchedPair> matches;
    std::vector<cplx> unmatched_singularities;
    std::vector<cplx> unmatched_eigenvalues;
    double im_floor = 0.0;                   // 2 pi / (t_max - t_min)
    double im_cap = 1.0;
    double re_cap = 0.0;                     // pi / (2h)
};

struct ContinuationOptions {
    double tol = 1e-10;
    int max_degree = 100;
    double perturbation = 1e-8;
    unsigned long long seed = 7;
    double im_cap = 1.0;
};

/// Fits det S-hat(sigma) on the resolved band by AAA and reports its poles in
/// the correspondence window {|Re| <= pi/(2h), 2pi/L < -Im <= im_cap}.
SingularityReport continue_and_locate_singularities(const SMatrix& S, const ContinuationOptions& opts = {});

/// Greedy nearest-neighbour pairing of singularities with B eigenvalues in the
/// same window; the distance cap is 0.25 |Im mu|.
void match_eigenvalues(SingularityReport& report, const CVector& b_eigenvalues);

/// <T_in> = sum_k t_k |(P- psi)_k|^2 h / ||P- psi||^2, where P- removes D-.
double age_expectation(const SubspaceLayout& layout, const LpVector& psi);

enum class Representation { incoming, outgoing, free };

/// Time operator T = Q diag(t_k (x) I_d) Q^dagger with spectral family
/// E(t) = Q mask(t) Q^dagger; Q = I for the incoming representation.
struct AgeObservable {
    Representation representation;
    TimeGrid grid;
    int d;
    CMatrix frame;  // Q (unitary), empty means identity

    CMatrix matrix() const;
    CMatrix spectral_projection(double t) const;
    RVector spectrum() const;
};

AgeObservable incoming_time_operator(const TimeGrid& grid, const AuxSpace& aux);

/// T_out = S T_in S^dagger for a unitary matrix S on the full space.
AgeObservable outgoing_time_operator(const CMatrix& S, const AgeObservable& t_in);

/// Full-space unitary U0(-T) U(2T) U0(-T) = W+^dagger W- at T.
CMatrix s_matrix_operator(const UnitaryGroup& group, const TimeGrid& grid, int d, double tau_max);

struct SuperselectionReport {
    cplx global;
    cplx d_minus;
    cplx k_part;
    cplx d_plus;
    double cross_terms;  // sum of |(psi_X, A psi_Y)| over X != Y
    double residual;     // |global - (d_minus + k_part + d_plus)|
};

/// <A-hat>_psi globally and per D-, K, D+ component for a per-t operator A (d x d).
SuperselectionReport superselection_check(const SubspaceLayout& layout, const LpVector& psi, const CMatrix& A);
/// Same for an operator on the full space; it must be decomposable (block
/// diagonal in t with one repeated d x d block), otherwise ContractViolation.
SuperselectionReport superselection_check_full(const SubspaceLayout& layout, const LpVector& psi,
                                               const CMatrix& A_full);

}  // namespace lpsim
