#include "lpsim/evolution.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "lpsim/errors.hpp"
#include "lpsim/linalg.hpp"

namespace lpsim {

namespace {

constexpr double kBoundaryTol = 1e-9;  // in units of the spacing
constexpr int kUpwindHalfWidth = 4;

bool is_hermitian(const CMatrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

double erf_window(double t, double rho, double edge, double smooth) {
    return 0.5 * (std::erf((t - edge) / smooth) - std::erf((t - (rho - edge)) / smooth));
}

CMatrix aux_operator(const KappaSpec& spec, int d) {
    if (spec.aux_op.size() == 0) return CMatrix::Identity(d, d);
    if (spec.aux_op.rows() != d || spec.aux_op.cols() != d) {
        throw DimensionError("kappa auxiliary operator must be d x d");
    }
    if (!is_hermitian(spec.aux_op, 1e-12)) throw ValidationError("kappa auxiliary operator must be Hermitian");
    return spec.aux_op;
}

}  // namespace

SubspaceLayout::SubspaceLayout(const TimeGrid& grid, double rho) : grid_(grid), rho_(rho) {
    if (!(rho >= 0.0) || !std::isfinite(rho)) throw ValidationError("layout needs finite rho >= 0");
    const double h = grid.spacing();
    part_.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid.point(k);
        if (t < -kBoundaryTol * h) {
            part_[k] = Part::d_minus;
            minus_.push_back(k);
        } else if (t < rho - kBoundaryTol * h) {
            part_[k] = Part::k_subspace;
            k_.push_back(k);
        } else {
            part_[k] = Part::d_plus;
            plus_.push_back(k);
        }
    }
}

SubspaceLayout::Part SubspaceLayout::part_of(std::size_t node) const { return part_.at(node); }

const std::vector<std::size_t>& SubspaceLayout::nodes(Part p) const {
    switch (p) {
        case Part::d_minus: return minus_;
        case Part::k_subspace: return k_;
        default: return plus_;
    }
}

std::vector<Eigen::Index> SubspaceLayout::flat_indices(Part p, int d) const {
    std::vector<Eigen::Index> idx;
    for (std::size_t k : nodes(p)) {
        for (int a = 0; a < d; ++a) idx.push_back(static_cast<Eigen::Index>(k) * d + a);
    }
    return idx;
}

LpVector SubspaceLayout::project(const LpVector& f, Part p) const {
    if (!(f.grid() == grid_)) throw DimensionError("projection onto a layout from another grid");
    CMatrix v = CMatrix::Zero(f.values().rows(), f.values().cols());
    for (std::size_t k : nodes(p)) v.row(static_cast<Eigen::Index>(k)) = f.values().row(static_cast<Eigen::Index>(k));
    return LpVector(f.grid(), f.aux(), std::move(v));
}

CMatrix make_kappa(const SubspaceLayout& layout, const AuxSpace& aux, const KappaSpec& spec) {
    const TimeGrid& grid = layout.grid();
    const auto n = static_cast<Eigen::Index>(grid.size());
    const int d = aux.dimension;
    CMatrix kappa = CMatrix::Zero(n * d, n * d);
    if (spec.family == KappaFamily::none) return kappa;
    if (!std::isfinite(spec.lambda)) throw ValidationError("kappa lambda must be finite");

    const CMatrix A = aux_operator(spec, d);
    const double h = grid.spacing();
    const double rho = layout.rho();
    RVector in_k = RVector::Zero(n);
    for (std::size_t k : layout.nodes(SubspaceLayout::Part::k_subspace)) in_k[static_cast<Eigen::Index>(k)] = 1.0;
    const RVector t = grid.points();

    RVector profile(n);
    Eigen::MatrixXd scalar = Eigen::MatrixXd::Zero(n, n);
    switch (spec.family) {
        case KappaFamily::separable: {
            if (!(spec.width > 0.0)) throw ValidationError("separable kappa needs width > 0");
            const double c = spec.center < 0.0 ? 0.5 * rho : spec.center;
            for (Eigen::Index k = 0; k < n; ++k) {
                const double x = t[k] - c;
                profile[k] = in_k[k] * std::exp(-x * x / (2.0 * spec.width * spec.width));
            }
            scalar = spec.lambda * h * profile * profile.transpose();
            break;
        }
        case KappaFamily::banded: {
            if (!(spec.width > 0.0) || !(spec.smooth > 0.0)) throw ValidationError("banded kappa needs width, smooth > 0");
            for (Eigen::Index k = 0; k < n; ++k) profile[k] = in_k[k] * erf_window(t[k], rho, spec.edge, spec.smooth);
            for (Eigen::Index j = 0; j < n; ++j) {
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double x = t[j] - t[k];
                    scalar(j, k) = spec.lambda * h * std::exp(-x * x / (2.0 * spec.width * spec.width)) *
                                   profile[j] * profile[k];
                }
            }
            break;
        }
        case KappaFamily::diagonal: {
            if (!(spec.smooth > 0.0)) throw ValidationError("diagonal kappa needs smooth > 0");
            for (Eigen::Index k = 0; k < n; ++k) {
                scalar(k, k) = spec.lambda * in_k[k] * erf_window(t[k], rho, spec.edge, spec.smooth);
            }
            break;
        }
        case KappaFamily::none: break;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
            if (scalar(j, k) != 0.0) kappa.block(j * d, k * d, d, d) = scalar(j, k) * A;
        }
    }
    return kappa;
}

GeneratorK::GeneratorK(TimeGrid grid, AuxSpace aux, CMatrix kappa)
    : grid_(grid), aux_(aux), kappa_(std::move(kappa)) {
    const auto dim = static_cast<Eigen::Index>(grid_.size()) * aux_.dimension;
    if (kappa_.rows() != dim || kappa_.cols() != dim) throw DimensionError("kappa must be (n d) x (n d)");
    if (!kappa_.allFinite()) throw ValidationError("kappa must be finite");
    if (!is_hermitian(kappa_, 1e-12)) throw ValidationError("kappa must be Hermitian (K self-adjoint)");
}

GeneratorK GeneratorK::free(TimeGrid grid, AuxSpace aux) {
    const auto dim = static_cast<Eigen::Index>(grid.size()) * aux.dimension;
    return GeneratorK(grid, aux, CMatrix::Zero(dim, dim));
}

CMatrix GeneratorK::free_part() const {
    const CMatrix k0 = free_generator(grid_);
    const int d = aux_.dimension;
    if (d == 1) return k0;
    const auto n = k0.rows();
    CMatrix out = CMatrix::Zero(n * d, n * d);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
            for (int a = 0; a < d; ++a) out(j * d + a, k * d + a) = k0(j, k);
        }
    }
    return out;
}

CMatrix GeneratorK::full() const { return free_part() + kappa_; }

double kernel_constraint_violation(const GeneratorK& K, const SubspaceLayout& layout) {
    if (!(K.grid() == layout.grid())) throw DimensionError("generator and layout use different grids");
    const int d = K.aux().dimension;
    const auto n = static_cast<Eigen::Index>(K.grid().size());
    double worst = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto pj = layout.part_of(static_cast<std::size_t>(j));
        for (Eigen::Index k = 0; k < n; ++k) {
            const auto pk = layout.part_of(static_cast<std::size_t>(k));
            const bool inside = pj == SubspaceLayout::Part::k_subspace && pk == SubspaceLayout::Part::k_subspace;
            // Only K-K blocks may be nonzero; D-/D+ self-blocks are allowed too.
            const bool same_outer = pj == pk && pj != SubspaceLayout::Part::k_subspace;
            if (inside || same_outer) continue;
            worst = std::max(worst, K.kappa().block(j * d, k * d, d, d).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

void check_kernel_constraint(const GeneratorK& K, const SubspaceLayout& layout) {
    const double v = kernel_constraint_violation(K, layout);
    if (v > 1e-14) {
        throw KernelConstraintError("kappa couples D-, K and D+ (largest cross element " + std::to_string(v) + ")");
    }
}

UnitaryGroup::UnitaryGroup(const GeneratorK& K)
    : free_(!K.interacting()),
      n_(static_cast<long>(K.grid().size())),
      d_(K.aux().dimension),
      h_(K.grid().spacing()) {
    hermitian_eigensystem(K.full(), evals_, evecs_);
}

long UnitaryGroup::free_shift(double tau) const {
    if (!free_) return -1;
    const double steps = tau / h_;
    const double r = std::round(steps);
    if (std::abs(steps - r) > 1e-12 * std::max(1.0, std::abs(steps))) return -1;
    return ((static_cast<long>(r) % n_) + n_) % n_;
}

CMatrix UnitaryGroup::at(double tau) const {
    if (const long m = free_shift(tau); m >= 0) {
        CMatrix U = CMatrix::Zero(n_ * d_, n_ * d_);
        for (long k = 0; k < n_; ++k) {
            for (int a = 0; a < d_; ++a) U(((k + m) % n_) * d_ + a, k * d_ + a) = 1.0;
        }
        return U;
    }
    CVector phase = (evals_.cast<cplx>() * cplx(0.0, -tau)).array().exp();
    return evecs_ * phase.asDiagonal() * evecs_.adjoint();
}

CVector UnitaryGroup::apply(double tau, const CVector& psi) const {
    if (const long m = free_shift(tau); m >= 0) {
        CVector out(psi.size());
        for (long k = 0; k < n_; ++k) out.segment(((k + m) % n_) * d_, d_) = psi.segment(k * d_, d_);
        return out;
    }
    CVector c = evecs_.adjoint() * psi;
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] *= std::exp(cplx(0.0, -evals_[i] * tau));
    return evecs_ * c;
}

CMatrix UnitaryGroup::block(double tau, const std::vector<Eigen::Index>& rows,
                            const std::vector<Eigen::Index>& cols) const {
    if (free_shift(tau) >= 0) {
        const CMatrix U = at(tau);
        CMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = 0; j < cols.size(); ++j) {
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = U(rows[i], cols[j]);
            }
        }
        return out;
    }
    const auto m = evecs_.cols();
    CMatrix vr(static_cast<Eigen::Index>(rows.size()), m);
    CMatrix vc(static_cast<Eigen::Index>(cols.size()), m);
    for (std::size_t i = 0; i < rows.size(); ++i) vr.row(static_cast<Eigen::Index>(i)) = evecs_.row(rows[i]);
    for (std::size_t i = 0; i < cols.size(); ++i) vc.row(static_cast<Eigen::Index>(i)) = evecs_.row(cols[i]);
    CVector phase = (evals_.cast<cplx>() * cplx(0.0, -tau)).array().exp();
    return vr * phase.asDiagonal() * vc.adjoint();
}

CMatrix build_unitary(const GeneratorK& K, double tau) { return UnitaryGroup(K).at(tau); }

std::vector<double> upwind_derivative_weights(int half_width) {
    if (half_width < 1) throw ValidationError("upwind stencil half width must be >= 1");
    const int m = 2 * half_width;
    Eigen::MatrixXd V(m, m);
    for (int row = 0; row < m; ++row) {
        for (int col = 0; col < m; ++col) V(row, col) = std::pow(static_cast<double>(col - half_width), row);
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    rhs[1] = 1.0;
    const Eigen::VectorXd c = V.fullPivLu().solve(rhs);
    return {c.data(), c.data() + m};
}

CMatrix semigroup_generator(const GeneratorK& K, const SubspaceLayout& layout) {
    check_kernel_constraint(K, layout);
    const auto& knodes = layout.nodes(SubspaceLayout::Part::k_subspace);
    const auto nk = static_cast<Eigen::Index>(knodes.size());
    const int d = K.aux().dimension;
    const double h = K.grid().spacing();
    const std::vector<double> c = upwind_derivative_weights(kUpwindHalfWidth);

    CMatrix B = CMatrix::Zero(nk * d, nk * d);
    for (Eigen::Index i = 0; i < nk; ++i) {
        for (int o = -kUpwindHalfWidth; o < kUpwindHalfWidth; ++o) {
            const Eigen::Index j = i + o;
            if (j < 0 || j >= nk) continue;
            const cplx w(0.0, -c[static_cast<std::size_t>(o + kUpwindHalfWidth)] / h);
            for (int a = 0; a < d; ++a) B(i * d + a, j * d + a) += w;
        }
    }
    const std::vector<Eigen::Index> idx = layout.flat_indices(SubspaceLayout::Part::k_subspace, d);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        for (std::size_t s = 0; s < idx.size(); ++s) {
            B(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) += K.kappa()(idx[r], idx[s]);
        }
    }
    return B;
}

LaxPhillipsSystem::LaxPhillipsSystem(GeneratorK K, SubspaceLayout layout)
    : K_(std::move(K)), layout_(std::move(layout)), group_((check_kernel_constraint(K_, layout_), K_)) {
    k_idx_ = layout_.flat_indices(SubspaceLayout::Part::k_subspace, K_.aux().dimension);
    B_ = lpsim::semigroup_generator(K_, layout_);
}

CMatrix LaxPhillipsSystem::semigroup(double tau) const {
    if (!(tau >= 0.0)) throw DomainError("semigroup Z(tau) needs tau >= 0");
    return group_.block(tau, k_idx_, k_idx_);
}

CVector LaxPhillipsSystem::apply_semigroup(double tau, const CVector& psi) const {
    if (!(tau >= 0.0)) throw DomainError("semigroup Z(tau) needs tau >= 0");
    if (psi.size() != k_dimension()) throw DimensionError("vector is not in K-subspace coordinates");
    CVector full = CVector::Zero(K_.dimension());
    for (std::size_t i = 0; i < k_idx_.size(); ++i) full[k_idx_[i]] = psi[static_cast<Eigen::Index>(i)];
    const CVector out = group_.apply(tau, full);
    CVector res(k_dimension());
    for (std::size_t i = 0; i < k_idx_.size(); ++i) res[static_cast<Eigen::Index>(i)] = out[k_idx_[i]];
    return res;
}

LpVector LaxPhillipsSystem::embed(const CVector& psi_k) const {
    if (psi_k.size() != k_dimension()) throw DimensionError("vector is not in K-subspace coordinates");
    CVector full = CVector::Zero(K_.dimension());
    for (std::size_t i = 0; i < k_idx_.size(); ++i) full[k_idx_[i]] = psi_k[static_cast<Eigen::Index>(i)];
    return LpVector::from_flat(K_.grid(), K_.aux(), full);
}

CVector LaxPhillipsSystem::restrict_to_k(const LpVector& psi) const {
    const CVector full = psi.flat();
    CVector res(k_dimension());
    for (std::size_t i = 0; i < k_idx_.size(); ++i) res[static_cast<Eigen::Index>(i)] = full[k_idx_[i]];
    return res;
}

CMatrix semigroup(const LaxPhillipsSystem& sys, double tau) { return sys.semigroup(tau); }

double dissipativity_defect(const CMatrix& B, const CVector& phi, double spacing) {
    if (B.rows() != B.cols() || B.cols() != phi.size()) throw DimensionError("B and phi sizes disagree");
    if (phi.cwiseAbs().maxCoeff() == 0.0) throw DomainError("dissipativity defect needs a nonzero phi");
    const CVector bphi = B * phi;
    const cplx a = phi.dot(bphi) * spacing;   // (phi, B phi)
    const cplx b = bphi.dot(phi) * spacing;   // (B phi, phi)
    return (cplx(0.0, -1.0) * (a - b)).real();
}

std::vector<double> contraction_profile(const LaxPhillipsSystem& sys, const CVector& psi,
                                        std::span<const double> taus) {
    std::vector<double> out;
    out.reserve(taus.size());
    double prev = 0.0;
    const double h = sys.generator().grid().spacing();
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] >= 0.0) || (i > 0 && taus[i] < prev)) {
            throw ValidationError("contraction profile needs ascending nonnegative tau");
        }
        prev = taus[i];
        out.push_back(std::sqrt(sys.apply_semigroup(taus[i], psi).squaredNorm() * h));
    }
    return out;
}

double generator_consistency(const LaxPhillipsSystem& sys, const std::vector<CVector>& probes,
                             double delta, bool extrapolate) {
    const CMatrix& B = sys.semigroup_generator();
    const cplx minus_i(0.0, -1.0);
    double worst = 0.0;
    for (const CVector& phi : probes) {
        const CVector d1 = (sys.apply_semigroup(delta, phi) - phi) / (minus_i * delta);
        CVector rich = d1;
        if (extrapolate) {
            const CVector d2 = (sys.apply_semigroup(0.5 * delta, phi) - phi) / (minus_i * 0.5 * delta);
            rich = 2.0 * d2 - d1;
        }
        const CVector bphi = B * phi;
        worst = std::max(worst, (rich - bphi).norm() / bphi.norm());
    }
    return worst;
}

double semigroup_residual(const LaxPhillipsSystem& sys, double a, double b) {
    const CMatrix lhs = sys.semigroup(a) * sys.semigroup(b);
    const CMatrix rhs = sys.semigroup(a + b);
    const double num = spectral_norm(lhs - rhs);
    const double den = spectral_norm(rhs);
    return den > 1e-8 ? num / den : num;
}

CVector generator_spectrum(const LaxPhillipsSystem& sys) {
    Eigen::ComplexEigenSolver<CMatrix> es(sys.semigroup_generator(), false);
    if (es.info() != Eigen::Success) throw ConvergenceError("eigensolver failed for B");
    return es.eigenvalues();
}

}  // namespace lpsim
