#include "lpsim/rational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "lpsim/errors.hpp"

namespace lpsim {

BarycentricApproximant::BarycentricApproximant(Eigen::VectorXcd support, Eigen::VectorXcd values,
                                               Eigen::VectorXcd weights)
    : support_(std::move(support)), values_(std::move(values)), weights_(std::move(weights)) {
    if (support_.size() != values_.size() || support_.size() != weights_.size() || support_.size() == 0) {
        throw DimensionError("barycentric support, values and weights must have equal nonzero length");
    }
}

cplx BarycentricApproximant::operator()(cplx z) const {
    cplx num = 0.0, den = 0.0;
    for (Eigen::Index j = 0; j < support_.size(); ++j) {
        const cplx diff = z - support_[j];
        if (diff == cplx(0.0, 0.0)) return values_[j];
        const cplx c = weights_[j] / diff;
        num += c * values_[j];
        den += c;
    }
    return num / den;
}

Eigen::VectorXcd BarycentricApproximant::evaluate(const Eigen::VectorXcd& z) const {
    Eigen::VectorXcd out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = (*this)(z[i]);
    return out;
}

Eigen::VectorXcd BarycentricApproximant::roots_of(const Eigen::VectorXcd& coeff) const {
    const Eigen::Index m = support_.size();
    if (m < 2) return Eigen::VectorXcd(0);
    // Pencil E - x B with E = [[0, c^T], [1, diag(z)]], B = diag(0, 1, ..., 1).
    // Shift-invert at s: mu = eig((E - sB)^{-1} B), x = s + 1/mu.
    Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(m + 1, m + 1);
    Eigen::MatrixXcd B = Eigen::MatrixXcd::Identity(m + 1, m + 1);
    B(0, 0) = 0.0;
    E.block(0, 1, 1, m) = coeff.transpose();
    E.block(1, 0, m, 1).setOnes();
    E.block(1, 1, m, m) = support_.asDiagonal();

    const double lo = support_.real().minCoeff();
    const double hi = support_.real().maxCoeff();
    const double span = std::max(1.0, hi - lo + support_.imag().cwiseAbs().maxCoeff());
    const cplx s(0.5 * (lo + hi) + 0.123 * span, 1.37 * span);

    const Eigen::MatrixXcd M = (E - s * B).partialPivLu().solve(B);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M, false);
    if (es.info() != Eigen::Success) throw ConvergenceError("eigensolver failed while locating barycentric roots");
    std::vector<cplx> mu(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(mu.begin(), mu.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
    const double mu_max = std::abs(mu.back());
    std::vector<cplx> roots;
    // The pencil always has two infinite eigenvalues (mu = 0).
    for (std::size_t i = 2; i < mu.size(); ++i) {
        if (std::abs(mu[i]) <= 1e-13 * mu_max) continue;
        roots.push_back(s + 1.0 / mu[i]);
    }
    Eigen::VectorXcd out(static_cast<Eigen::Index>(roots.size()));
    for (std::size_t i = 0; i < roots.size(); ++i) out[static_cast<Eigen::Index>(i)] = roots[i];
    return out;
}

Eigen::VectorXcd BarycentricApproximant::poles() const { return roots_of(weights_); }

Eigen::VectorXcd BarycentricApproximant::zeros() const {
    return roots_of(weights_.cwiseProduct(values_));
}

Eigen::VectorXcd BarycentricApproximant::residues(const Eigen::VectorXcd& poles) const {
    Eigen::VectorXcd out(poles.size());
    for (Eigen::Index i = 0; i < poles.size(); ++i) {
        cplx num = 0.0, dden = 0.0;
        for (Eigen::Index j = 0; j < support_.size(); ++j) {
            const cplx diff = poles[i] - support_[j];
            num += weights_[j] * values_[j] / diff;
            dden -= weights_[j] / (diff * diff);
        }
        out[i] = num / dden;
    }
    return out;
}

AaaResult aaa_fit(const Eigen::VectorXcd& z, const Eigen::VectorXcd& f, double tol, int max_degree) {
    if (z.size() != f.size()) throw DimensionError("aaa_fit: sample and value counts differ");
    if (z.size() < 4) throw DimensionError("aaa_fit needs at least 4 samples");
    if (!f.allFinite()) throw ValidationError("aaa_fit: non-finite sample values");

    std::vector<Eigen::Index> train, hold;
    for (Eigen::Index i = 0; i < z.size(); ++i) (i % 2 == 0 ? train : hold).push_back(i);
    const auto M = static_cast<Eigen::Index>(train.size());
    Eigen::VectorXcd Z(M), F(M), Zh(static_cast<Eigen::Index>(hold.size())), Fh(Zh.size());
    for (Eigen::Index i = 0; i < M; ++i) {
        Z[i] = z[train[static_cast<std::size_t>(i)]];
        F[i] = f[train[static_cast<std::size_t>(i)]];
    }
    for (Eigen::Index i = 0; i < Zh.size(); ++i) {
        Zh[i] = z[hold[static_cast<std::size_t>(i)]];
        Fh[i] = f[hold[static_cast<std::size_t>(i)]];
    }
    const double scale = std::max(f.cwiseAbs().maxCoeff(), 1e-300);

    std::vector<bool> in_support(static_cast<std::size_t>(M), false);
    std::vector<Eigen::Index> chosen;
    Eigen::VectorXcd R = Eigen::VectorXcd::Constant(M, F.mean());
    AaaResult best;
    best.holdout_error = std::numeric_limits<double>::infinity();
    const int max_support = std::min<int>(max_degree + 1, static_cast<int>(M) - 1);

    for (int m = 1; m <= max_support; ++m) {
        Eigen::Index j = 0;
        double worst = -1.0;
        for (Eigen::Index i = 0; i < M; ++i) {
            if (in_support[static_cast<std::size_t>(i)]) continue;
            const double e = std::abs(F[i] - R[i]);
            if (e > worst) {
                worst = e;
                j = i;
            }
        }
        in_support[static_cast<std::size_t>(j)] = true;
        chosen.push_back(j);

        std::vector<Eigen::Index> rows;
        for (Eigen::Index i = 0; i < M; ++i) {
            if (!in_support[static_cast<std::size_t>(i)]) rows.push_back(i);
        }
        const auto nr = static_cast<Eigen::Index>(rows.size());
        Eigen::VectorXcd zs(m), fs(m);
        for (int k = 0; k < m; ++k) {
            zs[k] = Z[chosen[static_cast<std::size_t>(k)]];
            fs[k] = F[chosen[static_cast<std::size_t>(k)]];
        }
        Eigen::MatrixXcd C(nr, m), A(nr, m);
        for (Eigen::Index r = 0; r < nr; ++r) {
            const Eigen::Index i = rows[static_cast<std::size_t>(r)];
            for (int k = 0; k < m; ++k) {
                C(r, k) = 1.0 / (Z[i] - zs[k]);
                A(r, k) = C(r, k) * (F[i] - fs[k]);
            }
        }
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeFullV);
        const Eigen::VectorXcd w = svd.matrixV().col(m - 1);

        const Eigen::VectorXcd N = C * w.cwiseProduct(fs);
        const Eigen::VectorXcd D = C * w;
        R = F;
        for (Eigen::Index r = 0; r < nr; ++r) R[rows[static_cast<std::size_t>(r)]] = N[r] / D[r];

        BarycentricApproximant approx(zs, fs, w);
        const double train_err = (F - R).cwiseAbs().maxCoeff();
        const double hold_err = (Fh - approx.evaluate(Zh)).cwiseAbs().maxCoeff();
        if (hold_err < best.holdout_error) {
            best.approximant = approx;
            best.train_error = train_err;
            best.holdout_error = hold_err;
        }
        if (hold_err <= tol * scale) {
            best.converged = true;
            break;
        }
    }
    best.converged = best.holdout_error <= tol * scale;
    return best;
}

}  // namespace lpsim
