#pragma once

// Discretized direct-integral space L^2(t; H_aux): a periodic time grid
// carrying one auxiliary-space vector per node, its Fourier dual, and the
// free translation group.

#include <complex>
#include <cstddef>
#include <functional>
#include <string_view>

#include <Eigen/Dense>

namespace lpsim {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Uniform periodic grid t_k = t_min + k * spacing, k = 0..n-1.
class TimeGrid {
public:
    TimeGrid(double t_min, double t_max, std::size_t n_points);

    double t_min() const noexcept { return t_min_; }
    double t_max() const noexcept { return t_max_; }
    std::size_t size() const noexcept { return n_; }
    double spacing() const noexcept { return h_; }
    double length() const noexcept { return t_max_ - t_min_; }
    double point(std::size_t k) const noexcept { return t_min_ + h_ * static_cast<double>(k); }
    RVector points() const;

    /// Fourier-dual grid, ascending: sigma_m = 2 pi m / (n h), m = -n/2 .. n/2-1.
    RVector sigma() const;
    double sigma_spacing() const noexcept;
    double nyquist() const noexcept;

    /// Index of the node closest to t (no wrap).
    std::size_t nearest(double t) const;

    bool operator==(const TimeGrid& other) const noexcept;

private:
    double t_min_;
    double t_max_;
    std::size_t n_;
    double h_;
};

struct AuxSpace {
    explicit AuxSpace(int d);
    int dimension;
    bool operator==(const AuxSpace&) const = default;
};

/// psi = {psi_t}: row k holds the auxiliary vector at node t_k.
class LpVector {
public:
    LpVector(TimeGrid grid, AuxSpace aux);
    LpVector(TimeGrid grid, AuxSpace aux, CMatrix values);

    const TimeGrid& grid() const noexcept { return grid_; }
    const AuxSpace& aux() const noexcept { return aux_; }
    const CMatrix& values() const noexcept { return values_; }
    CMatrix& values() noexcept { return values_; }

    /// Node-major flattening, index k * d + a.
    CVector flat() const;
    static LpVector from_flat(const TimeGrid& grid, const AuxSpace& aux, const CVector& flat);

    double norm() const;

private:
    TimeGrid grid_;
    AuxSpace aux_;
    CMatrix values_;
};

/// psi-hat on the dual grid; rows follow TimeGrid::sigma() ordering.
class SpectralVector {
public:
    SpectralVector(TimeGrid grid, AuxSpace aux, CMatrix values);

    const TimeGrid& grid() const noexcept { return grid_; }
    const AuxSpace& aux() const noexcept { return aux_; }
    RVector sigma() const { return grid_.sigma(); }
    const CMatrix& values() const noexcept { return values_; }

    /// sqrt( sum_m |psi-hat_m|^2 dsigma / 2pi ); equals the time-domain norm.
    double norm() const;

private:
    TimeGrid grid_;
    AuxSpace aux_;
    CMatrix values_;
};

/// (f, g) = sum_k <f_k, g_k> * spacing; conjugate-linear in f.
cplx inner_product(const LpVector& f, const LpVector& g);

SpectralVector to_spectral(const LpVector& f);
LpVector from_spectral(const SpectralVector& g);

/// (U0(tau) f)_t = f_{t - tau}. Lattice multiples of the spacing are exact
/// circular shifts; other tau go through the spectral phase e^{-i sigma tau}.
LpVector translate(const LpVector& f, double tau);

/// Circular shift by whole nodes (positive moves support to larger t).
LpVector shift_nodes(const LpVector& f, long nodes);

/// Hermitian circulant matrix of the free generator -i d/dt, i.e. spectral
/// multiplication by sigma, acting on node values (n x n).
CMatrix free_generator(const TimeGrid& grid);

/// Distance, in nodes, between the significant support of f and the grid
/// edges. A node is significant when |f_k|^2 > rel_threshold * max |f|^2.
std::size_t support_margin(const LpVector& f, double rel_threshold = 1e-12);

/// Emits a warning through the warning handler when the support of f comes
/// closer than min_nodes to either grid edge. Returns true when the margin holds.
bool check_support_margin(const LpVector& f, std::size_t min_nodes = 4,
                          double rel_threshold = 1e-12);

using WarningHandler = std::function<void(std::string_view)>;
/// Replaces the process-wide warning sink (default: stderr). Returns the old one.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace lpsim
