#include "lpsim/direct_integral.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>
#include <numbers>
#include <string>

#include <unsupported/Eigen/FFT>

#include "lpsim/errors.hpp"

namespace lpsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void require_same_space(const LpVector& f, const LpVector& g) {
    if (!(f.grid() == g.grid()) || !(f.aux() == g.aux())) {
        throw DimensionError("LpVector operands live on different grids or auxiliary spaces");
    }
}

// Signed frequency index for the m-th entry of the ascending sigma grid.
long frequency_index(std::size_t row, std::size_t n) {
    return static_cast<long>(row) - static_cast<long>(n / 2);
}

std::size_t fft_slot(long m, std::size_t n) {
    const long nn = static_cast<long>(n);
    return static_cast<std::size_t>(((m % nn) + nn) % nn);
}

std::mutex& warning_mutex() {
    static std::mutex m;
    return m;
}

WarningHandler& warning_handler() {
    static WarningHandler handler = [](std::string_view msg) {
        std::cerr << "warning: " << msg << '\n';
    };
    return handler;
}

}  // namespace

TimeGrid::TimeGrid(double t_min, double t_max, std::size_t n_points)
    : t_min_(t_min), t_max_(t_max), n_(n_points), h_(0.0) {
    if (!std::isfinite(t_min) || !std::isfinite(t_max) || !(t_max > t_min)) {
        throw ValidationError("time grid needs finite t_min < t_max");
    }
    if (n_points < 8 || !is_power_of_two(n_points)) {
        throw ValidationError("time grid size must be a power of two >= 8, got " +
                              std::to_string(n_points));
    }
    h_ = (t_max - t_min) / static_cast<double>(n_points);
}

RVector TimeGrid::points() const {
    RVector t(static_cast<Eigen::Index>(n_));
    for (std::size_t k = 0; k < n_; ++k) t[static_cast<Eigen::Index>(k)] = point(k);
    return t;
}

double TimeGrid::sigma_spacing() const noexcept { return kTwoPi / length(); }

double TimeGrid::nyquist() const noexcept { return std::numbers::pi / h_; }

RVector TimeGrid::sigma() const {
    RVector s(static_cast<Eigen::Index>(n_));
    const double ds = sigma_spacing();
    for (std::size_t r = 0; r < n_; ++r) {
        s[static_cast<Eigen::Index>(r)] = ds * static_cast<double>(frequency_index(r, n_));
    }
    return s;
}

std::size_t TimeGrid::nearest(double t) const {
    const double x = std::round((t - t_min_) / h_);
    if (x <= 0.0) return 0;
    if (x >= static_cast<double>(n_ - 1)) return n_ - 1;
    return static_cast<std::size_t>(x);
}

bool TimeGrid::operator==(const TimeGrid& o) const noexcept {
    return n_ == o.n_ && t_min_ == o.t_min_ && t_max_ == o.t_max_;
}

AuxSpace::AuxSpace(int d) : dimension(d) {
    if (d < 1) throw ValidationError("auxiliary dimension must be >= 1");
}

LpVector::LpVector(TimeGrid grid, AuxSpace aux)
    : grid_(grid), aux_(aux),
      values_(CMatrix::Zero(static_cast<Eigen::Index>(grid.size()), aux.dimension)) {}

LpVector::LpVector(TimeGrid grid, AuxSpace aux, CMatrix values)
    : grid_(grid), aux_(aux), values_(std::move(values)) {
    if (values_.rows() != static_cast<Eigen::Index>(grid_.size()) ||
        values_.cols() != aux_.dimension) {
        throw DimensionError("LpVector values must be n_points x aux dimension");
    }
    if (!values_.allFinite()) throw ValidationError("LpVector values must be finite");
}

CVector LpVector::flat() const {
    // Row-major flattening: node k occupies entries [k d, (k+1) d).
    CVector out(values_.size());
    const Eigen::Index d = values_.cols();
    for (Eigen::Index k = 0; k < values_.rows(); ++k) {
        out.segment(k * d, d) = values_.row(k).transpose();
    }
    return out;
}

LpVector LpVector::from_flat(const TimeGrid& grid, const AuxSpace& aux, const CVector& flat) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    const Eigen::Index d = aux.dimension;
    if (flat.size() != n * d) throw DimensionError("flat vector length must be n_points * d");
    CMatrix v(n, d);
    for (Eigen::Index k = 0; k < n; ++k) v.row(k) = flat.segment(k * d, d).transpose();
    return LpVector(grid, aux, std::move(v));
}

double LpVector::norm() const { return std::sqrt(values_.squaredNorm() * grid_.spacing()); }

SpectralVector::SpectralVector(TimeGrid grid, AuxSpace aux, CMatrix values)
    : grid_(grid), aux_(aux), values_(std::move(values)) {
    if (values_.rows() != static_cast<Eigen::Index>(grid_.size()) ||
        values_.cols() != aux_.dimension) {
        throw DimensionError("SpectralVector values must be n_points x aux dimension");
    }
}

double SpectralVector::norm() const {
    return std::sqrt(values_.squaredNorm() * grid_.sigma_spacing() / kTwoPi);
}

cplx inner_product(const LpVector& f, const LpVector& g) {
    require_same_space(f, g);
    cplx acc = 0.0;
    const CMatrix& a = f.values();
    const CMatrix& b = g.values();
    for (Eigen::Index k = 0; k < a.rows(); ++k) acc += a.row(k).dot(b.row(k));
    return acc * f.grid().spacing();
}

SpectralVector to_spectral(const LpVector& f) {
    const TimeGrid& grid = f.grid();
    const std::size_t n = grid.size();
    const double h = grid.spacing();
    const RVector sigma = grid.sigma();
    CMatrix out(static_cast<Eigen::Index>(n), f.aux().dimension);

    Eigen::FFT<double> fft;
    std::vector<cplx> in(n), spec(n);
    for (int a = 0; a < f.aux().dimension; ++a) {
        for (std::size_t k = 0; k < n; ++k) in[k] = f.values()(static_cast<Eigen::Index>(k), a);
        fft.fwd(spec, in);
        for (std::size_t r = 0; r < n; ++r) {
            const long m = frequency_index(r, n);
            const double s = sigma[static_cast<Eigen::Index>(r)];
            out(static_cast<Eigen::Index>(r), a) =
                h * std::exp(cplx(0.0, -s * grid.t_min())) * spec[fft_slot(m, n)];
        }
    }
    return SpectralVector(grid, f.aux(), std::move(out));
}

LpVector from_spectral(const SpectralVector& g) {
    const TimeGrid& grid = g.grid();
    const std::size_t n = grid.size();
    const double h = grid.spacing();
    const RVector sigma = grid.sigma();
    CMatrix out(static_cast<Eigen::Index>(n), g.aux().dimension);

    Eigen::FFT<double> fft;
    std::vector<cplx> spec(n), time(n);
    for (int a = 0; a < g.aux().dimension; ++a) {
        for (std::size_t r = 0; r < n; ++r) {
            const long m = frequency_index(r, n);
            const double s = sigma[static_cast<Eigen::Index>(r)];
            spec[fft_slot(m, n)] =
                g.values()(static_cast<Eigen::Index>(r), a) * std::exp(cplx(0.0, s * grid.t_min())) / h;
        }
        fft.inv(time, spec);
        for (std::size_t k = 0; k < n; ++k) out(static_cast<Eigen::Index>(k), a) = time[k];
    }
    return LpVector(grid, g.aux(), std::move(out));
}

LpVector shift_nodes(const LpVector& f, long nodes) {
    const auto n = static_cast<long>(f.grid().size());
    const long s = ((nodes % n) + n) % n;
    CMatrix out(f.values().rows(), f.values().cols());
    for (long k = 0; k < n; ++k) out.row((k + s) % n) = f.values().row(k);
    return LpVector(f.grid(), f.aux(), std::move(out));
}

LpVector translate(const LpVector& f, double tau) {
    const double steps = tau / f.grid().spacing();
    const double rounded = std::round(steps);
    if (std::abs(steps - rounded) <= 1e-9 * std::max(1.0, std::abs(steps))) {
        return shift_nodes(f, static_cast<long>(rounded));
    }
    SpectralVector spec = to_spectral(f);
    const RVector sigma = spec.sigma();
    CMatrix v = spec.values();
    for (Eigen::Index r = 0; r < v.rows(); ++r) v.row(r) *= std::exp(cplx(0.0, -sigma[r] * tau));
    return from_spectral(SpectralVector(f.grid(), f.aux(), std::move(v)));
}

CMatrix free_generator(const TimeGrid& grid) {
    // Circulant with first column c_l = (1/n) sum_m sigma_m e^{2 pi i m l / n}.
    const std::size_t n = grid.size();
    const RVector sigma = grid.sigma();
    std::vector<cplx> spec(n), col(n);
    for (std::size_t r = 0; r < n; ++r) {
        spec[fft_slot(frequency_index(r, n), n)] = sigma[static_cast<Eigen::Index>(r)];
    }
    Eigen::FFT<double> fft;
    fft.inv(col, spec);
    const auto nn = static_cast<Eigen::Index>(n);
    CMatrix k0(nn, nn);
    for (Eigen::Index j = 0; j < nn; ++j) {
        for (Eigen::Index k = 0; k < nn; ++k) {
            k0(j, k) = col[static_cast<std::size_t>(((j - k) % nn + nn) % nn)];
        }
    }
    // Symmetrize away rounding so the matrix is Hermitian to the last bit.
    CMatrix herm = 0.5 * (k0 + k0.adjoint());
    return herm;
}

std::size_t support_margin(const LpVector& f, double rel_threshold) {
    const RVector weight = f.values().rowwise().squaredNorm();
    const double peak = weight.maxCoeff();
    const auto n = static_cast<std::size_t>(weight.size());
    if (peak <= 0.0) return n;
    std::size_t first = n, last = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (weight[static_cast<Eigen::Index>(k)] > rel_threshold * peak) {
            first = std::min(first, k);
            last = k;
        }
    }
    return std::min(first, n - 1 - last);
}

bool check_support_margin(const LpVector& f, std::size_t min_nodes, double rel_threshold) {
    const std::size_t margin = support_margin(f, rel_threshold);
    if (margin < min_nodes) {
        warn("state support is " + std::to_string(margin) + " node(s) from the grid edge (need " +
             std::to_string(min_nodes) + "); periodic wrap-around may contaminate the result");
        return false;
    }
    return true;
}

WarningHandler set_warning_handler(WarningHandler handler) {
    std::lock_guard lock(warning_mutex());
    WarningHandler old = std::move(warning_handler());
    warning_handler() = std::move(handler);
    return old;
}

void warn(std::string_view message) {
    std::lock_guard lock(warning_mutex());
    if (warning_handler()) warning_handler()(message);
}

}  // namespace lpsim
