#pragma once

// Shared fixtures for the unit suites.

#include <random>

#include "lpsim/direct_integral.hpp"

namespace lptest {

using namespace lpsim;

inline CVector random_vector(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> nd(0.0, 1.0);
    CVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double re = nd(rng);
        const double im = nd(rng);
        v[i] = cplx(re, im);
    }
    return v;
}

inline CMatrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    CMatrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) m.col(j) = random_vector(rng, r);
    return m;
}

inline CMatrix random_hermitian(std::mt19937_64& rng, Eigen::Index d) {
    const CMatrix x = random_matrix(rng, d, d);
    return 0.5 * (x + x.adjoint());
}

inline LpVector random_state(std::mt19937_64& rng, const TimeGrid& g, const AuxSpace& aux) {
    LpVector f(g, aux, random_matrix(rng, static_cast<Eigen::Index>(g.size()), aux.dimension));
    return f;
}

inline double max_abs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace lptest
