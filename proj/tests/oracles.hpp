// oracles.hpp — dense and shift-invert references, independent of the momentum-space code paths

#pragma once

#include <algorithm>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "weylqed/dynamics.hpp"
#include "weylqed/lattice.hpp"

namespace oracle {

using weylqed::cplx;

inline Eigen::MatrixXd dense(const weylqed::SparseRealMatrix& h) { return Eigen::MatrixXd(h); }

inline std::vector<double> spectrum(const weylqed::SparseRealMatrix& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(h), Eigen::EigenvaluesOnly);
    std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(v.begin(), v.end());
    return v;
}

/// (z - H)^-1 by dense LU.
inline Eigen::MatrixXcd resolvent(const weylqed::SparseRealMatrix& h, cplx z) {
    const Eigen::Index n = h.rows();
    Eigen::MatrixXcd a = z * Eigen::MatrixXcd::Identity(n, n) - dense(h).cast<cplx>();
    return a.partialPivLu().inverse();
}

/// exp(-i H t) v through the full eigendecomposition.
inline Eigen::VectorXcd propagate(const weylqed::SparseRealMatrix& h, const Eigen::VectorXcd& v, double t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(h));
    const Eigen::MatrixXcd u = es.eigenvectors().cast<cplx>();
    Eigen::VectorXcd c = u.adjoint() * v;
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] *= std::exp(cplx(0.0, -es.eigenvalues()[i] * t));
    return u * c;
}

struct Eigenpair {
    double value{0.0};
    Eigen::VectorXd vector;
};

/// Eigenpair closest to `shift` by inverse iteration on a sparse LU of (H - shift).
inline Eigenpair shift_invert(const weylqed::SparseRealMatrix& h, double shift, int iterations = 60) {
    Eigen::SparseMatrix<double> a = h;
    for (Eigen::Index i = 0; i < a.rows(); ++i) a.coeffRef(i, i) -= shift;
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(a.rows()) + 0.01 * Eigen::VectorXd::LinSpaced(a.rows(), 0.0, 1.0);
    v.normalize();
    for (int k = 0; k < iterations; ++k) {
        Eigen::VectorXd w = lu.solve(v);
        w.normalize();
        const double change = std::min((w - v).norm(), (w + v).norm());
        v = w;
        if (change < 1e-13) break;
    }
    const Eigen::SparseMatrix<double> hs = h;
    return {v.dot(hs * v), v};
}

} // namespace oracle
