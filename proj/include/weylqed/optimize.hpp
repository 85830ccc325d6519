// optimize.hpp — thin wrappers around GSL/Boost/Eigen numerics used across modules

#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "weylqed/core.hpp"

namespace weylqed::optimize {

struct Minimum {
    std::vector<double> x;
    double value{0.0};
    int iterations{0};
    bool converged{false};
};

/// Derivative-free simplex descent (GSL nmsimplex2). Stops when the simplex
/// characteristic size drops below `size_tol`.
inline Minimum nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                           double initial_step, double size_tol = 1e-11, int max_iter = 5000) {
    struct Ctx {
        const std::function<double(std::span<const double>)>* f;
    } ctx{&f};
    const std::size_t n = x0.size();

    gsl_multimin_function fn;
    fn.n = n;
    fn.params = &ctx;
    fn.f = [](const gsl_vector* v, void* p) -> double {
        auto* c = static_cast<Ctx*>(p);
        return (*c->f)(std::span<const double>(v->data, v->size));
    };

    gsl_vector* x = gsl_vector_alloc(n);
    gsl_vector* step = gsl_vector_alloc(n);
    for (std::size_t i = 0; i < n; ++i) {
        gsl_vector_set(x, i, x0[i]);
        gsl_vector_set(step, i, initial_step);
    }
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
    gsl_multimin_fminimizer_set(s, &fn, x, step);

    Minimum out;
    int status = GSL_CONTINUE;
    while (status == GSL_CONTINUE && out.iterations < max_iter) {
        ++out.iterations;
        if (gsl_multimin_fminimizer_iterate(s) != 0) break;
        status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), size_tol);
    }
    out.converged = (status == GSL_SUCCESS);
    out.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.x[i] = gsl_vector_get(s->x, i);
    out.value = s->fval;

    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(step);
    gsl_vector_free(x);
    return out;
}

/// Root of f in [lo, hi]; requires a sign change.
inline double bracketed_root(const std::function<double(double)>& f, double lo, double hi, double abs_tol = 1e-14) {
    std::uintmax_t max_iter = 200;
    auto tol = [abs_tol](double a, double b) { return std::abs(b - a) <= abs_tol; };
    auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, max_iter);
    return 0.5 * (a + b);
}

struct LineFit {
    double slope{0.0};
    double intercept{0.0};
    double r_squared{0.0};
};

inline LineFit least_squares_line(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        A(i, 0) = x[static_cast<std::size_t>(i)];
        A(i, 1) = 1.0;
        b(i) = y[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
    const Eigen::VectorXd resid = b - A * c;
    const double mean = b.mean();
    const double ss_tot = (b.array() - mean).square().sum();
    LineFit fit;
    fit.slope = c(0);
    fit.intercept = c(1);
    fit.r_squared = ss_tot > 0.0 ? 1.0 - resid.squaredNorm() / ss_tot : 1.0;
    return fit;
}

/// Value at x = 0 of the parabola through three samples (Lagrange form).
template <class T>
T extrapolate_to_zero(const std::array<double, 3>& x, const std::array<T, 3>& y) {
    T out{};
    for (int i = 0; i < 3; ++i) {
        double w = 1.0;
        for (int j = 0; j < 3; ++j)
            if (j != i) w *= (0.0 - x[j]) / (x[i] - x[j]);
        out += w * y[i];
    }
    return out;
}

} // namespace weylqed::optimize
