#pragma once

#include <Eigen/Core>

namespace maml {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Largest singular value (operator norm) of a general square matrix.
double operator_norm(const Matrix& m);

// Spectral norm of a symmetric matrix.
double sym_spectral_norm(const Matrix& m);

// Exact maximum of the quadratic  w' A w + 2 b' w + c  over the ball
// ||w|| <= r, for symmetric positive semidefinite A. The maximum of a convex
// quadratic over a ball sits on the sphere; the stationarity system
// (A - mu I) w = -b with mu >= lambda_max(A) is solved by a secular-equation
// bisection, including the hard case where b has no component on the top
// eigenspace.
double max_convex_quadratic_on_ball(const Matrix& a, const Vector& b, double c,
                                    double r);

// Exact maximum of ||M w - v|| over the ball ||w|| <= r.
double max_affine_norm_on_ball(const Matrix& m, const Vector& v, double r);

}  // namespace maml
