#pragma once

#include <utility>
#include <vector>

namespace cavlev {

/// Nodes and weights of a one-dimensional quadrature rule.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on [-1, 1] (Golub-Welsch).
QuadratureRule gauss_legendre(int n);

/// Gauss-Legendre rule mapped to [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);

/// n-point Gauss-Hermite rule for the weight e^{-x^2} on the real line
/// (physicists' convention).
QuadratureRule gauss_hermite(int n);

/// Uniform periodic (trapezoidal) rule on [0, 2*pi) with n points; exact for
/// trigonometric polynomials of degree < n.
QuadratureRule periodic_uniform(int n);

} // namespace cavlev
