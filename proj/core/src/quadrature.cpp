#include "cavlev/quadrature.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "cavlev/errors.hpp"

namespace cavlev {

namespace {

// Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix with
// off-diagonal b_k. Weights are mu0 * (first eigenvector component)^2.
QuadratureRule golub_welsch(const std::vector<double>& offdiag, double mu0)
{
    const int n = static_cast<int>(offdiag.size()) + 1;
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k + 1 < n; ++k) {
        jacobi(k, k + 1) = offdiag[static_cast<std::size_t>(k)];
        jacobi(k + 1, k) = offdiag[static_cast<std::size_t>(k)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    if (solver.info() != Eigen::Success)
        throw NumericalError("golub_welsch: Jacobi eigen-decomposition failed");

    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rule.nodes[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
        const double v0 = solver.eigenvectors()(0, i);
        rule.weights[static_cast<std::size_t>(i)] = mu0 * v0 * v0;
    }
    return rule;
}

} // namespace

QuadratureRule gauss_legendre(int n)
{
    if (n < 1)
        throw DomainError("gauss_legendre: order must be >= 1");
    std::vector<double> b(static_cast<std::size_t>(n - 1));
    for (int k = 1; k < n; ++k)
        b[static_cast<std::size_t>(k - 1)] = k / std::sqrt(4.0 * k * k - 1.0);
    return golub_welsch(b, 2.0);
}

QuadratureRule gauss_legendre(int n, double a, double b)
{
    QuadratureRule rule = gauss_legendre(n);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (std::size_t i = 0; i < rule.size(); ++i) {
        rule.nodes[i] = mid + half * rule.nodes[i];
        rule.weights[i] *= half;
    }
    return rule;
}

QuadratureRule gauss_hermite(int n)
{
    if (n < 1)
        throw DomainError("gauss_hermite: order must be >= 1");
    std::vector<double> b(static_cast<std::size_t>(n - 1));
    for (int k = 1; k < n; ++k)
        b[static_cast<std::size_t>(k - 1)] = std::sqrt(0.5 * k);
    return golub_welsch(b, std::sqrt(std::numbers::pi));
}

QuadratureRule periodic_uniform(int n)
{
    if (n < 1)
        throw DomainError("periodic_uniform: order must be >= 1");
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.assign(static_cast<std::size_t>(n), 2.0 * std::numbers::pi / n);
    for (int i = 0; i < n; ++i)
        rule.nodes[static_cast<std::size_t>(i)] = 2.0 * std::numbers::pi * i / n;
    return rule;
}

} // namespace cavlev
