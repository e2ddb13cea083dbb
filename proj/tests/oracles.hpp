#pragma once

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "qdcav/qops.hpp"

// Brute-force reference implementations the tests compare the library
// against. Deliberately independent of the production code paths: the
// Liouvillian is built as an explicit superoperator matrix and exponentiated
// by scaling and squaring, instead of stepping the master equation.

namespace oracles {

using qdcav::Complex;
using qdcav::Matrix;

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// column stacking; Eigen stores column-major so the raw buffer already is vec(rho)
inline Eigen::VectorXcd vec(const Matrix& rho) {
  return Eigen::Map<const Eigen::VectorXcd>(rho.data(), rho.size());
}

inline Matrix unvec(const Eigen::VectorXcd& v, Eigen::Index dim) {
  return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

// vec(d rho/dt) = L vec(rho) for the master equation with Hamiltonian h and
// jump operators j_k at rates r_k, using vec(A X B) = (B^T (x) A) vec(X)
inline Matrix liouvillian_matrix(const Matrix& h,
                                 const std::vector<std::pair<double, Matrix>>& jumps) {
  const Eigen::Index d = h.rows();
  Matrix id = Matrix::Identity(d, d);
  Matrix l = Complex(0.0, -1.0) * (kron(id, h) - kron(h.transpose(), id));
  for (const auto& [rate, j] : jumps) {
    Matrix jdj = j.adjoint() * j;
    l += rate * (kron(j.conjugate(), j) - 0.5 * kron(id, jdj) - 0.5 * kron(jdj.transpose(), id));
  }
  return l;
}

// scaling-and-squaring Taylor series; plenty accurate at these dimensions
inline Matrix expm(const Matrix& a) {
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (norm > 0.5) {
    norm *= 0.5;
    ++squarings;
  }
  Matrix x = a / std::pow(2.0, squarings);
  Matrix term = Matrix::Identity(a.rows(), a.cols());
  Matrix sum = term;
  for (int k = 1; k <= 60; ++k) {
    term = (term * x) / double(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18 * sum.cwiseAbs().maxCoeff()) break;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

inline double uniform(std::mt19937& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// random full-rank density matrix: G G^+ normalized to unit trace
inline Matrix random_density(std::mt19937& rng, Eigen::Index dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix g(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) g(r, c) = Complex(n(rng), n(rng));
  Matrix rho = g * g.adjoint();
  rho = 0.5 * (rho + Matrix(rho.adjoint()));
  rho /= rho.trace().real();
  return rho;
}

inline Matrix random_matrix(std::mt19937& rng, Eigen::Index dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix g(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) g(r, c) = Complex(n(rng), n(rng));
  return g;
}

}  // namespace oracles
