#pragma once

#include <complex>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "qdcav/errors.hpp"

// Operator toolbox for a three-level emitter tensored with a truncated
// Fock cavity mode. Basis ordering is fixed:
//   index = (level - 1) * (n_fock + 1) + photons
// with emitter levels 1 = ground, 2 = exciton, 3 = pump level.

namespace qdcav {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

inline constexpr int level_ground = 1;
inline constexpr int level_exciton = 2;
inline constexpr int level_pump = 3;

class HilbertSpace {
 public:
  static constexpr int emitter_dim = 3;

  explicit HilbertSpace(int n_fock) : n_fock_(n_fock) {
    if (n_fock < 1)
      throw DimensionError("photon truncation n_fock must be >= 1, got " + std::to_string(n_fock));
  }

  int n_fock() const { return n_fock_; }
  int cavity_dim() const { return n_fock_ + 1; }
  int dim() const { return emitter_dim * cavity_dim(); }

  int index(int level, int photons) const {
    check_level(level);
    if (photons < 0 || photons > n_fock_)
      throw DimensionError("photon number " + std::to_string(photons) + " outside [0, " +
                           std::to_string(n_fock_) + "]");
    return (level - 1) * cavity_dim() + photons;
  }

  // inverse of index(): returns {level, photons}
  std::pair<int, int> level_photons(int index) const {
    if (index < 0 || index >= dim())
      throw DimensionError("basis index " + std::to_string(index) + " outside [0, " +
                           std::to_string(dim() - 1) + "]");
    return {index / cavity_dim() + 1, index % cavity_dim()};
  }

  static void check_level(int level) {
    if (level < 1 || level > emitter_dim)
      throw DomainError("emitter level must be 1 (ground), 2 (exciton) or 3 (pump level), got " +
                        std::to_string(level));
  }

 private:
  int n_fock_;
};

inline HilbertSpace make_space(int n_fock) { return HilbertSpace(n_fock); }

namespace detail {

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols())
    throw DimensionError(std::string(what) + ": matrix is not square (" + std::to_string(m.rows()) +
                         "x" + std::to_string(m.cols()) + ")");
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(what) + ": operand dimensions differ (" +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
}

}  // namespace detail

inline Matrix identity(const HilbertSpace& space) {
  return Matrix::Identity(space.dim(), space.dim());
}

// cavity lowering operator, <n-1|a|n> = sqrt(n); the top Fock state maps
// down normally, truncation only removes a^dagger |n_fock>
inline Matrix annihilation(const HilbertSpace& space) {
  Matrix a = Matrix::Zero(space.dim(), space.dim());
  for (int level = 1; level <= HilbertSpace::emitter_dim; ++level)
    for (int n = 1; n <= space.n_fock(); ++n)
      a(space.index(level, n - 1), space.index(level, n)) = std::sqrt(double(n));
  return a;
}

inline Matrix creation(const HilbertSpace& space) { return annihilation(space).adjoint(); }

inline Matrix number_operator(const HilbertSpace& space) {
  Matrix a = annihilation(space);
  return a.adjoint() * a;
}

// emitter transition operator |to><from| (x) identity on the cavity
inline Matrix sigma(const HilbertSpace& space, int to_level, int from_level) {
  HilbertSpace::check_level(to_level);
  HilbertSpace::check_level(from_level);
  Matrix s = Matrix::Zero(space.dim(), space.dim());
  for (int n = 0; n <= space.n_fock(); ++n)
    s(space.index(to_level, n), space.index(from_level, n)) = 1.0;
  return s;
}

inline Matrix level_projector(const HilbertSpace& space, int level) {
  return sigma(space, level, level);
}

inline Matrix adjoint(const Matrix& m) { return m.adjoint(); }

inline Matrix compose(const Matrix& a, const Matrix& b) {
  detail::require_square(a, "compose");
  detail::require_same_shape(a, b, "compose");
  return a * b;
}

// a + c*b
inline Matrix add_scaled(const Matrix& a, const Matrix& b, Complex c) {
  detail::require_same_shape(a, b, "add_scaled");
  return a + c * b;
}

// Tr(A rho)
inline Complex expectation(const Matrix& rho, const Matrix& a) {
  detail::require_square(rho, "expectation");
  detail::require_same_shape(rho, a, "expectation");
  return (a * rho).trace();
}

// D[L] rho = L rho L^+ - (L^+ L rho + rho L^+ L)/2
inline Matrix dissipator(const Matrix& jump, const Matrix& rho) {
  detail::require_square(rho, "dissipator");
  detail::require_same_shape(jump, rho, "dissipator");
  Matrix jdj = jump.adjoint() * jump;
  return jump * rho * jump.adjoint() - 0.5 * (jdj * rho + rho * jdj);
}

inline double trace_error(const Matrix& rho) { return std::abs(rho.trace() - Complex(1.0, 0.0)); }

inline double hermiticity_error(const Matrix& m) {
  return (m - Matrix(m.adjoint())).cwiseAbs().maxCoeff();
}

inline double min_eigenvalue(const Matrix& rho) {
  Matrix sym = 0.5 * (rho + Matrix(rho.adjoint()));
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

// tolerances used to accept an input state: hermiticity 1e-10, unit trace
// 1e-8, eigenvalues above -1e-9
inline void validate_density_matrix(const Matrix& rho) {
  detail::require_square(rho, "density matrix");
  if (hermiticity_error(rho) > 1e-10)
    throw DomainError("density matrix is not Hermitian (max asymmetry " +
                      std::to_string(hermiticity_error(rho)) + ")");
  if (trace_error(rho) > 1e-8)
    throw DomainError("density matrix trace deviates from 1 by " + std::to_string(trace_error(rho)));
  double lam = min_eigenvalue(rho);
  if (lam < -1e-9)
    throw DomainError("density matrix has negative eigenvalue " + std::to_string(lam));
}

// population of one emitter level: sum of diagonal entries over all photon numbers
inline double level_population(const Matrix& rho, const HilbertSpace& space, int level) {
  HilbertSpace::check_level(level);
  double p = 0.0;
  for (int n = 0; n <= space.n_fock(); ++n) p += rho(space.index(level, n), space.index(level, n)).real();
  return p;
}

// occupation of the highest retained Fock state, summed over emitter levels
inline double top_fock_population(const Matrix& rho, const HilbertSpace& space) {
  double p = 0.0;
  for (int level = 1; level <= HilbertSpace::emitter_dim; ++level) {
    int i = space.index(level, space.n_fock());
    p += rho(i, i).real();
  }
  return p;
}

inline Matrix pure_state(const HilbertSpace& space, int level, int photons) {
  Matrix rho = Matrix::Zero(space.dim(), space.dim());
  rho(space.index(level, photons), space.index(level, photons)) = 1.0;
  return rho;
}

inline Matrix ground_state(const HilbertSpace& space) { return pure_state(space, level_ground, 0); }
inline Matrix exciton_state(const HilbertSpace& space) { return pure_state(space, level_exciton, 0); }

}  // namespace qdcav
