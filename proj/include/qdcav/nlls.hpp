#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qdcav/errors.hpp"

// Small damped Gauss-Newton (Levenberg-Marquardt) engine for the handful of
// curve fits this toolkit needs. Derivatives come from central differences;
// everything is deterministic for fixed inputs.

namespace qdcav {

using Vector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

using ResidualFn = std::function<Vector(const Vector&)>;

struct FitOptions {
  int max_iterations = 200;
  double rel_tol = 1e-10;  // relative drop of the squared residual that counts as converged
  std::optional<Vector> lower;  // box constraints enforced by clamping trial steps
  std::optional<Vector> upper;
  double normalization = 1.0;  // residual_rms is sqrt(SSR/n) / normalization
};

struct FitResult {
  std::vector<std::string> param_names;
  Vector params;
  double ssr = 0.0;
  double residual_rms = 0.0;
  bool converged = false;
  int iterations = 0;
  std::optional<Vector> covariance_diag;  // sigma^2 (J^T J)^-1 diagonal, when estimable
};

namespace detail {

inline Vector clamp_params(Vector p, const FitOptions& opt) {
  if (opt.lower)
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = std::max(p[i], (*opt.lower)[i]);
  if (opt.upper)
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = std::min(p[i], (*opt.upper)[i]);
  return p;
}

inline RealMatrix numeric_jacobian(const ResidualFn& f, const Vector& p, Eigen::Index n_res) {
  RealMatrix j(n_res, p.size());
  for (Eigen::Index c = 0; c < p.size(); ++c) {
    double h = 1e-6 * (1.0 + std::abs(p[c]));
    Vector lo = p, hi = p;
    lo[c] -= h;
    hi[c] += h;
    Vector r_hi = f(hi), r_lo = f(lo);
    if (r_hi.size() != n_res || r_lo.size() != n_res)
      throw DomainError("residual function changed output length during fit");
    j.col(c) = (r_hi - r_lo) / (2.0 * h);
  }
  if (!j.allFinite()) throw DomainError("non-finite Jacobian encountered during fit");
  return j;
}

}  // namespace detail

inline FitResult nlls_fit(const ResidualFn& f, std::vector<std::string> param_names,
                          const Vector& initial, const FitOptions& opt = {}) {
  if (initial.size() == 0) throw DomainError("fit needs at least one parameter");
  if (param_names.size() != std::size_t(initial.size()))
    throw DomainError("parameter name list does not match parameter count");

  FitResult out;
  out.param_names = std::move(param_names);

  Vector p = detail::clamp_params(initial, opt);
  Vector r = f(p);
  if (r.size() == 0) throw DomainError("residual function returned no residuals");
  if (!r.allFinite()) throw DomainError("non-finite residuals at the initial guess");
  const Eigen::Index n = r.size(), m = p.size();
  double ssr = r.squaredNorm();

  double lambda = 1e-3;
  RealMatrix jac;
  bool have_jac = false;

  for (int iter = 0; iter < opt.max_iterations && !out.converged; ++iter) {
    jac = detail::numeric_jacobian(f, p, n);
    have_jac = true;
    for (Eigen::Index c = 0; c < m; ++c)
      if (jac.col(c).norm() == 0.0)
        throw RankDeficiencyError("parameter '" + out.param_names[std::size_t(c)] +
                                  "' has no influence on the residuals");

    RealMatrix jtj = jac.transpose() * jac;
    Vector grad = jac.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() < 1e-14 * std::max(ssr, 1e-300)) {
      out.converged = true;
      break;
    }

    bool stepped = false;
    for (int inner = 0; inner < 40; ++inner) {
      RealMatrix damped = jtj;
      for (Eigen::Index c = 0; c < m; ++c)
        damped(c, c) += lambda * std::max(jtj(c, c), 1e-12);
      Vector dp = damped.ldlt().solve(-grad);
      if (!dp.allFinite()) {
        lambda *= 4.0;
        continue;
      }
      Vector p_try = detail::clamp_params(p + dp, opt);
      Vector r_try = f(p_try);
      if (r_try.size() == n && r_try.allFinite() && r_try.squaredNorm() < ssr) {
        double ssr_old = ssr;
        p = p_try;
        r = r_try;
        ssr = r.squaredNorm();
        lambda = std::max(lambda / 3.0, 1e-12);
        ++out.iterations;
        stepped = true;
        if (ssr_old - ssr <= opt.rel_tol * std::max(ssr_old, 1e-300)) out.converged = true;
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e12) break;
    }
    if (!stepped) {
      // no damped step descends: the point is a minimum at working precision
      out.converged = true;
      break;
    }
  }

  out.params = p;
  out.ssr = ssr;
  double norm = opt.normalization != 0.0 ? std::abs(opt.normalization) : 1.0;
  out.residual_rms = std::sqrt(ssr / double(n)) / norm;

  if (have_jac && n > m) {
    RealMatrix jtj = jac.transpose() * jac;
    Eigen::LDLT<RealMatrix> ldlt(jtj);
    if (ldlt.info() == Eigen::Success) {
      RealMatrix inv = ldlt.solve(RealMatrix::Identity(m, m));
      if (inv.allFinite()) {
        double sigma2 = ssr / double(n - m);
        Vector diag = (sigma2 * inv.diagonal()).cwiseAbs();
        out.covariance_diag = diag;
      }
    }
  }
  return out;
}

}  // namespace qdcav
