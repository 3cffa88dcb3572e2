#include "robustcov/factor_model.hpp"

#include <cmath>
#include <string>

#include "robustcov/errors.hpp"

namespace robustcov {

const char* to_string(ShrinkageRule rule) {
  switch (rule) {
    case ShrinkageRule::Hard: return "hard";
    case ShrinkageRule::Soft: return "soft";
    case ShrinkageRule::Scad: return "scad";
    case ShrinkageRule::AdaptiveLasso: return "adaptive-lasso";
  }
  throw InvalidInputError("to_string: unknown ShrinkageRule");
}

ShrinkageRule shrinkage_rule_from_string(std::string_view name) {
  if (name == "hard") return ShrinkageRule::Hard;
  if (name == "soft") return ShrinkageRule::Soft;
  if (name == "scad") return ShrinkageRule::Scad;
  if (name == "adaptive-lasso") return ShrinkageRule::AdaptiveLasso;
  throw InvalidInputError("unknown shrinkage rule: " + std::string(name));
}

void ThresholdSpec::validate() const {
  if (!(c_tau >= 0.0) || !std::isfinite(c_tau))
    throw InvalidInputError("ThresholdSpec: c_tau must be finite and >= 0");
  if (rule == ShrinkageRule::Scad && !(scad_a > 2.0))
    throw InvalidInputError("ThresholdSpec: SCAD parameter must exceed 2");
  if (rule == ShrinkageRule::AdaptiveLasso &&
      (!(eta >= 0.0) || !std::isfinite(eta)))
    throw InvalidInputError("ThresholdSpec: eta must be finite and >= 0");
}

namespace {

void check_square_symmetric(const Matrix& A, const char* who) {
  if (A.rows() != A.cols())
    throw InvalidInputError(std::string(who) + ": matrix must be square");
  if (!A.allFinite())
    throw InvalidInputError(std::string(who) + ": non-finite entry");
  double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InvalidInputError(std::string(who) + ": matrix must be symmetric");
}

void check_blocks(const JointBlocks& b, const char* who) {
  if (b.p < 1 || b.r < 1)
    throw InvalidInputError(std::string(who) + ": p and r must be positive");
  if (b.r > b.p)
    throw InvalidInputError(std::string(who) + ": r must not exceed p");
  if (b.s11.rows() != b.p || b.s11.cols() != b.p || b.s12.rows() != b.p ||
      b.s12.cols() != b.r || b.s22.rows() != b.r || b.s22.cols() != b.r)
    throw InvalidInputError(std::string(who) + ": block dimensions inconsistent");
  if (!b.s11.allFinite() || !b.s12.allFinite() || !b.s22.allFinite())
    throw InvalidInputError(std::string(who) + ": non-finite entry in blocks");
}

/// s22^{-1} * X through the eigendecomposition of s22, with a condition cap.
Matrix factor_block_solve(const Matrix& s22, const Matrix& X, double cond_cap,
                          const char* who) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s22);
  if (eig.info() != Eigen::Success)
    throw NumericalError(std::string(who) + ": eigensolver failed on factor block");
  Vector lambda = eig.eigenvalues();
  double lo = lambda.cwiseAbs().minCoeff();
  double hi = lambda.cwiseAbs().maxCoeff();
  if (!(lo > 0.0) || hi / lo > cond_cap)
    throw SingularFactorCovarianceError(
        std::string(who) + ": factor block is singular or ill-conditioned "
        "(|lambda| range [" + std::to_string(lo) + ", " + std::to_string(hi) + "])");
  return eig.eigenvectors() *
         lambda.cwiseInverse().asDiagonal() *
         (eig.eigenvectors().transpose() * X);
}

}  // namespace

JointBlocks split_blocks(const Matrix& sigma_z, Index p, Index r) {
  if (p < 1 || r < 1)
    throw InvalidInputError("split_blocks: p and r must be positive");
  check_square_symmetric(sigma_z, "split_blocks");
  if (sigma_z.rows() != p + r)
    throw InvalidInputError("split_blocks: matrix dimension must equal p + r");
  JointBlocks b;
  b.p = p;
  b.r = r;
  b.s11 = sigma_z.topLeftCorner(p, p);
  b.s12 = sigma_z.topRightCorner(p, r);
  b.s22 = sigma_z.bottomRightCorner(r, r);
  return b;
}

Matrix lowrank_part(const JointBlocks& blocks, double cond_cap) {
  check_blocks(blocks, "lowrank_part");
  Matrix x = factor_block_solve(blocks.s22, blocks.s12.transpose(), cond_cap,
                                "lowrank_part");
  Matrix m = blocks.s12 * x;
  return ((m + m.transpose()) / 2.0).eval();
}

Matrix residual_cov(const JointBlocks& blocks, double cond_cap) {
  Matrix m = blocks.s11 - lowrank_part(blocks, cond_cap);
  return ((m + m.transpose()) / 2.0).eval();
}

Matrix adaptive_threshold(const Matrix& sigma_u, const ThresholdSpec& spec,
                          std::int64_t n) {
  check_square_symmetric(sigma_u, "adaptive_threshold");
  spec.validate();
  if (n < 2) throw InvalidInputError("adaptive_threshold: n must be >= 2");

  if (spec.c_tau == 0.0) return sigma_u;

  const Index p = sigma_u.rows();
  const double tau =
      spec.c_tau * std::sqrt(std::log(static_cast<double>(p)) /
                             static_cast<double>(n));

  Vector d(p);
  for (Index i = 0; i < p; ++i) {
    double v = sigma_u(i, i);
    d[i] = v > 0.0 ? v : std::abs(v) + 1e-12;
  }

  auto shrink = [&](double x, double t) {
    switch (spec.rule) {
      case ShrinkageRule::Hard:
        return x;
      case ShrinkageRule::Soft:
        return x > 0.0 ? x - t : x + t;
      case ShrinkageRule::Scad: {
        const double a = spec.scad_a;
        double ax = std::abs(x);
        double s = x > 0.0 ? 1.0 : -1.0;
        if (ax <= 2.0 * t) return s * (ax - t);
        if (ax <= a * t) return ((a - 1.0) * x - s * a * t) / (a - 2.0);
        return x;
      }
      case ShrinkageRule::AdaptiveLasso: {
        double ax = std::abs(x);
        double s = x > 0.0 ? 1.0 : -1.0;
        double shrunk = ax - std::pow(t, spec.eta + 1.0) * std::pow(ax, -spec.eta);
        return shrunk > 0.0 ? s * shrunk : 0.0;
      }
    }
    throw InvalidInputError("adaptive_threshold: unknown rule");
  };

  Matrix out = sigma_u;
  for (Index i = 0; i < p; ++i) {
    for (Index j = i + 1; j < p; ++j) {
      double t_ij = tau * std::sqrt(d[i] * d[j]);
      double x = sigma_u(i, j);
      double y = std::abs(x) < t_ij ? 0.0 : shrink(x, t_ij);
      out(i, j) = y;
      out(j, i) = y;
    }
  }
  return out;
}

Matrix assemble(const JointBlocks& blocks, const Matrix& residual_t,
                double cond_cap) {
  check_square_symmetric(residual_t, "assemble");
  if (residual_t.rows() != blocks.p)
    throw InvalidInputError("assemble: residual dimension must equal p");
  Matrix m = lowrank_part(blocks, cond_cap) + residual_t;
  return ((m + m.transpose()) / 2.0).eval();
}

FactorCovariance estimate_factor_cov(const Matrix& Y, const Matrix& F,
                                     PilotKind kind, const ThresholdSpec& spec,
                                     const HuberConfig& config, bool center) {
  validate_panel(Y, "estimate_factor_cov");
  validate_panel(F, "estimate_factor_cov");
  if (Y.rows() != F.rows())
    throw InvalidInputError(
        "estimate_factor_cov: data and factor panels must share n");
  const Index p = Y.cols();
  const Index r = F.cols();
  if (r > p)
    throw InvalidInputError("estimate_factor_cov: more factors than assets");
  spec.validate();

  Matrix Z(Y.rows(), p + r);
  Z << Y, F;

  PilotResult pr = pilot(Z, kind, config, center);
  FactorCovariance out;
  out.blocks = split_blocks(pr.cov, p, r);
  const JointBlocks& blocks = out.blocks;
  out.pilot_kind = kind;
  out.warnings = std::move(pr.warnings);
  out.lowrank = lowrank_part(blocks);
  out.residual_raw = blocks.s11 - out.lowrank;
  out.residual_raw = ((out.residual_raw + out.residual_raw.transpose()) / 2.0).eval();
  out.tau_used = spec.c_tau * std::sqrt(std::log(static_cast<double>(p)) /
                                        static_cast<double>(Y.rows()));
  out.residual_thresholded = adaptive_threshold(out.residual_raw, spec, Y.rows());
  // With thresholding disabled the estimator degenerates to the pilot's data
  // block; taking it verbatim avoids a pointless subtract-then-add round trip.
  out.total = spec.c_tau == 0.0
                  ? blocks.s11
                  : (out.lowrank + out.residual_thresholded).eval();
  out.surviving_offdiag = 0;
  for (Index i = 0; i < p; ++i)
    for (Index j = i + 1; j < p; ++j)
      if (out.residual_thresholded(i, j) != 0.0) ++out.surviving_offdiag;
  return out;
}

Matrix precision_woodbury(const JointBlocks& blocks, const Matrix& residual_t,
                          double min_eig_floor) {
  check_blocks(blocks, "precision_woodbury");
  check_square_symmetric(residual_t, "precision_woodbury");
  if (residual_t.rows() != blocks.p)
    throw InvalidInputError("precision_woodbury: residual dimension must equal p");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(residual_t);
  if (eig.info() != Eigen::Success)
    throw NumericalError("precision_woodbury: eigensolver failed on residual");
  double min_eig = eig.eigenvalues().minCoeff();
  if (!(min_eig > min_eig_floor))
    throw NeedsPsdRepairError(
        "precision_woodbury: residual is not positive definite (min eigenvalue " +
        std::to_string(min_eig) + "); repair it first");

  Matrix rinv = eig.eigenvectors() *
                eig.eigenvalues().cwiseInverse().asDiagonal() *
                eig.eigenvectors().transpose();
  Matrix w = rinv * blocks.s12;                        // p x r
  Matrix inner = blocks.s22 + blocks.s12.transpose() * w;  // r x r
  Matrix x = factor_block_solve(inner, w.transpose(), 1e14,
                                "precision_woodbury");
  Matrix prec = rinv - w * x;
  return ((prec + prec.transpose()) / 2.0).eval();
}

double norm_max(const Matrix& A) {
  if (A.size() == 0) throw InvalidInputError("norm_max: empty matrix");
  if (!A.allFinite()) throw InvalidInputError("norm_max: non-finite entry");
  return A.cwiseAbs().maxCoeff();
}

double norm_op(const Matrix& A) {
  if (A.size() == 0) throw InvalidInputError("norm_op: empty matrix");
  if (!A.allFinite()) throw InvalidInputError("norm_op: non-finite entry");
  if (A.rows() == A.cols()) {
    double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if ((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
      if (eig.info() != Eigen::Success)
        throw NumericalError("norm_op: eigensolver failed");
      return eig.eigenvalues().cwiseAbs().maxCoeff();
    }
  }
  Eigen::JacobiSVD<Matrix> svd(A);
  return svd.singularValues()[0];
}

double norm_rel_frobenius(const Matrix& A, const Matrix& sigma) {
  if (A.rows() != A.cols() || A.rows() != sigma.rows())
    throw InvalidInputError("norm_rel_frobenius: dimension mismatch");
  check_square_symmetric(sigma, "norm_rel_frobenius");
  if (!A.allFinite())
    throw InvalidInputError("norm_rel_frobenius: non-finite entry");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
  if (eig.info() != Eigen::Success)
    throw NumericalError("norm_rel_frobenius: eigensolver failed");
  if (!(eig.eigenvalues().minCoeff() > 0.0))
    throw InvalidInputError("norm_rel_frobenius: sigma must be positive definite");
  Matrix isqrt = eig.eigenvectors() *
                 eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                 eig.eigenvectors().transpose();
  Matrix m = isqrt * A * isqrt;
  return m.norm() / std::sqrt(static_cast<double>(A.rows()));
}

}  // namespace robustcov
