#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robustcov/pilot_cov.hpp"
#include "robustcov/types.hpp"

namespace robustcov {

/// Blocks of the joint second-moment matrix of z = (y, f): s11 is the p x p
/// data block, s12 the p x r cross block, s22 the r x r factor block.
struct JointBlocks {
  Matrix s11;
  Matrix s12;
  Matrix s22;
  Index p = 0;
  Index r = 0;
};

enum class ShrinkageRule { Hard, Soft, Scad, AdaptiveLasso };

const char* to_string(ShrinkageRule rule);
ShrinkageRule shrinkage_rule_from_string(std::string_view name);

struct ThresholdSpec {
  ShrinkageRule rule = ShrinkageRule::Soft;
  /// Base threshold multiplier: tau = c_tau * sqrt(log(p)/n). Zero disables
  /// thresholding entirely.
  double c_tau = 2.0;
  /// SCAD knee parameter, must exceed 2.
  double scad_a = 3.7;
  /// Adaptive-lasso exponent.
  double eta = 1.0;

  void validate() const;
};

/// Output bundle of the three-step estimator.
struct FactorCovariance {
  /// Pilot blocks the estimate was built from (kept for precision
  /// computations and diagnostics).
  JointBlocks blocks;
  Matrix lowrank;                // estimate of the common factor part
  Matrix residual_raw;           // residual covariance before thresholding
  Matrix residual_thresholded;   // residual covariance after thresholding
  Matrix total;                  // lowrank + residual_thresholded
  double tau_used = 0.0;
  PilotKind pilot_kind = PilotKind::Robust;
  /// Strictly-upper-triangle entries of residual_thresholded that are
  /// nonzero (each unordered pair counted once).
  std::int64_t surviving_offdiag = 0;
  std::vector<std::string> warnings;
};

/// Partitions a (p+r) x (p+r) symmetric matrix into blocks, losslessly.
JointBlocks split_blocks(const Matrix& sigma_z, Index p, Index r);

/// s12 * s22^{-1} * s12' via a symmetric eigendecomposition solve of the
/// r x r block (never an explicit inverse). Throws
/// SingularFactorCovarianceError when cond(s22) exceeds cond_cap.
Matrix lowrank_part(const JointBlocks& blocks, double cond_cap = 1e12);

/// s11 - lowrank_part(blocks).
Matrix residual_cov(const JointBlocks& blocks, double cond_cap = 1e12);

/// Entry-adaptive thresholding. The diagonal passes through verbatim; an
/// off-diagonal entry x at (i,j) becomes 0 when |x| < tau_ij and s(x)
/// otherwise, with tau_ij = tau * sqrt(d_i * d_j), tau = c_tau *
/// sqrt(log(p)/n), and d_i the i-th diagonal entry (floored at
/// |value| + 1e-12 when nonpositive). Rules: Hard keeps x; Soft maps to
/// sign(x)(|x| - tau_ij); SCAD applies the usual three-piece curve with knee
/// parameter a; AdaptiveLasso maps to sign(x)(|x| - tau_ij^{eta+1}|x|^{-eta}).
Matrix adaptive_threshold(const Matrix& sigma_u, const ThresholdSpec& spec,
                          std::int64_t n);

/// lowrank_part(blocks) + residual_t.
Matrix assemble(const JointBlocks& blocks, const Matrix& residual_t,
                double cond_cap = 1e12);

/// Full three-step estimate from an n x p data panel and an n x r factor
/// panel: joint pilot on Z = [Y F], block split, residual, adaptive
/// threshold, assembly.
FactorCovariance estimate_factor_cov(const Matrix& Y, const Matrix& F,
                                     PilotKind kind, const ThresholdSpec& spec,
                                     const HuberConfig& config = {},
                                     bool center = false);

/// Precision matrix of assemble(blocks, residual_t) by the Woodbury identity:
/// R^{-1} - R^{-1} s12 (s22 + s12' R^{-1} s12)^{-1} s12' R^{-1} with
/// R = residual_t. Requires R positive definite (min eigenvalue above
/// min_eig_floor); otherwise throws NeedsPsdRepairError so the caller can
/// route through the PSD repair step first.
Matrix precision_woodbury(const JointBlocks& blocks, const Matrix& residual_t,
                          double min_eig_floor = 1e-10);

/// Largest absolute entry.
double norm_max(const Matrix& A);

/// Largest singular value (computed as a symmetric eigenvalue problem when
/// the input is symmetric).
double norm_op(const Matrix& A);

/// p^{-1/2} * Frobenius norm of sigma^{-1/2} A sigma^{-1/2}; sigma must be
/// symmetric positive definite.
double norm_rel_frobenius(const Matrix& A, const Matrix& sigma);

}  // namespace robustcov
