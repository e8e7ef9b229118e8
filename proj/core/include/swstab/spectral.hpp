#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <vector>

#include "swstab/digraph.hpp"

namespace swstab {

/// Sign pattern of the eigenvalue real parts. Stable means all negative,
/// Unstable means at least one positive and none on the imaginary axis.
/// Defective marks matrices whose numerical eigenvector basis is too ill
/// conditioned to trust; such subsystems carry the (lambda_star, beta) pair
/// bounding ||e^{At}|| <= beta * e^{lambda_star t} instead of eigenbasis data.
enum class StabilityClass {
  Stable,
  Unstable,
  Defective,
};

struct SpectralTolerances {
  /// Eigenvalues with |Re| below this times the matrix norm are rejected.
  double imag_axis_rel = 1e-9;
  /// Eigenvector condition number above this marks the matrix defective.
  double defect_cond_threshold = 1e8;
  /// lambda_star = max Re eigenvalue + this margin in the defective branch.
  double defective_margin = 1e-2;
  /// Relative commutator norm threshold for the pairwise commuting test.
  double commuting_tol = 1e-9;
};

/// Spectral data of one subsystem matrix. P has unit-norm columns; D holds
/// the eigenvalues in matching order. decay_rate is set for Stable spectra
/// (= -max Re), growth_rate for Unstable ones (= max Re). The defective
/// branch fills lambda_star and beta instead, and eigenvector-based
/// quantities require an explicit override basis.
struct SubsystemSpectrum {
  Eigen::MatrixXd A;
  StabilityClass classification = StabilityClass::Stable;

  Eigen::MatrixXcd P;
  Eigen::VectorXcd D;
  double condition_number = 0.0;

  double max_real_part = 0.0;
  double decay_rate = 0.0;
  double growth_rate = 0.0;

  double lambda_star = 0.0;
  double beta = 0.0;

  /// User-supplied replacement basis, used in place of P for transition
  /// costs when the computed basis is unusable (defective subsystems).
  std::optional<Eigen::MatrixXcd> override_P;

  [[nodiscard]] int dimension() const { return static_cast<int>(A.rows()); }
  [[nodiscard]] bool diagonalizable() const { return classification != StabilityClass::Defective; }
  [[nodiscard]] bool has_usable_eigenvectors() const {
    return diagonalizable() || override_P.has_value();
  }
  /// Basis used by transition costs: the override when present, else P.
  [[nodiscard]] const Eigen::MatrixXcd& effective_eigenvectors() const {
    return override_P ? *override_P : P;
  }
};

/// Eigendecomposition with unit-norm eigenvector columns and stability
/// classification. Throws Error("ImaginaryAxisEigenvalue") when any
/// eigenvalue lies on or numerically at the imaginary axis, and
/// Error("NonSquareInput") for non-square input. A condition number of the
/// eigenvector matrix above tol.defect_cond_threshold selects the defective
/// branch, where lambda_star = max Re + tol.defective_margin and beta is the
/// maximum of ||e^{At}|| e^{-lambda_star t} over a geometric grid
/// t in [1e-3, 50].
[[nodiscard]] SubsystemSpectrum eigendecompose(const Eigen::MatrixXd& A,
                                               const SpectralTolerances& tol = {});

/// Largest singular value.
[[nodiscard]] double spectral_norm(const Eigen::MatrixXcd& M);
[[nodiscard]] double spectral_norm(const Eigen::MatrixXd& M);

/// e^{At} by scaling and squaring with a degree-13 Pade approximant.
/// Requires t >= 0.
[[nodiscard]] Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& A, double t);

/// The subsystems of one switched system, indexed 1..size() to match graph
/// vertex ids. All matrices must share one dimension.
class Ensemble {
 public:
  Ensemble() = default;
  explicit Ensemble(std::vector<SubsystemSpectrum> subsystems);

  /// Decompose each matrix in turn. Index i in the list becomes vertex i+1.
  [[nodiscard]] static Ensemble from_matrices(const std::vector<Eigen::MatrixXd>& matrices,
                                              const SpectralTolerances& tol = {});

  [[nodiscard]] int size() const { return static_cast<int>(subsystems_.size()); }
  [[nodiscard]] int dimension() const;
  [[nodiscard]] const SubsystemSpectrum& at(int i) const;  // 1-based
  [[nodiscard]] SubsystemSpectrum& at(int i);
  [[nodiscard]] const std::vector<SubsystemSpectrum>& subsystems() const { return subsystems_; }

  [[nodiscard]] std::vector<int> stable_indices() const;
  [[nodiscard]] std::vector<int> unstable_indices() const;
  [[nodiscard]] std::vector<int> defective_indices() const;
  [[nodiscard]] bool all_stable() const;

  /// Partition {1..r stable, r+1..k unstable} when the classification is
  /// exactly that prefix shape with no defective subsystems. Certificates
  /// that need a partition require the caller to order modes this way.
  [[nodiscard]] std::optional<Partition> derived_partition() const;

 private:
  std::vector<SubsystemSpectrum> subsystems_;
};

/// Norm factor ||P_to^{-1} P_from|| picked up by a switch along edge
/// (from, to), and its logarithm. Self loops cost exactly 0. Throws
/// Error("DefectiveEndpoint") when either endpoint lacks a usable basis.
[[nodiscard]] double transition_cost_factor(const Ensemble& ens, int from, int to);
[[nodiscard]] double transition_cost(const Ensemble& ens, int from, int to);

/// max ||P_j^{-1}|| * ||P_i|| over ordered pairs (i, j) joined by a directed
/// path of length >= 1; the constant relating switch-time envelopes to
/// actual trajectory norms. Throws Error("DefectiveEndpoint") when a
/// subsystem lacks a usable basis.
[[nodiscard]] double rho_graph(const Ensemble& ens, const Digraph& g);

struct CommutingCheck {
  bool commuting = false;
  /// Invertible matrix diagonalizing every subsystem at once; only set when
  /// commuting holds and all subsystems are diagonalizable. Columns are not
  /// normalized.
  std::optional<Eigen::MatrixXcd> common_basis;
};

/// Pairwise commutator test ||A_i A_j - A_j A_i|| <= tol * (1 + ||A_i|| ||A_j||).
/// When it passes and every subsystem is diagonalizable, a simultaneous
/// eigenbasis is computed from a seeded random linear combination and
/// verified against every subsystem.
[[nodiscard]] CommutingCheck check_pairwise_commuting(const Ensemble& ens,
                                                      const SpectralTolerances& tol = {});

}  // namespace swstab
