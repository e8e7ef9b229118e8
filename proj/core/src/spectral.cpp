#include "swstab/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "swstab/errors.hpp"

namespace swstab {

double spectral_norm(const Eigen::MatrixXcd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  return svd.singularValues()(0);
}

double spectral_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

namespace {

// Degree-13 Pade approximant with scaling and squaring. Coefficients are the
// standard numerator series of e^x at degree 13.
Eigen::MatrixXd expm(const Eigen::MatrixXd& A) {
  static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                             1187353796428800.0,  129060195264000.0,   10559470521600.0,
                             670442572800.0,      33522128640.0,       1323241920.0,
                             40840800.0,          960960.0,            16380.0,
                             182.0,               1.0};
  const double theta13 = 5.371920351148152;
  const Eigen::Index n = A.rows();
  const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
  }
  const Eigen::MatrixXd As = A / std::ldexp(1.0, squarings);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd A2 = As * As;
  const Eigen::MatrixXd A4 = A2 * A2;
  const Eigen::MatrixXd A6 = A2 * A4;
  const Eigen::MatrixXd U =
      As * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 +
            b[1] * I);
  const Eigen::MatrixXd V =
      A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
  Eigen::MatrixXd R = (V - U).partialPivLu().solve(V + U);
  for (int i = 0; i < squarings; ++i) R = R * R;
  return R;
}

}  // namespace

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& A, double t) {
  if (A.rows() != A.cols()) {
    throw_input("NonSquareInput", "matrix exponential needs a square matrix");
  }
  if (t < 0.0) {
    throw_input("NegativeTime", "matrix exponential requires t >= 0");
  }
  if (t == 0.0) return Eigen::MatrixXd::Identity(A.rows(), A.cols());
  return expm(A * t);
}

SubsystemSpectrum eigendecompose(const Eigen::MatrixXd& A, const SpectralTolerances& tol) {
  if (A.rows() != A.cols() || A.rows() == 0) {
    throw_input("NonSquareInput", "eigendecomposition needs a nonempty square matrix");
  }
  SubsystemSpectrum s;
  s.A = A;

  Eigen::EigenSolver<Eigen::MatrixXd> solver(A);
  if (solver.info() != Eigen::Success) {
    throw_numerical("EigenSolverFailure", "eigendecomposition did not converge");
  }
  Eigen::VectorXcd D = solver.eigenvalues();
  Eigen::MatrixXcd P = solver.eigenvectors();

  // Deterministic eigenvalue order: real part descending, then imaginary.
  const Eigen::Index n = A.rows();
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (D(a).real() != D(b).real()) return D(a).real() > D(b).real();
    return D(a).imag() > D(b).imag();
  });
  Eigen::VectorXcd Ds(n);
  Eigen::MatrixXcd Ps(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Ds(i) = D(order[static_cast<size_t>(i)]);
    Ps.col(i) = P.col(order[static_cast<size_t>(i)]).normalized();
  }
  s.D = Ds;
  s.P = Ps;

  const double axis_threshold = tol.imag_axis_rel * spectral_norm(A);
  double max_re = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double re = s.D(i).real();
    // <= catches the zero matrix, whose threshold is exactly zero.
    if (std::abs(re) <= axis_threshold) {
      std::ostringstream msg;
      msg << "eigenvalue " << s.D(i).real() << (s.D(i).imag() < 0 ? "-" : "+")
          << std::abs(s.D(i).imag()) << "i lies on the imaginary axis within tolerance";
      throw_numerical("ImaginaryAxisEigenvalue", msg.str());
    }
    max_re = std::max(max_re, re);
  }
  s.max_real_part = max_re;

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(s.P);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(n - 1);
  s.condition_number = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();

  if (s.condition_number > tol.defect_cond_threshold) {
    s.classification = StabilityClass::Defective;
    s.lambda_star = max_re + tol.defective_margin;
    // Numerical search for beta with ||e^{At}|| <= beta e^{lambda_star t} on
    // a geometric grid; the grid bounds follow the pinned recipe.
    const int grid = 200;
    const double t_lo = 1e-3, t_hi = 50.0;
    double beta = 1.0;
    for (int i = 0; i < grid; ++i) {
      const double t = t_lo * std::pow(t_hi / t_lo, static_cast<double>(i) / (grid - 1));
      beta = std::max(beta, spectral_norm(matrix_exponential(A, t)) * std::exp(-s.lambda_star * t));
    }
    s.beta = beta;
  } else if (max_re < 0.0) {
    s.classification = StabilityClass::Stable;
    s.decay_rate = -max_re;
  } else {
    s.classification = StabilityClass::Unstable;
    s.growth_rate = max_re;
  }
  return s;
}

Ensemble::Ensemble(std::vector<SubsystemSpectrum> subsystems)
    : subsystems_(std::move(subsystems)) {
  if (subsystems_.empty()) {
    throw_input("EmptyEnsemble", "ensemble needs at least one subsystem");
  }
  const int n = subsystems_.front().dimension();
  for (const auto& s : subsystems_) {
    if (s.dimension() != n) {
      throw_input("DimensionMismatch", "all subsystems must share one state dimension");
    }
  }
}

Ensemble Ensemble::from_matrices(const std::vector<Eigen::MatrixXd>& matrices,
                                 const SpectralTolerances& tol) {
  std::vector<SubsystemSpectrum> subsystems;
  subsystems.reserve(matrices.size());
  for (const auto& A : matrices) subsystems.push_back(eigendecompose(A, tol));
  return Ensemble(std::move(subsystems));
}

int Ensemble::dimension() const { return subsystems_.front().dimension(); }

const SubsystemSpectrum& Ensemble::at(int i) const {
  if (i < 1 || i > size()) {
    throw_input("InvalidIndex", "subsystem index " + std::to_string(i) + " out of range");
  }
  return subsystems_[static_cast<size_t>(i - 1)];
}

SubsystemSpectrum& Ensemble::at(int i) {
  if (i < 1 || i > size()) {
    throw_input("InvalidIndex", "subsystem index " + std::to_string(i) + " out of range");
  }
  return subsystems_[static_cast<size_t>(i - 1)];
}

std::vector<int> Ensemble::stable_indices() const {
  std::vector<int> out;
  for (int i = 1; i <= size(); ++i) {
    if (at(i).classification == StabilityClass::Stable) out.push_back(i);
  }
  return out;
}

std::vector<int> Ensemble::unstable_indices() const {
  std::vector<int> out;
  for (int i = 1; i <= size(); ++i) {
    if (at(i).classification == StabilityClass::Unstable) out.push_back(i);
  }
  return out;
}

std::vector<int> Ensemble::defective_indices() const {
  std::vector<int> out;
  for (int i = 1; i <= size(); ++i) {
    if (at(i).classification == StabilityClass::Defective) out.push_back(i);
  }
  return out;
}

bool Ensemble::all_stable() const {
  return static_cast<int>(stable_indices().size()) == size();
}

std::optional<Partition> Ensemble::derived_partition() const {
  int r = 0;
  while (r < size() && at(r + 1).classification == StabilityClass::Stable) ++r;
  if (r < 1 || r >= size()) return std::nullopt;
  for (int i = r + 1; i <= size(); ++i) {
    if (at(i).classification != StabilityClass::Unstable) return std::nullopt;
  }
  return Partition{r};
}

namespace {

void require_usable(const Ensemble& ens, int vertex) {
  if (!ens.at(vertex).has_usable_eigenvectors()) {
    throw_numerical("DefectiveEndpoint",
                    "subsystem " + std::to_string(vertex) +
                        " is defective and has no replacement eigenvector basis");
  }
}

}  // namespace

double transition_cost_factor(const Ensemble& ens, int from, int to) {
  require_usable(ens, from);
  require_usable(ens, to);
  if (from == to) return 1.0;
  const Eigen::MatrixXcd& Pr = ens.at(from).effective_eigenvectors();
  const Eigen::MatrixXcd& Ps = ens.at(to).effective_eigenvectors();
  return spectral_norm(Eigen::MatrixXcd(Ps.partialPivLu().solve(Pr)));
}

double transition_cost(const Ensemble& ens, int from, int to) {
  if (from == to) {
    require_usable(ens, from);
    return 0.0;
  }
  return std::log(transition_cost_factor(ens, from, to));
}

double rho_graph(const Ensemble& ens, const Digraph& g) {
  if (g.vertex_count() != ens.size()) {
    throw_input("DimensionMismatch", "graph vertex count must equal ensemble size");
  }
  for (int i = 1; i <= ens.size(); ++i) require_usable(ens, i);
  std::vector<double> norm(static_cast<size_t>(ens.size()) + 1);
  std::vector<double> inv_norm(static_cast<size_t>(ens.size()) + 1);
  for (int i = 1; i <= ens.size(); ++i) {
    const Eigen::MatrixXcd& P = ens.at(i).effective_eigenvectors();
    norm[static_cast<size_t>(i)] = spectral_norm(P);
    inv_norm[static_cast<size_t>(i)] = spectral_norm(Eigen::MatrixXcd(P.partialPivLu().inverse()));
  }
  double rho = 1.0;
  bool any_pair = false;
  for (int i = 1; i <= ens.size(); ++i) {
    for (int j = 1; j <= ens.size(); ++j) {
      if (!has_path(g, i, j)) continue;
      const double value = inv_norm[static_cast<size_t>(j)] * norm[static_cast<size_t>(i)];
      rho = any_pair ? std::max(rho, value) : value;
      any_pair = true;
    }
  }
  // Edgeless graphs admit no switches; the envelope constant degenerates to 1.
  return any_pair ? rho : 1.0;
}

CommutingCheck check_pairwise_commuting(const Ensemble& ens, const SpectralTolerances& tol) {
  CommutingCheck result;
  const int k = ens.size();
  std::vector<double> norms(static_cast<size_t>(k) + 1);
  for (int i = 1; i <= k; ++i) norms[static_cast<size_t>(i)] = spectral_norm(ens.at(i).A);
  for (int i = 1; i <= k; ++i) {
    for (int j = i + 1; j <= k; ++j) {
      const Eigen::MatrixXd commutator = ens.at(i).A * ens.at(j).A - ens.at(j).A * ens.at(i).A;
      const double bound =
          tol.commuting_tol * (1.0 + norms[static_cast<size_t>(i)] * norms[static_cast<size_t>(j)]);
      if (spectral_norm(commutator) > bound) return result;
    }
  }
  result.commuting = true;

  for (int i = 1; i <= k; ++i) {
    if (!ens.at(i).diagonalizable()) return result;
  }

  // A generic linear combination of a commuting diagonalizable family has the
  // family's common eigenbasis; retry coefficients until verification passes.
  const int n = ens.dimension();
  std::mt19937_64 rng(0x5u);
  std::uniform_real_distribution<double> coeff(0.25, 1.0);
  for (int attempt = 0; attempt < 16; ++attempt) {
    Eigen::MatrixXd combo = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i <= k; ++i) {
      combo += coeff(rng) / std::max(norms[static_cast<size_t>(i)], 1e-12) * ens.at(i).A;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(combo);
    if (solver.info() != Eigen::Success) continue;
    Eigen::MatrixXcd P = solver.eigenvectors();
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(P);
    bool ok = true;
    for (int i = 1; i <= k && ok; ++i) {
      const Eigen::MatrixXcd X = lu.solve(ens.at(i).A.cast<std::complex<double>>() * P);
      const double scale = 1.0 + norms[static_cast<size_t>(i)];
      for (int a = 0; a < n && ok; ++a) {
        for (int b = 0; b < n; ++b) {
          if (a != b && std::abs(X(a, b)) > 1e-8 * scale) {
            ok = false;
            break;
          }
        }
      }
    }
    if (ok) {
      result.common_basis = std::move(P);
      break;
    }
  }
  return result;
}

}  // namespace swstab
