#include "mixhmm/markov.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mixhmm {

void validate_transition_matrix(const Matrix& A) {
  if (A.rows() != A.cols() || A.rows() < 1)
    throw InputError("transition matrix must be square and nonempty");
  for (Index h = 0; h < A.rows(); ++h) {
    double row_sum = 0.0;
    for (Index l = 0; l < A.cols(); ++l) {
      const double v = A(h, l);
      if (!(v >= 0.0 && v <= 1.0) || !std::isfinite(v)) {
        std::ostringstream msg;
        msg << "transition matrix entry (" << h << "," << l
            << ") outside [0,1]: " << v;
        throw InputError(msg.str());
      }
      row_sum += v;
    }
    if (std::abs(row_sum - 1.0) > 1e-12) {
      std::ostringstream msg;
      msg << "transition matrix row " << h << " sums to " << row_sum;
      throw InputError(msg.str());
    }
  }
}

namespace {

// Reachable set over the support graph (entry > 0 means an edge), optionally
// on the transposed graph.
std::vector<bool> reachable_from(const Matrix& A, int start, bool transpose) {
  const int m = static_cast<int>(A.rows());
  std::vector<bool> seen(m, false);
  std::vector<int> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const int h = stack.back();
    stack.pop_back();
    for (int l = 0; l < m; ++l) {
      const double w = transpose ? A(l, h) : A(h, l);
      if (w > 0.0 && !seen[l]) {
        seen[l] = true;
        stack.push_back(l);
      }
    }
  }
  return seen;
}

}  // namespace

std::vector<int> unreachable_states(const Matrix& A) {
  const auto forward = reachable_from(A, 0, false);
  const auto backward = reachable_from(A, 0, true);
  std::vector<int> out;
  for (int h = 0; h < static_cast<int>(A.rows()); ++h)
    if (!(forward[h] && backward[h])) out.push_back(h);
  return out;
}

bool is_irreducible(const Matrix& A) { return unreachable_states(A).empty(); }

Vector stationary_distribution(const Matrix& A) {
  validate_transition_matrix(A);
  const auto bad = unreachable_states(A);
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "chain is reducible; states off the support component:";
    for (int h : bad) msg << ' ' << h;
    throw InputError(msg.str());
  }
  const Index m = A.rows();
  if (m == 1) return Vector::Ones(1);

  Matrix system(m + 1, m);
  system.topRows(m) = A.transpose() - Matrix::Identity(m, m);
  system.row(m).setOnes();
  Vector rhs = Vector::Zero(m + 1);
  rhs[m] = 1.0;
  Vector pi = system.colPivHouseholderQr().solve(rhs);

  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  const double residual = ((pi.transpose() * A).transpose() - pi)
                              .cwiseAbs()
                              .maxCoeff();
  if (residual > 1e-10) {
    std::ostringstream msg;
    msg << "stationary distribution residual " << residual << " exceeds 1e-10";
    throw EstimationError(msg.str());
  }
  return pi;
}

SecondEigenvalue second_eigenvalue(const Matrix& A) {
  validate_transition_matrix(A);
  const Index m = A.rows();
  if (m == 1) return {};
  if (m == 2) {
    // Eigenvalues are 1 and trace - 1.
    const double lambda = A(0, 0) + A(1, 1) - 1.0;
    return {std::abs(lambda), lambda, std::max(0.0, lambda)};
  }
  Eigen::EigenSolver<Matrix> solver(A, /*computeEigenvectors=*/false);
  const auto values = solver.eigenvalues();
  // Drop one copy of the Perron root (the eigenvalue closest to 1).
  Index perron = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < values.size(); ++i) {
    const double dist = std::abs(values[i] - std::complex<double>(1.0, 0.0));
    if (dist < best) {
      best = dist;
      perron = i;
    }
  }
  SecondEigenvalue out;
  out.signed_value = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < values.size(); ++i) {
    if (i == perron) continue;
    out.modulus = std::max(out.modulus, std::abs(values[i]));
    out.signed_value = std::max(out.signed_value, values[i].real());
  }
  out.positive_part = std::max(0.0, out.signed_value);
  return out;
}

double mixing_time_bound(const Matrix& A, double eta) {
  if (!(eta > 0.0)) throw InputError("mixing_time_bound: eta must be positive");
  const double nu_star = second_eigenvalue(A).modulus;
  if (nu_star >= 1.0)
    throw InputError(
        "mixing_time_bound: second eigenvalue modulus >= 1 (periodic or "
        "reducible chain)");
  const Vector pi = stationary_distribution(A);
  const double bound =
      std::log(1.0 / (eta * pi.minCoeff())) / (1.0 - nu_star);
  return std::max(0.0, bound);
}

double tv_distance_to_stationary(const Matrix& A, long power) {
  if (power < 0) throw InputError("tv_distance_to_stationary: negative power");
  const Vector pi = stationary_distribution(A);
  Matrix result = Matrix::Identity(A.rows(), A.cols());
  Matrix base = A;
  long p = power;
  while (p > 0) {
    if (p & 1) result = result * base;
    base = base * base;
    p >>= 1;
  }
  double worst = 0.0;
  for (Index h = 0; h < A.rows(); ++h)
    worst = std::max(worst,
                     0.5 * (result.row(h).transpose() - pi).cwiseAbs().sum());
  return worst;
}

std::vector<int> sample_chain(const Vector& pi, const Matrix& A, int T,
                              Rng& rng) {
  if (T < 0) throw InputError("sample_chain: T must be nonnegative");
  std::vector<int> path(static_cast<std::size_t>(T) + 1);
  path[0] = rng.categorical(pi);
  for (int t = 1; t <= T; ++t)
    path[t] = rng.categorical(A.row(path[t - 1]).transpose());
  return path;
}

}  // namespace mixhmm
