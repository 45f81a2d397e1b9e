#include "surge/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace surge {

namespace {

// Pade(6,6) coefficients c_k = (2q-k)! q! / ((2q)! k! (q-k)!).
constexpr double kPade6[] = {1.0,
                             1.0 / 2.0,
                             5.0 / 44.0,
                             1.0 / 66.0,
                             1.0 / 792.0,
                             1.0 / 15840.0,
                             1.0 / 665280.0};

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw NumericsError(std::string(what) + ": non-finite entry");
  }
}

}  // namespace

Matrix matrix_exponential(const Matrix& m, double t) {
  if (m.rows() != m.cols()) {
    throw NumericsError("matrix_exponential: matrix is not square");
  }
  require_finite(m, "matrix_exponential");
  const Eigen::Index n = m.rows();
  Matrix a = m * t;

  // ||A / 2^s||_1 <= 0.5 keeps the (6,6) approximant at double precision.
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    a /= std::ldexp(1.0, squarings);
  }

  const Matrix identity = Matrix::Identity(n, n);
  Matrix numerator = identity * kPade6[0];
  Matrix denominator = identity * kPade6[0];
  Matrix power = identity;
  for (int k = 1; k <= 6; ++k) {
    power = power * a;
    const double c = kPade6[k];
    numerator += c * power;
    denominator += ((k % 2 == 0) ? c : -c) * power;
  }
  Matrix result = denominator.partialPivLu().solve(numerator);
  for (int i = 0; i < squarings; ++i) {
    result = result * result;
  }
  return result;
}

DiscretePair discretize_zoh(const Matrix& a, const Matrix& b, double dt) {
  if (a.rows() != a.cols()) {
    throw NumericsError("discretize_zoh: A is not square");
  }
  if (b.rows() != a.rows()) {
    throw NumericsError("discretize_zoh: B row count does not match A");
  }
  if (!(dt > 0.0)) {
    throw NumericsError("discretize_zoh: dt must be positive");
  }
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  Matrix block = Matrix::Zero(n + m, n + m);
  block.topLeftCorner(n, n) = a;
  block.topRightCorner(n, m) = b;
  const Matrix e = matrix_exponential(block, dt);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

Matrix pseudoinverse(const Matrix& m) {
  if (m.size() == 0) {
    return Matrix(m.cols(), m.rows());
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  const double cutoff = 1e-12 * (sigma.size() > 0 ? sigma(0) : 0.0);
  Vector inverted = Vector::Zero(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > cutoff && sigma(i) > 0.0) {
      inverted(i) = 1.0 / sigma(i);
    }
  }
  return svd.matrixV() * inverted.asDiagonal() * svd.matrixU().transpose();
}

Vector rk4_step(const VectorField& f, const Vector& x, double dt) {
  auto eval = [&f](const Vector& at) {
    Vector d = f(at);
    if (!d.allFinite()) {
      throw NumericsError("rk4_step: non-finite derivative");
    }
    return d;
  };
  const Vector k1 = eval(x);
  const Vector k2 = eval(x + 0.5 * dt * k1);
  const Vector k3 = eval(x + 0.5 * dt * k2);
  const Vector k4 = eval(x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Matrix kalman_gain(const Matrix& phi, const Matrix& c, const Matrix& qw,
                   const Matrix& rn, const Matrix& noise_input,
                   int max_iterations) {
  const Eigen::Index n = phi.rows();
  if (phi.cols() != n || c.cols() != n || noise_input.rows() != n ||
      noise_input.cols() != qw.rows() || rn.rows() != c.rows()) {
    throw NumericsError("kalman_gain: dimension mismatch");
  }
  const Matrix process = noise_input * qw * noise_input.transpose();
  const double scale = std::max(
      {process.cwiseAbs().maxCoeff(), rn.cwiseAbs().maxCoeff(), 1e-300});

  Matrix predicted = process;
  Matrix gain = Matrix::Zero(n, c.rows());
  for (int iteration = 1; iteration <= max_iterations; ++iteration) {
    const Matrix innovation = c * predicted * c.transpose() + rn;
    gain = innovation.transpose()
               .ldlt()
               .solve(c * predicted.transpose())
               .transpose();
    const Matrix updated = (Matrix::Identity(n, n) - gain * c) * predicted;
    Matrix next = phi * updated * phi.transpose() + process;
    next = 0.5 * (next + next.transpose());
    const double change = (next - predicted).cwiseAbs().maxCoeff();
    const double size = std::max(next.cwiseAbs().maxCoeff(), scale);
    predicted = std::move(next);
    if (change <= 1e-12 * size) {
      const Matrix innovation_final = c * predicted * c.transpose() + rn;
      return innovation_final.transpose()
          .ldlt()
          .solve(c * predicted.transpose())
          .transpose();
    }
  }
  throw NumericsError("kalman_gain: Riccati recursion did not converge after " +
                      std::to_string(max_iterations) + " iterations");
}

Matrix kalman_gain(const Matrix& phi, const Matrix& c, const Matrix& qw,
                   const Matrix& rn) {
  return kalman_gain(phi, c, qw, rn, Matrix::Identity(phi.rows(), phi.rows()));
}

std::vector<double> symmetric_eigenvalues(const Matrix& s) {
  const Eigen::Index n = s.rows();
  if (s.cols() != n) {
    throw NumericsError("symmetric_eigenvalues: matrix is not square");
  }
  Matrix a = 0.5 * (s + s.transpose());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        off += a(p, q) * a(p, q);
      }
    }
    const double diag = a.diagonal().squaredNorm();
    if (off <= 1e-32 * diag || off == 0.0) {
      break;
    }
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) {
          continue;
        }
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cs = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * cs;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = cs * akp - sn * akq;
          a(k, q) = sn * akp + cs * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = cs * apk - sn * aqk;
          a(q, k) = sn * apk + cs * aqk;
        }
      }
    }
  }
  std::vector<double> values(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) values[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(values.begin(), values.end());
  return values;
}

std::vector<double> singular_values(const ComplexMatrix& m) {
  if (m.size() == 0) {
    return {};
  }
  const ComplexMatrix gram = m.rows() >= m.cols()
                                 ? ComplexMatrix(m.adjoint() * m)
                                 : ComplexMatrix(m * m.adjoint());
  const Eigen::Index n = gram.rows();
  // Hermitian X + iY has the spectrum of [[X, -Y], [Y, X]], each value twice.
  Matrix embedding(2 * n, 2 * n);
  embedding.topLeftCorner(n, n) = gram.real();
  embedding.bottomRightCorner(n, n) = gram.real();
  embedding.topRightCorner(n, n) = -gram.imag();
  embedding.bottomLeftCorner(n, n) = gram.imag();
  const std::vector<double> doubled = symmetric_eigenvalues(embedding);
  std::vector<double> sigma;
  sigma.reserve(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < doubled.size(); i += 2) {
    const double pair = 0.5 * (doubled[i] + doubled[i + 1]);
    sigma.push_back(std::sqrt(std::max(pair, 0.0)));
  }
  std::sort(sigma.begin(), sigma.end(), std::greater<>());
  return sigma;
}

double spectral_radius(const Matrix& m) {
  Eigen::EigenSolver<Matrix> solver(m, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace surge
