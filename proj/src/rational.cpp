#include "surge/rational.hpp"

#include <algorithm>
#include <cmath>

namespace surge {

namespace {

constexpr double kTrimTolerance = 1e-12;
constexpr double kRootMatchTolerance = 1e-6;

// A multiple root comes back from the eigen-solver as a cluster spread by
// about sqrt(eps); the cluster mean is accurate to working precision.
std::vector<std::complex<double>> merge_clusters(std::vector<std::complex<double>> roots) {
  std::vector<bool> done(roots.size(), false);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (done[i]) continue;
    std::vector<std::size_t> members{i};
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      if (!done[j] && std::abs(roots[j] - roots[i]) <=
                          kRootMatchTolerance * std::max(1.0, std::abs(roots[i]))) {
        members.push_back(j);
      }
    }
    std::complex<double> mean = 0.0;
    for (std::size_t m : members) mean += roots[m];
    mean /= static_cast<double>(members.size());
    for (std::size_t m : members) {
      roots[m] = mean;
      done[m] = true;
    }
  }
  return roots;
}

}  // namespace

Polynomial::Polynomial(std::initializer_list<double> coefficients)
    : coefficients_(coefficients) {
  trim();
}

Polynomial::Polynomial(std::vector<double> coefficients)
    : coefficients_(std::move(coefficients)) {
  trim();
}

void Polynomial::trim() {
  double largest = 0.0;
  for (double c : coefficients_) largest = std::max(largest, std::abs(c));
  while (!coefficients_.empty() &&
         std::abs(coefficients_.back()) <= kTrimTolerance * largest) {
    coefficients_.pop_back();
  }
}

Polynomial Polynomial::from_roots(const std::vector<std::complex<double>>& roots,
                                  double leading) {
  std::vector<std::complex<double>> acc{1.0};
  for (const auto& r : roots) {
    std::vector<std::complex<double>> next(acc.size() + 1, 0.0);
    for (std::size_t i = 0; i < acc.size(); ++i) {
      next[i + 1] += acc[i];
      next[i] -= r * acc[i];
    }
    acc = std::move(next);
  }
  std::vector<double> real(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) real[i] = leading * acc[i].real();
  return Polynomial(std::move(real));
}

int Polynomial::degree() const {
  return static_cast<int>(coefficients_.size()) - 1;
}

double Polynomial::leading() const {
  return coefficients_.empty() ? 0.0 : coefficients_.back();
}

double Polynomial::coefficient(int power) const {
  if (power < 0 || power > degree()) return 0.0;
  return coefficients_[static_cast<std::size_t>(power)];
}

std::complex<double> Polynomial::evaluate(std::complex<double> s) const {
  std::complex<double> value = 0.0;
  for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) {
    value = value * s + *it;
  }
  return value;
}

std::vector<std::complex<double>> Polynomial::roots() const {
  const int n = degree();
  if (n <= 0) return {};
  // Exact zeros at the origin first; the companion solve handles the rest.
  std::vector<std::complex<double>> result;
  int shift = 0;
  while (shift < n && coefficients_[static_cast<std::size_t>(shift)] == 0.0) {
    result.emplace_back(0.0, 0.0);
    ++shift;
  }
  const int m = n - shift;
  if (m == 0) return result;
  if (m == 1) {
    result.emplace_back(-coefficients_[static_cast<std::size_t>(shift)] /
                            coefficients_[static_cast<std::size_t>(shift + 1)],
                        0.0);
    return result;
  }
  Matrix companion = Matrix::Zero(m, m);
  const double lead = leading();
  for (int i = 0; i + 1 < m; ++i) companion(i + 1, i) = 1.0;
  for (int i = 0; i < m; ++i) {
    companion(i, m - 1) =
        -coefficients_[static_cast<std::size_t>(shift + i)] / lead;
  }
  Eigen::EigenSolver<Matrix> solver(companion, false);
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    result.push_back(solver.eigenvalues()(i));
  }
  return result;
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  std::vector<double> c(std::max(a.coefficients_.size(), b.coefficients_.size()),
                        0.0);
  for (std::size_t i = 0; i < a.coefficients_.size(); ++i) c[i] += a.coefficients_[i];
  for (std::size_t i = 0; i < b.coefficients_.size(); ++i) c[i] += b.coefficients_[i];
  return Polynomial(std::move(c));
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-b); }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.is_zero() || b.is_zero()) return Polynomial{};
  std::vector<double> c(a.coefficients_.size() + b.coefficients_.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.coefficients_.size(); ++i) {
    for (std::size_t j = 0; j < b.coefficients_.size(); ++j) {
      c[i + j] += a.coefficients_[i] * b.coefficients_[j];
    }
  }
  return Polynomial(std::move(c));
}

Polynomial operator*(double k, const Polynomial& a) {
  std::vector<double> c = a.coefficients_;
  for (double& x : c) x *= k;
  return Polynomial(std::move(c));
}

Rational::Rational(Polynomial numerator, Polynomial denominator)
    : numerator_(std::move(numerator)), denominator_(std::move(denominator)) {
  if (denominator_.is_zero()) {
    throw RationalError("rational function with zero denominator");
  }
}

std::complex<double> Rational::evaluate(std::complex<double> s) const {
  return numerator_.evaluate(s) / denominator_.evaluate(s);
}

Rational Rational::simplified() const {
  if (numerator_.is_zero()) return Rational(0.0);
  const std::vector<std::complex<double>> top = merge_clusters(numerator_.roots());
  const std::vector<std::complex<double>> bottom = merge_clusters(denominator_.roots());
  std::vector<bool> used(bottom.size(), false);
  std::vector<std::complex<double>> kept_top;
  for (const auto& z : top) {
    bool cancelled = false;
    for (std::size_t j = 0; j < bottom.size(); ++j) {
      if (!used[j] && std::abs(z - bottom[j]) <=
                          kRootMatchTolerance * std::max(1.0, std::abs(z))) {
        used[j] = true;
        cancelled = true;
        break;
      }
    }
    if (!cancelled) kept_top.push_back(z);
  }
  std::vector<std::complex<double>> kept_bottom;
  for (std::size_t j = 0; j < bottom.size(); ++j) {
    if (!used[j]) kept_bottom.push_back(bottom[j]);
  }
  const double lead = denominator_.leading();
  if (kept_bottom.size() == bottom.size()) {
    // Nothing cancels: keep the exact coefficients, monic denominator.
    return {(1.0 / lead) * numerator_, (1.0 / lead) * denominator_};
  }
  const double gain = numerator_.leading() / lead;
  return {Polynomial::from_roots(kept_top, gain),
          Polynomial::from_roots(kept_bottom, 1.0)};
}

Rational operator+(const Rational& a, const Rational& b) {
  return Rational(a.numerator_ * b.denominator_ + b.numerator_ * a.denominator_,
                  a.denominator_ * b.denominator_)
      .simplified();
}

Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

Rational operator*(const Rational& a, const Rational& b) {
  return Rational(a.numerator_ * b.numerator_, a.denominator_ * b.denominator_)
      .simplified();
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.is_zero()) throw RationalError("division by a zero rational function");
  return Rational(a.numerator_ * b.denominator_, a.denominator_ * b.numerator_)
      .simplified();
}

RationalTransferMatrix::RationalTransferMatrix(int rows, int cols)
    : rows_(rows),
      cols_(cols),
      entries_(static_cast<std::size_t>(rows * cols), Rational(0.0)) {}

RationalTransferMatrix::RationalTransferMatrix(
    std::initializer_list<std::initializer_list<Rational>> rows) {
  rows_ = static_cast<int>(rows.size());
  cols_ = rows_ > 0 ? static_cast<int>(rows.begin()->size()) : 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != cols_) {
      throw RationalError("ragged transfer matrix initializer");
    }
    entries_.insert(entries_.end(), row.begin(), row.end());
  }
}

RationalTransferMatrix RationalTransferMatrix::from_state_space(
    const Matrix& a, const Matrix& b, const Matrix& c) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.rows() != n || c.cols() != n) {
    throw RationalError("from_state_space: dimension mismatch");
  }
  // det(sI - A) = s^n + c_{n-1} s^{n-1} + ... ; adj(sI - A) = sum M_k s^{n-k}.
  std::vector<double> charpoly(static_cast<std::size_t>(n + 1), 0.0);
  charpoly[static_cast<std::size_t>(n)] = 1.0;
  std::vector<Matrix> adjugate_terms;
  Matrix m = Matrix::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    if (k > 1) m = a * m + charpoly[static_cast<std::size_t>(n - k + 1)] *
                               Matrix::Identity(n, n);
    adjugate_terms.push_back(m);
    charpoly[static_cast<std::size_t>(n - k)] =
        -(a * m).trace() / static_cast<double>(k);
  }
  const Polynomial denominator(charpoly);
  RationalTransferMatrix g(static_cast<int>(c.rows()), static_cast<int>(b.cols()));
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      std::vector<double> numerator(static_cast<std::size_t>(n), 0.0);
      for (Eigen::Index k = 1; k <= n; ++k) {
        const double value =
            (c.row(i) * adjugate_terms[static_cast<std::size_t>(k - 1)] * b.col(j))(0);
        numerator[static_cast<std::size_t>(n - k)] = value;
      }
      g(static_cast<int>(i), static_cast<int>(j)) =
          Rational(Polynomial(numerator), denominator).simplified();
    }
  }
  return g;
}

ComplexMatrix RationalTransferMatrix::evaluate(std::complex<double> s) const {
  ComplexMatrix value(rows_, cols_);
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) value(r, c) = (*this)(r, c).evaluate(s);
  }
  return value;
}

RationalTransferMatrix RationalTransferMatrix::simplified() const {
  RationalTransferMatrix out = *this;
  for (Rational& e : out.entries_) e = e.simplified();
  return out;
}

RationalTransferMatrix RationalTransferMatrix::minor_without(int row,
                                                             int col) const {
  RationalTransferMatrix out(rows_ - 1, cols_ - 1);
  for (int r = 0, rr = 0; r < rows_; ++r) {
    if (r == row) continue;
    for (int c = 0, cc = 0; c < cols_; ++c) {
      if (c == col) continue;
      out(rr, cc++) = (*this)(r, c);
    }
    ++rr;
  }
  return out;
}

Rational RationalTransferMatrix::determinant() const {
  if (rows_ != cols_ || rows_ == 0) {
    throw RationalError("determinant of a non-square transfer matrix");
  }
  if (rows_ == 1) return (*this)(0, 0);
  Rational det(0.0);
  for (int c = 0; c < cols_; ++c) {
    if ((*this)(0, c).is_zero()) continue;
    const Rational term = (*this)(0, c) * minor_without(0, c).determinant();
    det = (c % 2 == 0) ? det + term : det - term;
  }
  return det;
}

RationalTransferMatrix RationalTransferMatrix::inverse() const {
  const Rational det = determinant();
  if (det.is_zero()) {
    throw RationalError("transfer matrix is structurally singular");
  }
  RationalTransferMatrix inv(rows_, cols_);
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      const Rational cofactor =
          rows_ == 1 ? Rational(1.0) : minor_without(c, r).determinant();
      inv(r, c) = ((r + c) % 2 == 0 ? cofactor : -cofactor) / det;
    }
  }
  return inv;
}

std::vector<std::complex<double>> RationalTransferMatrix::poles() const {
  std::vector<std::complex<double>> all;
  for (const Rational& e : entries_) {
    if (e.is_zero()) continue;
    for (const auto& p : e.denominator().roots()) all.push_back(p);
  }
  return all;
}

RationalTransferMatrix operator*(const RationalTransferMatrix& a,
                                 const RationalTransferMatrix& b) {
  if (a.cols_ != b.rows_) {
    throw RationalError("transfer matrix product: dimension mismatch");
  }
  RationalTransferMatrix out(a.rows_, b.cols_);
  for (int r = 0; r < a.rows_; ++r) {
    for (int c = 0; c < b.cols_; ++c) {
      Rational sum(0.0);
      for (int k = 0; k < a.cols_; ++k) {
        if (a(r, k).is_zero() || b(k, c).is_zero()) continue;
        sum = sum + a(r, k) * b(k, c);
      }
      out(r, c) = sum;
    }
  }
  return out;
}

RationalTransferMatrix operator*(const Rational& k,
                                 const RationalTransferMatrix& a) {
  RationalTransferMatrix out = a;
  for (Rational& e : out.entries_) e = k * e;
  return out;
}

RationalTransferMatrix RationalTransferMatrix::scaled(const Vector& left,
                                                      const Vector& right) const {
  if (left.size() != rows_ || right.size() != cols_) {
    throw RationalError("scaled: dimension mismatch");
  }
  RationalTransferMatrix out = *this;
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      out(r, c) = Rational(left(r) * right(c)) * (*this)(r, c);
    }
  }
  return out;
}

}  // namespace surge
