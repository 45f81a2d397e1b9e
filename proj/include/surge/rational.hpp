#pragma once

// Real-coefficient polynomials and rational functions in s, and small
// matrices of them.  Enough algebra for transfer matrices of 2x2 plants.

#include <complex>
#include <stdexcept>
#include <vector>

#include "surge/numerics.hpp"

namespace surge {

class RationalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Coefficients in ascending powers: {c0, c1, c2} is c0 + c1 s + c2 s^2.
class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(std::initializer_list<double> coefficients);
  explicit Polynomial(std::vector<double> coefficients);

  static Polynomial constant(double value) { return Polynomial{value}; }
  /// (s - r1)(s - r2)... scaled by `leading`; complex roots must come in
  /// conjugate pairs.
  static Polynomial from_roots(const std::vector<std::complex<double>>& roots,
                               double leading = 1.0);

  int degree() const;  // -1 for the zero polynomial
  bool is_zero() const { return degree() < 0; }
  double leading() const;
  const std::vector<double>& coefficients() const { return coefficients_; }
  double coefficient(int power) const;

  std::complex<double> evaluate(std::complex<double> s) const;
  std::vector<std::complex<double>> roots() const;

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(double k, const Polynomial& a);
  Polynomial operator-() const { return -1.0 * *this; }

 private:
  void trim();
  std::vector<double> coefficients_;
};

class Rational {
 public:
  Rational() : numerator_(Polynomial{0.0}), denominator_(Polynomial{1.0}) {}
  Rational(Polynomial numerator, Polynomial denominator);
  /// Constant gain.
  Rational(double value)  // NOLINT(google-explicit-constructor)
      : Rational(Polynomial{value}, Polynomial{1.0}) {}

  const Polynomial& numerator() const { return numerator_; }
  const Polynomial& denominator() const { return denominator_; }
  bool is_zero() const { return numerator_.is_zero(); }

  std::complex<double> evaluate(std::complex<double> s) const;

  /// Cancels numerator/denominator roots that coincide (relative tolerance
  /// 1e-6) and normalizes the denominator to be monic.
  Rational simplified() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  Rational operator-() const { return {-numerator_, denominator_}; }

 private:
  Polynomial numerator_;
  Polynomial denominator_;
};

/// Grid of rational transfer functions, row-major.
class RationalTransferMatrix {
 public:
  RationalTransferMatrix() = default;
  RationalTransferMatrix(int rows, int cols);
  RationalTransferMatrix(std::initializer_list<std::initializer_list<Rational>> rows);

  /// G(s) = C (sI - A)^-1 B via the Faddeev-LeVerrier adjugate, each entry
  /// simplified.
  static RationalTransferMatrix from_state_space(const Matrix& a,
                                                 const Matrix& b,
                                                 const Matrix& c);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Rational& operator()(int r, int c) { return entries_[index(r, c)]; }
  const Rational& operator()(int r, int c) const { return entries_[index(r, c)]; }

  ComplexMatrix evaluate(std::complex<double> s) const;
  ComplexMatrix at_frequency(double omega) const {
    return evaluate({0.0, omega});
  }

  RationalTransferMatrix simplified() const;
  /// Determinant by cofactor expansion; square only.
  Rational determinant() const;
  /// Inverse via adjugate / determinant; throws when the determinant is
  /// identically zero.
  RationalTransferMatrix inverse() const;
  /// Roots of every entry denominator.
  std::vector<std::complex<double>> poles() const;

  friend RationalTransferMatrix operator*(const RationalTransferMatrix& a,
                                          const RationalTransferMatrix& b);
  friend RationalTransferMatrix operator*(const Rational& k,
                                          const RationalTransferMatrix& a);
  /// D_left^-1-style scaling: every entry (r, c) multiplied by
  /// left(r) * right(c).
  RationalTransferMatrix scaled(const Vector& left, const Vector& right) const;

 private:
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(c);
  }
  RationalTransferMatrix minor_without(int row, int col) const;

  int rows_ = 0;
  int cols_ = 0;
  std::vector<Rational> entries_;
};

}  // namespace surge
