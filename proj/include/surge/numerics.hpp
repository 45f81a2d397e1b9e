#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace surge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;

class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model evaluated at s = j*omega (omega in rad/hour).
struct FrequencyPoint {
  double omega = 0.0;
  ComplexMatrix value;
};

/// e^{M t} by scaling and squaring with a (6,6) Pade approximant.
Matrix matrix_exponential(const Matrix& m, double t);

/// Zero-order-hold equivalent of x' = A x + B u.
struct DiscretePair {
  Matrix phi;
  Matrix gamma;
};

/// Exact ZOH discretization through the block exponential
/// exp([[A, B], [0, 0]] dt) = [[Phi, Gamma], [0, I]].  Valid for singular A.
DiscretePair discretize_zoh(const Matrix& a, const Matrix& b, double dt);

/// Moore-Penrose pseudoinverse; singular values below 1e-12 * sigma_max are
/// treated as zero.
Matrix pseudoinverse(const Matrix& m);

using VectorField = std::function<Vector(const Vector&)>;

/// One classical fourth-order Runge-Kutta step of an autonomous field.
Vector rk4_step(const VectorField& f, const Vector& x, double dt);

/// Steady-state filter (measurement-update) gain
///   L = P C' (C P C' + Rn)^-1
/// where P is the fixed point of the prediction Riccati recursion with
/// process noise H Qw H'.  Throws NumericsError if the recursion has not
/// settled after `max_iterations`.
Matrix kalman_gain(const Matrix& phi, const Matrix& c, const Matrix& qw,
                   const Matrix& rn, const Matrix& noise_input,
                   int max_iterations = 100000);

/// Same as above with process noise entering every state directly.
Matrix kalman_gain(const Matrix& phi, const Matrix& c, const Matrix& qw,
                   const Matrix& rn);

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations,
/// ascending.
std::vector<double> symmetric_eigenvalues(const Matrix& s);

/// Singular values in descending order, computed as square roots of the
/// eigenvalues of M^H M (or M M^H when M is wide).
std::vector<double> singular_values(const ComplexMatrix& m);

/// Spectral radius through the general real eigen-solver.
double spectral_radius(const Matrix& m);

}  // namespace surge
