#pragma once

// Input/output controllability of small LTI models: structural properties,
// multivariable zeros, relative gains, scaling and frequency sweeps.

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include "surge/numerics.hpp"
#include "surge/plant.hpp"
#include "surge/rational.hpp"

namespace surge {

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// x' = A x + B u + Gd d, y = C x.
struct LtiModel {
  Matrix a;
  Matrix b;
  Matrix c;
  Matrix gd;

  static LtiModel from_linearization(const LinearModel& model);
  void validate() const;
};

/// Reads `a = ...`, `b = ...`, `c = ...`, `gd = ...` lines, rows separated by
/// ';'.  `#` starts a comment.  Throws AnalysisError with the line number.
LtiModel read_lti_model(std::istream& in);

struct RankedMatrix {
  Matrix matrix;
  int rank = 0;
};

/// Numerical rank with tolerance 1e-9 * sigma_max.
int numerical_rank(const Matrix& m);

RankedMatrix controllability_matrix(const Matrix& a, const Matrix& b);
RankedMatrix observability_matrix(const Matrix& a, const Matrix& c);

struct Modes {
  std::vector<std::complex<double>> values;
  ComplexMatrix vectors;  // column i belongs to values[i], unit norm
};

/// Eigenvalues sorted by descending real part, then imaginary part.
Modes poles_and_modes(const Matrix& a);

/// Roots of det G(s) numerator that are not poles of G.  Square G only.
std::vector<std::complex<double>> multivariable_zeros(const RationalTransferMatrix& g);

/// G .* inv(G)^T; throws AnalysisError when G is singular.
ComplexMatrix rga(const ComplexMatrix& g);

struct ScalingSet {
  Vector dy;
  Vector du;
  Vector dd;

  /// Largest expected output error, input range and disturbance per channel
  /// for the surge tank: Dy = diag(7, 0.1), Du = diag(600, 150), Dd = 0.5.
  static ScalingSet surge_tank();
};

struct ScaledModels {
  RationalTransferMatrix g;
  RationalTransferMatrix gd;
};

/// G~ = Dy^-1 G Du, Gd~ = Dy^-1 Gd Dd.
ScaledModels scale_models(const RationalTransferMatrix& g,
                          const RationalTransferMatrix& gd,
                          const ScalingSet& scaling);

struct RejectionPoint {
  double omega = 0.0;
  Vector magnitude;    // |G~^-1 Gd~| per output, empty when `valid` is false
  bool valid = true;  // false where G~ is singular
};

std::vector<RejectionPoint> disturbance_rejection_index(
    const RationalTransferMatrix& g, const RationalTransferMatrix& gd,
    const std::vector<double>& omegas);

/// `count` logarithmically spaced frequencies over [low, high].
std::vector<double> log_grid(double low, double high, int count);
std::vector<double> default_frequency_grid();  // 200 points over [0.1, 1e4]

struct SingularValuePoint {
  double omega = 0.0;
  std::vector<double> values;  // descending
};

std::vector<SingularValuePoint> singular_value_sweep(
    const RationalTransferMatrix& g, const std::vector<double>& omegas);

/// Lowest omega in [low, high] where the largest singular value falls to 1,
/// by bisection after a log-spaced bracket search.  NaN when there is none.
double unit_gain_crossing(const RationalTransferMatrix& g, double low = 1e-3,
                          double high = 1e7);

void write_sweep_csv(std::ostream& out, const std::vector<SingularValuePoint>& sweep);

struct ControllabilityReport {
  RankedMatrix controllability;
  RankedMatrix observability;
  Modes modes;
  RationalTransferMatrix g;
  RationalTransferMatrix gd;
  std::vector<std::complex<double>> zeros;
  bool zeros_defined = true;  // false when G is not square or rank deficient
  ComplexMatrix rga_low;      // at the first grid frequency
  ScaledModels scaled;
  double crossing = 0.0;
  std::vector<RejectionPoint> rejection;
  std::vector<SingularValuePoint> sweep_g;
  std::vector<SingularValuePoint> sweep_gd;
};

ControllabilityReport analyze_model(const LtiModel& model, const ScalingSet& scaling,
                                    const std::vector<double>& omegas);

void write_report(std::ostream& out, const ControllabilityReport& report);

}  // namespace surge
