#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "surge/analysis.hpp"

using namespace surge;
using cd = std::complex<double>;

namespace {

ControllabilityReport tank_report() {
  const LtiModel model = LtiModel::from_linearization(linearize(OperatingPoint::canonical()));
  return analyze_model(model, ScalingSet::surge_tank(), default_frequency_grid());
}

// Singular values as square roots of the eigenvalues of G^H G.
std::vector<double> hermitian_singular_values(const ComplexMatrix& g) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(g.adjoint() * g);
  std::vector<double> out;
  for (Eigen::Index i = es.eigenvalues().size() - 1; i >= 0; --i) {
    out.push_back(std::sqrt(std::max(0.0, es.eigenvalues()(i))));
  }
  return out;
}

}  // namespace

TEST_CASE("structural properties of the tank") {
  const ControllabilityReport r = tank_report();
  CHECK(r.controllability.rank == 2);
  CHECK(r.observability.rank == 2);
  REQUIRE(r.modes.values.size() == 2);
  CHECK(std::abs(r.modes.values[0]) < 1e-12);
  CHECK(std::abs(r.modes.values[1] - cd(-75.0, 0.0)) < 1e-9);
  for (int i = 0; i < 2; ++i) CHECK(r.modes.vectors.col(i).norm() == doctest::Approx(1.0));
  CHECK(r.zeros_defined);
  CHECK(r.zeros.empty());
}

TEST_CASE("rank of deficient pairs") {
  Matrix a(2, 2), b(2, 1), c(1, 2);
  a << -1, 0, 0, -2;
  b << 1, 0;
  c << 1, 0;
  CHECK(controllability_matrix(a, b).rank == 1);
  CHECK(observability_matrix(a, c).rank == 1);
  CHECK(numerical_rank(Matrix::Zero(3, 3)) == 0);
}

TEST_CASE("relative gain array of the tank") {
  const ControllabilityReport r = tank_report();
  ComplexMatrix expected(2, 2);
  expected << 0.8, 0.2, 0.2, 0.8;
  CHECK((r.rga_low - expected).norm() < 1e-6);
  const ScaledModels scaled = r.scaled;
  for (double w : default_frequency_grid()) {
    const cd s(0.0, w);
    const ComplexMatrix lambda = rga(r.g.evaluate(s));
    CHECK((lambda - expected).cwiseAbs().maxCoeff() < 1e-6);
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(lambda.row(i).sum() - 1.0) < 1e-10);
      CHECK(std::abs(lambda.col(i).sum() - 1.0) < 1e-10);
    }
    CHECK((rga(scaled.g.evaluate(s)) - lambda).norm() < 1e-10);
  }
  ComplexMatrix singular(2, 2);
  singular << 1, 2, 2, 4;
  CHECK_THROWS_AS(rga(singular), AnalysisError);
}

TEST_CASE("scaled tank models match the printed entries") {
  const ControllabilityReport r = tank_report();
  for (double w : {0.3, 20.0, 500.0}) {
    const cd s(0.0, w);
    const ComplexMatrix g = r.scaled.g.evaluate(s);
    const cd lag = 60.0 / (s + 75.0);
    const cd expected[2][2] = {{85.71 / s, 21.43 / s}, {lag, -lag}};
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        CHECK(std::abs(g(i, j) - expected[i][j]) < 0.01 * std::abs(expected[i][j]));
      }
    }
    const ComplexMatrix gd = r.scaled.gd.evaluate(s);
    CHECK(std::abs(gd(0, 0)) < 1e-12);
    CHECK(std::abs(gd(1, 0) - 300.0 / (s + 75.0)) < 1e-9 * std::abs(300.0 / (s + 75.0)));
  }
  CHECK(std::abs(r.scaled.gd.evaluate(cd(0.0, 0.0))(1, 0) - 4.0) < 1e-12);
}

TEST_CASE("disturbance rejection index is constant") {
  const ControllabilityReport r = tank_report();
  REQUIRE(r.rejection.size() == 200);
  for (const RejectionPoint& p : r.rejection) {
    REQUIRE(p.valid);
    CHECK(std::abs(p.magnitude(0) - 1.0) < 1e-8);
    CHECK(std::abs(p.magnitude(1) - 4.0) < 1e-8);
  }
}

TEST_CASE("disturbance crossing frequency") {
  const ControllabilityReport r = tank_report();
  // |300 / (jw + 75)| = 1.
  CHECK(r.crossing == doctest::Approx(std::sqrt(300.0 * 300.0 - 75.0 * 75.0)).epsilon(1e-8));
  const RationalTransferMatrix never{{Rational(Polynomial{0.5}, Polynomial{1.0, 1.0})}};
  CHECK(std::isnan(unit_gain_crossing(never)));
}

TEST_CASE("singular values agree with a Hermitian eigen oracle") {
  const ControllabilityReport r = tank_report();
  const std::vector<SingularValuePoint> at75 = singular_value_sweep(r.scaled.g, {75.0});
  const std::vector<double> oracle = hermitian_singular_values(r.scaled.g.evaluate(cd(0.0, 75.0)));
  REQUIRE(at75.front().values.size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(at75.front().values[i] == doctest::Approx(oracle[i]).epsilon(1e-9));
  }
  for (const SingularValuePoint& p : r.sweep_g) {
    CHECK(p.values[0] >= p.values[1]);
  }
  const SingularValuePoint low = singular_value_sweep(r.scaled.gd, {1e-6}).front();
  CHECK(low.values[0] == doctest::Approx(4.0).epsilon(1e-6));
  const SingularValuePoint high = singular_value_sweep(r.scaled.gd, {1e9}).front();
  CHECK(high.values[0] < 1e-6);
}

TEST_CASE("zeros of a diagonal example") {
  const RationalTransferMatrix g{
      {Rational(Polynomial{1.0, 1.0}, Polynomial{2.0, 1.0}), Rational(0.0)},
      {Rational(0.0), Rational(Polynomial{1.0}, Polynomial{3.0, 1.0})}};
  const std::vector<cd> z = multivariable_zeros(g);
  REQUIRE(z.size() == 1);
  CHECK(std::abs(z[0] - cd(-1.0, 0.0)) < 1e-9);
  const ComplexMatrix lambda = rga(g.evaluate(cd(0.0, 1.0)));
  CHECK((lambda - ComplexMatrix::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("frequency grids") {
  const std::vector<double> grid = default_frequency_grid();
  REQUIRE(grid.size() == 200);
  CHECK(grid.front() == doctest::Approx(0.1));
  CHECK(grid.back() == doctest::Approx(1e4));
  for (std::size_t i = 1; i < grid.size(); ++i) {
    CHECK(grid[i] / grid[i - 1] == doctest::Approx(grid[1] / grid[0]));
  }
}

TEST_CASE("sweep CSV has one row per frequency") {
  const ControllabilityReport r = tank_report();
  std::ostringstream out;
  write_sweep_csv(out, r.sweep_g);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "omega,sv1,sv2");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 200);
}

TEST_CASE("model file parsing") {
  std::istringstream ok(
      "# tank\n"
      "a = 0 0; 0 -75\n"
      "b = 1 1; 0.01 -0.04   # inputs\n"
      "c = 1 0; 0 1\n"
      "gd = 0; 60\n");
  const LtiModel m = read_lti_model(ok);
  CHECK(m.a(1, 1) == -75.0);
  CHECK(m.b(1, 0) == 0.01);
  CHECK(m.gd(1, 0) == 60.0);

  auto error_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_lti_model(in);
    } catch (const AnalysisError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(error_of("a = 1 0; 0 1\nb = 1; x\n").find("line 2") != std::string::npos);
  CHECK(error_of("a = 1 0; 0\n").find("line 1") != std::string::npos);
  CHECK(error_of("q = 1\n").find("line 1") != std::string::npos);
  CHECK_FALSE(error_of("a = 1 0; 0 1\nb = 1; 1 2\nc = 1 0\n").empty());
}

TEST_CASE("report text carries the conclusions") {
  std::ostringstream out;
  write_report(out, tank_report());
  const std::string text = out.str();
  CHECK(text.find("0.8") != std::string::npos);
  CHECK(text.find("290.47") != std::string::npos);
}
