#include "surge/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "surge/format.hpp"

namespace surge {

LtiModel LtiModel::from_linearization(const LinearModel& model) {
  return {model.a, model.b, model.c, model.gd};
}

void LtiModel::validate() const {
  const Eigen::Index n = a.rows();
  if (n == 0 || a.cols() != n) throw AnalysisError("model: A must be square");
  if (b.rows() != n || b.cols() == 0) throw AnalysisError("model: B rows differ from A");
  if (c.cols() != n || c.rows() == 0) throw AnalysisError("model: C columns differ from A");
  if (gd.size() != 0 && gd.rows() != n) throw AnalysisError("model: Gd rows differ from A");
}

namespace {

Matrix parse_matrix(const std::string& text, int line) {
  std::vector<std::vector<double>> rows;
  std::stringstream rows_in(text);
  std::string row_text;
  while (std::getline(rows_in, row_text, ';')) {
    std::replace(row_text.begin(), row_text.end(), ',', ' ');
    std::istringstream cells(row_text);
    std::vector<double> row;
    std::string cell;
    while (cells >> cell) {
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size() || !std::isfinite(value)) {
        throw AnalysisError("line " + std::to_string(line) + ": bad number '" + cell + "'");
      }
      row.push_back(value);
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw AnalysisError("line " + std::to_string(line) + ": empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) {
      throw AnalysisError("line " + std::to_string(line) + ": ragged matrix rows");
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

std::string trimmed(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

LtiModel read_lti_model(std::istream& in) {
  std::map<std::string, Matrix> found;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trimmed(raw.substr(0, raw.find('#')));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw AnalysisError("line " + std::to_string(line) + ": expected key = value");
    }
    const std::string key = trimmed(text.substr(0, eq));
    if (key != "a" && key != "b" && key != "c" && key != "gd") {
      throw AnalysisError("line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
    if (found.count(key) != 0) {
      throw AnalysisError("line " + std::to_string(line) + ": duplicate key '" + key + "'");
    }
    found[key] = parse_matrix(text.substr(eq + 1), line);
  }
  for (const char* key : {"a", "b", "c"}) {
    if (found.count(key) == 0) {
      throw AnalysisError(std::string("model: missing '") + key + "'");
    }
  }
  LtiModel model{found["a"], found["b"], found["c"],
                 found.count("gd") != 0 ? found["gd"] : Matrix()};
  model.validate();
  return model;
}

int numerical_rank(const Matrix& m) {
  if (m.size() == 0) return 0;
  const Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double tolerance = 1e-9 * s(0);
  return static_cast<int>((s.array() > tolerance).count());
}

RankedMatrix controllability_matrix(const Matrix& a, const Matrix& b) {
  const Eigen::Index n = a.rows();
  Matrix out(n, n * b.cols());
  Matrix block = b;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.middleCols(i * b.cols(), b.cols()) = block;
    block = a * block;
  }
  return {out, numerical_rank(out)};
}

RankedMatrix observability_matrix(const Matrix& a, const Matrix& c) {
  const Eigen::Index n = a.rows();
  Matrix out(n * c.rows(), n);
  Matrix block = c;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.middleRows(i * c.rows(), c.rows()) = block;
    block = block * a;
  }
  return {out, numerical_rank(out)};
}

Modes poles_and_modes(const Matrix& a) {
  if (a.rows() != a.cols()) throw AnalysisError("poles_and_modes: A must be square");
  const Eigen::EigenSolver<Matrix> solver(a);
  const Eigen::VectorXcd values = solver.eigenvalues();
  const ComplexMatrix vectors = solver.eigenvectors();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    if (values(x).real() != values(y).real()) return values(x).real() > values(y).real();
    return values(x).imag() > values(y).imag();
  });
  Modes modes;
  modes.vectors.resize(a.rows(), a.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    modes.values.push_back(values(order[i]));
    modes.vectors.col(static_cast<Eigen::Index>(i)) = vectors.col(order[i]).normalized();
  }
  return modes;
}

std::vector<std::complex<double>> multivariable_zeros(const RationalTransferMatrix& g) {
  if (g.rows() != g.cols()) throw AnalysisError("multivariable_zeros: G must be square");
  const Rational det = g.determinant().simplified();
  if (det.is_zero()) {
    throw AnalysisError("multivariable_zeros: G does not have full normal rank");
  }
  const std::vector<std::complex<double>> poles = g.poles();
  std::vector<std::complex<double>> zeros;
  for (const std::complex<double>& z : det.numerator().roots()) {
    const bool is_pole = std::any_of(poles.begin(), poles.end(), [&](const auto& p) {
      return std::abs(z - p) <= 1e-6 * std::max(1.0, std::abs(p));
    });
    if (!is_pole) zeros.push_back(z);
  }
  return zeros;
}

ComplexMatrix rga(const ComplexMatrix& g) {
  if (g.rows() != g.cols() || g.rows() == 0) throw AnalysisError("rga: G must be square");
  const Eigen::FullPivLU<ComplexMatrix> lu(g);
  if (!lu.isInvertible()) throw AnalysisError("rga: G is singular");
  return g.cwiseProduct(lu.inverse().transpose());
}

ScalingSet ScalingSet::surge_tank() {
  return {Eigen::Vector2d{7.0, 0.1}, Eigen::Vector2d{600.0, 150.0},
          Vector::Constant(1, 0.5)};
}

ScaledModels scale_models(const RationalTransferMatrix& g,
                          const RationalTransferMatrix& gd,
                          const ScalingSet& scaling) {
  auto positive = [](const Vector& d) { return d.size() > 0 && (d.array() > 0.0).all(); };
  if (!positive(scaling.dy) || !positive(scaling.du) || !positive(scaling.dd)) {
    throw AnalysisError("scale_models: scaling diagonals must be positive");
  }
  if (scaling.dy.size() != g.rows() || scaling.du.size() != g.cols() ||
      scaling.dy.size() != gd.rows() || scaling.dd.size() != gd.cols()) {
    throw AnalysisError("scale_models: scaling dimensions do not match the models");
  }
  const Vector inv_dy = scaling.dy.cwiseInverse();
  return {g.scaled(inv_dy, scaling.du), gd.scaled(inv_dy, scaling.dd)};
}

std::vector<RejectionPoint> disturbance_rejection_index(
    const RationalTransferMatrix& g, const RationalTransferMatrix& gd,
    const std::vector<double>& omegas) {
  std::vector<RejectionPoint> out;
  for (double omega : omegas) {
    RejectionPoint p;
    p.omega = omega;
    const ComplexMatrix gw = g.at_frequency(omega);
    const Eigen::FullPivLU<ComplexMatrix> lu(gw);
    if (!gw.allFinite() || !lu.isInvertible()) {
      p.valid = false;
    } else {
      const ComplexMatrix r = lu.solve(gd.at_frequency(omega));
      p.magnitude = r.col(0).cwiseAbs();
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<double> log_grid(double low, double high, int count) {
  if (!(low > 0.0) || !(high > low) || count < 2) {
    throw AnalysisError("log_grid: need 0 < low < high and at least two points");
  }
  std::vector<double> out(static_cast<std::size_t>(count));
  const double a = std::log10(low);
  const double b = std::log10(high);
  for (int i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (count - 1));
  }
  return out;
}

std::vector<double> default_frequency_grid() { return log_grid(0.1, 1e4, 200); }

std::vector<SingularValuePoint> singular_value_sweep(const RationalTransferMatrix& g,
                                                     const std::vector<double>& omegas) {
  std::vector<SingularValuePoint> out;
  out.reserve(omegas.size());
  for (double omega : omegas) {
    out.push_back({omega, singular_values(g.at_frequency(omega))});
  }
  return out;
}

double unit_gain_crossing(const RationalTransferMatrix& g, double low, double high) {
  auto sigma = [&](double omega) { return singular_values(g.at_frequency(omega)).front(); };
  const std::vector<double> grid = log_grid(low, high, 1000);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (sigma(grid[i - 1]) >= 1.0 && sigma(grid[i]) < 1.0) {
      double a = grid[i - 1];
      double b = grid[i];
      for (int k = 0; k < 200 && b - a > 1e-13 * b; ++k) {
        const double mid = std::sqrt(a * b);
        (sigma(mid) >= 1.0 ? a : b) = mid;
      }
      return 0.5 * (a + b);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

void write_sweep_csv(std::ostream& out, const std::vector<SingularValuePoint>& sweep) {
  const std::size_t n = sweep.empty() ? 0 : sweep.front().values.size();
  out << "omega";
  for (std::size_t i = 1; i <= n; ++i) out << ",sv" << i;
  out << '\n';
  for (const SingularValuePoint& p : sweep) {
    out << format_number(p.omega);
    for (double v : p.values) out << ',' << format_number(v);
    out << '\n';
  }
}

ControllabilityReport analyze_model(const LtiModel& model, const ScalingSet& scaling,
                                    const std::vector<double>& omegas) {
  model.validate();
  if (model.gd.size() == 0) throw AnalysisError("analyze: model has no disturbance input");
  ControllabilityReport rep;
  rep.controllability = controllability_matrix(model.a, model.b);
  rep.observability = observability_matrix(model.a, model.c);
  rep.modes = poles_and_modes(model.a);
  rep.g = RationalTransferMatrix::from_state_space(model.a, model.b, model.c);
  rep.gd = RationalTransferMatrix::from_state_space(model.a, model.gd, model.c);
  try {
    rep.zeros = multivariable_zeros(rep.g);
  } catch (const AnalysisError&) {
    rep.zeros_defined = false;
  }
  rep.rga_low = rga(rep.g.at_frequency(omegas.front()));
  rep.scaled = scale_models(rep.g, rep.gd, scaling);
  rep.crossing = unit_gain_crossing(rep.scaled.gd);
  rep.rejection = disturbance_rejection_index(rep.scaled.g, rep.scaled.gd, omegas);
  rep.sweep_g = singular_value_sweep(rep.scaled.g, omegas);
  rep.sweep_gd = singular_value_sweep(rep.scaled.gd, omegas);
  return rep;
}

namespace {

std::string complex_text(std::complex<double> z) {
  if (std::abs(z.imag()) <= 1e-12 * std::max(1.0, std::abs(z))) {
    return format_number(z.real() == 0.0 ? 0.0 : z.real());
  }
  return format_number(z.real()) + (z.imag() < 0 ? "-" : "+") +
         format_number(std::abs(z.imag())) + "j";
}

std::string polynomial_text(const Polynomial& p) {
  std::string out;
  for (int k = p.degree(); k >= 0; --k) {
    const double c = p.coefficient(k);
    if (c == 0.0) continue;
    if (!out.empty()) out += c < 0 ? " - " : " + ";
    else if (c < 0) out += "-";
    const double mag = std::abs(c);
    if (k == 0 || mag != 1.0) out += format_number(mag);
    if (k >= 1) out += "s";
    if (k >= 2) out += "^" + std::to_string(k);
  }
  return out.empty() ? "0" : out;
}

std::string rational_text(const Rational& r) {
  if (r.is_zero()) return "0";
  if (r.denominator().degree() == 0) {
    return polynomial_text((1.0 / r.denominator().leading()) * r.numerator());
  }
  return "(" + polynomial_text(r.numerator()) + ")/(" + polynomial_text(r.denominator()) + ")";
}

void write_matrix(std::ostream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << "    [";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out << (c ? ", " : "") << format_number(m(r, c));
    }
    out << "]\n";
  }
}

void write_transfer(std::ostream& out, const RationalTransferMatrix& g) {
  for (int r = 0; r < g.rows(); ++r) {
    out << "    [";
    for (int c = 0; c < g.cols(); ++c) out << (c ? ", " : "") << rational_text(g(r, c));
    out << "]\n";
  }
}

}  // namespace

void write_report(std::ostream& out, const ControllabilityReport& rep) {
  out << "Controllability matrix (rank " << rep.controllability.rank << "):\n";
  write_matrix(out, rep.controllability.matrix);
  out << "Observability matrix (rank " << rep.observability.rank << "):\n";
  write_matrix(out, rep.observability.matrix);
  out << "Poles:";
  for (const auto& p : rep.modes.values) out << ' ' << complex_text(p);
  out << "\nPlant transfer matrix G(s):\n";
  write_transfer(out, rep.g);
  out << "Disturbance transfer matrix Gd(s):\n";
  write_transfer(out, rep.gd);
  out << "Multivariable zeros: ";
  if (!rep.zeros_defined) {
    out << "undefined (G not square or rank deficient)\n";
  } else if (rep.zeros.empty()) {
    out << "none\n";
  } else {
    for (const auto& z : rep.zeros) out << complex_text(z) << ' ';
    out << '\n';
  }
  out << "RGA at omega = " << format_number(rep.rejection.front().omega) << " rad/h:\n";
  write_matrix(out, rep.rga_low.real());
  out << "Scaled plant G~(s):\n";
  write_transfer(out, rep.scaled.g);
  out << "Scaled disturbance Gd~(s):\n";
  write_transfer(out, rep.scaled.gd);
  out << "Largest |Gd~(jw)| falls below 1 at omega = " << format_number(rep.crossing)
      << " rad/h; control is needed below this frequency\n";
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  std::size_t skipped = 0;
  for (const RejectionPoint& p : rep.rejection) {
    if (!p.valid) {
      ++skipped;
      continue;
    }
    lo = std::min(lo, p.magnitude.maxCoeff());
    hi = std::max(hi, p.magnitude.maxCoeff());
  }
  out << "Disturbance rejection |G~^-1 Gd~| at omega = "
      << format_number(rep.rejection.front().omega) << ":";
  if (rep.rejection.front().valid) {
    for (Eigen::Index i = 0; i < rep.rejection.front().magnitude.size(); ++i) {
      out << ' ' << format_number(rep.rejection.front().magnitude(i));
    }
  }
  out << "\n  largest element over the grid between " << format_number(lo) << " and "
      << format_number(hi);
  if (skipped > 0) out << " (" << skipped << " singular frequencies skipped)";
  out << '\n';
  if (lo > 1.0) {
    out << "  an input exceeds its scaled range at every frequency: perfect rejection "
           "is not possible\n";
  }
}

}  // namespace surge
