#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "cpt/analysis.hpp"
#include "parallel.hpp"

namespace cpt {

std::string param_name(DephasingParam p) {
  switch (p) {
    case DephasingParam::tphi_01: return "tphi_01";
    case DephasingParam::tphi_02: return "tphi_02";
    case DephasingParam::tphi_12: return "tphi_12";
  }
  return "?";
}

DephasingParam parse_param(const std::string& name) {
  if (name == "tphi_01") return DephasingParam::tphi_01;
  if (name == "tphi_02") return DephasingParam::tphi_02;
  if (name == "tphi_12") return DephasingParam::tphi_12;
  throw ParameterError("unknown fit parameter '" + name + "' (expected tphi_01, tphi_02 or tphi_12)");
}

void set_param(DecoherenceParams& dec, DephasingParam p, double value_ns) {
  switch (p) {
    case DephasingParam::tphi_01: dec.tphi_01 = value_ns; break;
    case DephasingParam::tphi_02: dec.tphi_02 = value_ns; break;
    case DephasingParam::tphi_12: dec.tphi_12 = value_ns; break;
  }
}

double get_param(const DecoherenceParams& dec, DephasingParam p) {
  switch (p) {
    case DephasingParam::tphi_01: return dec.tphi_01;
    case DephasingParam::tphi_02: return dec.tphi_02;
    case DephasingParam::tphi_12: return dec.tphi_12;
  }
  return 0.0;
}

namespace {

constexpr double kLogMin = -2.302585092994046;  // ln(0.1 ns)
constexpr double kLogMax = 11.512925464970229;  // ln(1e5 ns)

class Objective {
 public:
  Objective(std::span<const double> t0s, std::span<const double> observed, const SimulationContext& ctx,
            const std::vector<DephasingParam>& free)
      : t0s_(t0s), observed_(observed), ctx_(ctx), free_(free) {}

  std::size_t dims() const { return free_.size(); }

  /// Model trace at log-parameters theta; throws on simulator failure.
  std::vector<double> model(const Eigen::VectorXd& theta) const {
    SimulationContext local = ctx_;
    for (std::size_t i = 0; i < free_.size(); ++i) {
      set_param(local.decoherence, free_[i], std::exp(theta(static_cast<Eigen::Index>(i))));
    }
    return p2_vs_duration(local, t0s_);
  }

  double rss(const std::vector<double>& m) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) sum += (m[i] - observed_[i]) * (m[i] - observed_[i]);
    return sum;
  }

  /// Residual sum of squares, or +inf with the failure recorded.
  double operator()(const Eigen::VectorXd& theta, std::string* failure) const {
    try {
      return rss(model(theta));
    } catch (const std::exception& e) {
      if (failure) {
        std::ostringstream msg;
        msg << "candidate (";
        for (Eigen::Index i = 0; i < theta.size(); ++i) msg << (i ? ", " : "") << std::exp(theta(i));
        msg << ") ns rejected: " << e.what();
        *failure = msg.str();
      }
      return std::numeric_limits<double>::infinity();
    }
  }

 private:
  std::span<const double> t0s_;
  std::span<const double> observed_;
  const SimulationContext& ctx_;
  const std::vector<DephasingParam>& free_;
};

Eigen::VectorXd clamp_log(Eigen::VectorXd theta) {
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = std::clamp(theta(i), kLogMin, kLogMax);
  return theta;
}

}  // namespace

FitReport fit_dephasing(std::span<const double> t0_values, std::span<const double> observed_p2,
                        const SimulationContext& ctx, const std::vector<DephasingParam>& free, const FitOptions& opt) {
  if (free.empty()) throw ParameterError("fit needs at least one free parameter");
  if (std::set<DephasingParam>(free.begin(), free.end()).size() != free.size()) {
    throw ParameterError("fit parameters must be distinct");
  }
  if (t0_values.size() != observed_p2.size()) throw ParameterError("time and P2 columns differ in length");
  if (t0_values.size() < 10) throw ParameterError("fit needs at least 10 observed time points");
  if (!(opt.grid_lo_ns > 0.0) || !(opt.grid_lo_ns < opt.grid_hi_ns)) throw ParameterError("invalid fit grid range");

  const Objective objective(t0_values, observed_p2, ctx, free);
  const auto dims = static_cast<Eigen::Index>(free.size());
  FitReport report;

  // Coarse log-spaced grid over every free parameter.
  int per_axis = opt.grid_points;
  if (per_axis <= 0) per_axis = dims == 1 ? 16 : dims == 2 ? 8 : 6;
  if (per_axis < 2) throw ParameterError("fit grid needs at least 2 points per parameter");
  const double log_lo = std::log(opt.grid_lo_ns);
  const double log_hi = std::log(opt.grid_hi_ns);
  const double log_step = (log_hi - log_lo) / (per_axis - 1);
  std::size_t n_grid = 1;
  for (Eigen::Index d = 0; d < dims; ++d) n_grid *= static_cast<std::size_t>(per_axis);

  std::vector<Eigen::VectorXd> candidates(n_grid, Eigen::VectorXd(dims));
  for (std::size_t g = 0; g < n_grid; ++g) {
    std::size_t rest = g;
    for (Eigen::Index d = 0; d < dims; ++d) {
      candidates[g](d) = log_lo + log_step * static_cast<double>(rest % static_cast<std::size_t>(per_axis));
      rest /= static_cast<std::size_t>(per_axis);
    }
  }
  std::vector<double> grid_rss(n_grid);
  std::vector<std::string> grid_fail(n_grid);
  detail::parallel_for(n_grid, opt.jobs, [&](std::size_t g) { grid_rss[g] = objective(candidates[g], &grid_fail[g]); });
  report.evaluations += static_cast<int>(n_grid);
  for (const auto& f : grid_fail) {
    if (!f.empty()) {
      ++report.rejected_candidates;
      report.rejections.push_back(f);
    }
  }
  const auto best_grid = static_cast<std::size_t>(
      std::distance(grid_rss.begin(), std::min_element(grid_rss.begin(), grid_rss.end())));
  if (!std::isfinite(grid_rss[best_grid])) throw FitError("every grid candidate was rejected by the simulator");

  // Nelder-Mead in log-parameters, seeded at the best grid point.
  auto evaluate = [&](const Eigen::VectorXd& theta) {
    std::string failure;
    const double f = objective(theta, &failure);
    ++report.evaluations;
    if (!failure.empty()) {
      ++report.rejected_candidates;
      report.rejections.push_back(failure);
    }
    return f;
  };

  const auto n_vertices = static_cast<std::size_t>(dims + 1);
  std::vector<Eigen::VectorXd> simplex(n_vertices, candidates[best_grid]);
  std::vector<double> values(n_vertices, grid_rss[best_grid]);
  for (Eigen::Index d = 0; d < dims; ++d) {
    auto& v = simplex[static_cast<std::size_t>(d + 1)];
    v(d) += 0.5 * log_step;
    v = clamp_log(v);
    values[static_cast<std::size_t>(d + 1)] = evaluate(v);
  }

  std::vector<std::size_t> order(n_vertices);
  auto sort_simplex = [&]() {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<Eigen::VectorXd> s2;
    std::vector<double> v2;
    for (std::size_t i : order) {
      s2.push_back(simplex[i]);
      v2.push_back(values[i]);
    }
    simplex = std::move(s2);
    values = std::move(v2);
  };

  sort_simplex();
  report.rss_history.push_back(values.front());
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    double size = 0.0;
    for (std::size_t i = 1; i < n_vertices; ++i) size = std::max(size, (simplex[i] - simplex[0]).cwiseAbs().maxCoeff());
    if (size < opt.x_tolerance || std::abs(values.back() - values.front()) <= opt.f_tolerance) {
      report.converged = true;
      break;
    }
    ++report.iterations;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dims);
    for (std::size_t i = 0; i + 1 < n_vertices; ++i) centroid += simplex[i];
    centroid /= static_cast<double>(n_vertices - 1);
    const Eigen::VectorXd& worst = simplex.back();

    const Eigen::VectorXd reflected = clamp_log(centroid + (centroid - worst));
    const double f_reflected = evaluate(reflected);
    if (f_reflected < values.front()) {
      const Eigen::VectorXd expanded = clamp_log(centroid + 2.0 * (centroid - worst));
      const double f_expanded = evaluate(expanded);
      if (f_expanded < f_reflected) {
        simplex.back() = expanded;
        values.back() = f_expanded;
      } else {
        simplex.back() = reflected;
        values.back() = f_reflected;
      }
    } else if (f_reflected < values[n_vertices - 2]) {
      simplex.back() = reflected;
      values.back() = f_reflected;
    } else {
      const bool outside = f_reflected < values.back();
      const Eigen::VectorXd contracted =
          outside ? clamp_log(centroid + 0.5 * (reflected - centroid)) : clamp_log(centroid + 0.5 * (worst - centroid));
      const double f_contracted = evaluate(contracted);
      if (f_contracted < std::min(f_reflected, values.back())) {
        simplex.back() = contracted;
        values.back() = f_contracted;
      } else {
        for (std::size_t i = 1; i < n_vertices; ++i) {
          simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
          values[i] = evaluate(simplex[i]);
        }
      }
    }
    sort_simplex();
    report.rss_history.push_back(values.front());
  }

  const Eigen::VectorXd best = simplex.front();
  report.rss = values.front();
  if (!std::isfinite(report.rss)) throw FitError("simplex ended on a rejected candidate");

  // Local quadratic approximation: cov(theta) = s^2 (J^T J)^-1 with J the
  // derivative of the model trace with respect to the log-parameters.
  const auto n_obs = static_cast<Eigen::Index>(t0_values.size());
  Eigen::MatrixXd jac(n_obs, dims);
  constexpr double kLogStep = 0.05;
  bool jac_ok = true;
  for (Eigen::Index d = 0; d < dims && jac_ok; ++d) {
    Eigen::VectorXd up = best, down = best;
    up(d) += kLogStep;
    down(d) -= kLogStep;
    try {
      const auto m_up = objective.model(up);
      const auto m_down = objective.model(down);
      report.evaluations += 2;
      for (Eigen::Index i = 0; i < n_obs; ++i) {
        jac(i, d) = (m_up[static_cast<std::size_t>(i)] - m_down[static_cast<std::size_t>(i)]) / (2.0 * kLogStep);
      }
    } catch (const std::exception&) {
      jac_ok = false;
    }
  }
  const double dof = static_cast<double>(std::max<Eigen::Index>(1, n_obs - dims));
  const double s2 = std::max(report.rss / dof, opt.noise_floor * opt.noise_floor);
  Eigen::VectorXd sigma_log = Eigen::VectorXd::Constant(dims, std::numeric_limits<double>::infinity());
  // ln-resolution of the single most sensitive readout at noise s.
  Eigen::VectorXd readout_log = sigma_log;
  if (jac_ok) {
    for (Eigen::Index d = 0; d < dims; ++d) {
      const double slope = jac.col(d).cwiseAbs().maxCoeff();
      if (slope > 0.0) readout_log(d) = std::sqrt(s2) / slope;
    }
    const Eigen::MatrixXd info = jac.transpose() * jac;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
    if (lu.isInvertible()) {
      const Eigen::MatrixXd cov = s2 * lu.inverse();
      for (Eigen::Index d = 0; d < dims; ++d) sigma_log(d) = std::sqrt(std::max(0.0, cov(d, d)));
    }
  }

  for (Eigen::Index d = 0; d < dims; ++d) {
    FitParameter p;
    p.name = param_name(free[static_cast<std::size_t>(d)]);
    p.value = std::exp(best(d));
    p.uncertainty = p.value * sigma_log(d);
    p.readout_resolution = readout_log(d);
    if (!(sigma_log(d) <= opt.flat_threshold) || !(readout_log(d) <= opt.flat_threshold)) {
      report.flat_residual = true;
    }
    report.parameters.push_back(p);
  }
  return report;
}

}  // namespace cpt
