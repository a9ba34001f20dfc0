#include "core/qmle.hpp"

#include "core/data_io.hpp"
#include "core/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace sgarch {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// g_t and, optionally, d g_t / d theta stored row-major (T x n).
void recurse(std::span<const double> u_sq, const GarchOrder& order, const Vector& theta,
             std::vector<double>& g, std::vector<double>* dg) {
  const std::size_t n_obs = u_sq.size();
  const int p = order.p;
  const int q = order.q;
  const int n = p + q;
  const double omega = 1.0 - theta.sum();
  g.assign(n_obs, 0.0);
  if (dg) dg->assign(n_obs * static_cast<std::size_t>(n), 0.0);

  for (std::size_t t = 0; t < n_obs; ++t) {
    const auto ti = static_cast<std::ptrdiff_t>(t);
    double gt = omega;
    for (int i = 1; i <= q; ++i) gt += theta(i - 1) * (ti - i >= 0 ? u_sq[t - i] : 1.0);
    for (int j = 1; j <= p; ++j) gt += theta(q + j - 1) * (ti - j >= 0 ? g[t - j] : 1.0);
    g[t] = gt;
    if (!dg) continue;
    double* row = dg->data() + t * static_cast<std::size_t>(n);
    for (int k = 0; k < n; ++k) {
      double d = -1.0;
      if (k < q) {
        const int i = k + 1;
        d += ti - i >= 0 ? u_sq[t - i] : 1.0;
      } else {
        const int j = k - q + 1;
        d += ti - j >= 0 ? g[t - j] : 1.0;
      }
      for (int l = 1; l <= p; ++l)
        if (ti - l >= 0) d += theta(q + l - 1) * (*dg)[(t - l) * static_cast<std::size_t>(n) + k];
      row[k] = d;
    }
  }
}

double likelihood(std::span<const double> u_sq, const GarchOrder& order, const Vector& theta,
                  Vector* gradient) {
  std::vector<double> g;
  std::vector<double> dg;
  recurse(u_sq, order, theta, g, gradient ? &dg : nullptr);
  const int n = order.num_params();
  double value = 0.0;
  if (gradient) gradient->setZero(n);
  for (std::size_t t = 0; t < g.size(); ++t) {
    const double gt = g[t];
    if (!(gt > 0.0) || !std::isfinite(gt)) return kInf;
    const double ratio = u_sq[t] / gt;
    value += ratio + std::log(gt);
    if (gradient) {
      const double factor = (1.0 - ratio) / gt;
      const double* row = dg.data() + t * static_cast<std::size_t>(n);
      for (int k = 0; k < n; ++k) (*gradient)(k) += factor * row[k];
    }
  }
  return value;
}

// Smooth bijection from R^k onto { theta_i > lower, sum theta_i < lower*k + budget }
// for the free coordinates; pinned coordinates keep their fixed values.
class InteriorMap {
 public:
  InteriorMap(Vector base, std::vector<int> free, double budget)
      : base_(std::move(base)), free_(std::move(free)), budget_(budget) {}

  int dim() const noexcept { return static_cast<int>(free_.size()); }

  Vector to_theta(const Vector& z, Vector* weights = nullptr) const {
    const double shift = std::max(0.0, z.size() ? z.maxCoeff() : 0.0);
    Vector e = (z.array() - shift).exp();
    const double total = std::exp(-shift) + e.sum();
    e /= total;
    Vector theta = base_;
    for (int i = 0; i < dim(); ++i) theta(free_[i]) = kThetaLowerBound + budget_ * e(i);
    if (weights) *weights = std::move(e);
    return theta;
  }

  Vector pullback(const Vector& weights, const Vector& grad_theta) const {
    Vector g(dim());
    for (int i = 0; i < dim(); ++i) g(i) = grad_theta(free_[i]);
    const double mean = weights.dot(g);
    return budget_ * weights.cwiseProduct(g.array().matrix() - Vector::Constant(dim(), mean));
  }

  Vector to_z(const Vector& theta) const {
    Vector s(dim());
    for (int i = 0; i < dim(); ++i)
      s(i) = std::max((theta(free_[i]) - kThetaLowerBound) / budget_, 1e-8);
    double slack = 1.0 - s.sum();
    if (slack < 1e-3) {
      s *= (1.0 - 1e-3) / s.sum();
      slack = 1e-3;
    }
    return (s.array() / slack).log().matrix();
  }

 private:
  Vector base_;
  std::vector<int> free_;
  double budget_;
};

std::vector<double> squared_acf(std::span<const double> x, int max_lag) {
  const std::size_t n = x.size();
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double denom = 0.0;
  for (double v : x) denom += (v - mean) * (v - mean);
  std::vector<double> rho(max_lag + 1, 0.0);
  if (!(denom > 0.0)) return rho;
  for (int k = 1; k <= max_lag; ++k) {
    double acc = 0.0;
    for (std::size_t t = k; t < n; ++t) acc += (x[t] - mean) * (x[t - k] - mean);
    rho[k] = acc / denom;
  }
  return rho;
}

// Crude method-of-moments start from the decay of the autocorrelation of u^2.
Vector moment_start(std::span<const double> u_sq, GarchOrder order) {
  const auto rho = squared_acf(u_sq, 2);
  Vector theta(order.num_params());
  if (order.p == 0) {
    const double total = std::clamp(1.5 * rho[1], 0.05, 0.8);
    theta.setConstant(total / order.q);
    return theta;
  }
  const double persistence =
      rho[1] > 0.02 ? std::clamp(rho[2] / rho[1], 0.5, 0.97) : 0.85;
  const double a = std::clamp(rho[1], 0.02, std::min(0.3, persistence - 0.05));
  const double b = std::clamp(persistence - a, 0.05, 0.95 - a);
  theta.head(order.q).setConstant(a / order.q);
  theta.tail(order.p).setConstant(b / order.p);
  return theta;
}

struct ThetaSolution {
  Vector theta;
  double value = kInf;
  bool converged = false;
  int iterations = 0;
  std::vector<double> history;
};

ThetaSolution minimize_interior(std::span<const double> u_sq, GarchOrder order,
                                const InteriorMap& map, const Vector& base_start,
                                const FitOptions& options) {
  const double n_obs = static_cast<double>(u_sq.size());
  BfgsOptions bfgs;
  bfgs.max_iterations = options.max_iterations;
  bfgs.gradient_tolerance = options.gradient_tolerance * n_obs;

  Objective objective = [&](const Vector& z, Vector* grad) {
    Vector weights;
    const Vector theta = map.to_theta(z, &weights);
    if (!grad) return likelihood(u_sq, order, theta, nullptr);
    Vector g_theta;
    const double value = likelihood(u_sq, order, theta, &g_theta);
    if (std::isfinite(value)) *grad = map.pullback(weights, g_theta);
    return value;
  };

  std::vector<Vector> starts;
  if (options.init) starts.push_back(map.to_z(*options.init));
  if (!options.init || options.multi_start) {
    starts.push_back(map.to_z(base_start));
    if (options.multi_start) {
      Vector mm = base_start;
      const Vector moments = moment_start(u_sq, order);
      for (int i = 0; i < mm.size(); ++i) mm(i) = moments(i);
      starts.push_back(map.to_z(mm));
      std::mt19937_64 rng(0x5eed + static_cast<unsigned>(order.p * 31 + order.q));
      std::normal_distribution<double> jitter(0.0, 0.5);
      Vector z = map.to_z(base_start);
      for (int i = 0; i < z.size(); ++i) z(i) += jitter(rng);
      starts.push_back(z);
    }
  }

  ThetaSolution best;
  for (const auto& z0 : starts) {
    BfgsResult r;
    try {
      r = minimize_bfgs(objective, z0, bfgs);
    } catch (const Error&) {
      continue;
    }
    if (r.value < best.value) {
      best.theta = map.to_theta(r.x);
      best.value = r.value;
      best.converged = r.converged;
      best.iterations = r.iterations;
      best.history = std::move(r.history);
    }
  }
  if (!std::isfinite(best.value))
    fail(ErrorKind::numerical, "likelihood is not finite at any starting point");
  return best;
}

FitResult assemble(const ReturnSeries& series, const LongRunFit& longrun, GarchOrder order,
                   ThetaSolution sol) {
  FitResult fit;
  fit.params = GarchParams(order, std::move(sol.theta));
  fit.filtered = filter_series(series.values, longrun.tau_hat, fit.params);
  fit.loglik = sol.value;
  fit.longrun = longrun;
  fit.converged = sol.converged;
  fit.iterations = sol.iterations;
  fit.history = std::move(sol.history);
  return fit;
}

void check_inputs(const ReturnSeries& series, const LongRunFit& longrun, GarchOrder order) {
  order.validate();
  require_estimable(series);
  if (longrun.tau_hat.size() != series.size())
    fail(ErrorKind::invalid_argument, "long-run fit length does not match the series");
}

}  // namespace

void GarchOrder::validate() const {
  if (p < 0 || q < 1 || p + q > 24)
    fail(ErrorKind::invalid_argument, "invalid GARCH order (p=" + std::to_string(p) +
                                          ", q=" + std::to_string(q) + "); need p >= 0, q >= 1");
}

GarchParams::GarchParams(GarchOrder order, Vector theta) : order_(order), theta_(std::move(theta)) {
  order_.validate();
  if (theta_.size() != order_.num_params())
    fail(ErrorKind::invalid_argument, "theta has " + std::to_string(theta_.size()) +
                                          " entries; order needs " +
                                          std::to_string(order_.num_params()));
  for (Eigen::Index i = 0; i < theta_.size(); ++i)
    if (!std::isfinite(theta_(i)) || theta_(i) < 0.0)
      fail(ErrorKind::invalid_argument, "GARCH coefficients must be finite and non-negative");
  if (omega() < kOmegaLowerBound * (1.0 - 1e-9))
    fail(ErrorKind::invalid_argument,
         "coefficients sum to " + std::to_string(theta_.sum()) + "; need sum <= 1 - 1e-6");
}

GarchPath garch_filter(std::span<const double> u_sq, const GarchParams& params,
                       bool with_derivatives) {
  for (double v : u_sq)
    if (!(v >= 0.0) || !std::isfinite(v))
      fail(ErrorKind::invalid_argument, "squared residuals must be finite and non-negative");
  GarchPath path;
  std::vector<double> dg;
  recurse(u_sq, params.order(), params.theta(), path.g, with_derivatives ? &dg : nullptr);
  if (with_derivatives) {
    const int n = params.order().num_params();
    path.dg = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        dg.data(), static_cast<Eigen::Index>(u_sq.size()), n);
  }
  return path;
}

double neg_loglik(std::span<const double> u_sq, const GarchParams& params) {
  return likelihood(u_sq, params.order(), params.theta(), nullptr);
}

double neg_loglik(std::span<const double> u_sq, const GarchParams& params, Vector& gradient) {
  return likelihood(u_sq, params.order(), params.theta(), &gradient);
}

std::vector<double> devolatilized_squares(std::span<const double> y, std::span<const double> tau) {
  if (y.size() != tau.size()) fail(ErrorKind::invalid_argument, "series and tau lengths differ");
  std::vector<double> u_sq(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (!(tau[t] > 0.0))
      fail(ErrorKind::numerical, "non-positive long-run variance at index " + std::to_string(t));
    u_sq[t] = y[t] * y[t] / tau[t];
  }
  return u_sq;
}

double neg_loglik(const ReturnSeries& series, const LongRunFit& longrun, const GarchParams& params) {
  const auto u_sq = devolatilized_squares(series.values, longrun.tau_hat);
  return neg_loglik(u_sq, params);
}

FilteredSeries filter_series(std::span<const double> y, std::span<const double> tau,
                             const GarchParams& params) {
  const auto u_sq = devolatilized_squares(y, tau);
  auto path = garch_filter(u_sq, params, true);
  FilteredSeries out;
  const std::size_t n = y.size();
  out.u_hat.resize(n);
  out.eta_hat.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    out.u_hat[t] = y[t] / std::sqrt(tau[t]);
    out.eta_hat[t] = out.u_hat[t] / std::sqrt(path.g[t]);
  }
  out.psi_hat = std::move(path.dg);
  for (std::size_t t = 0; t < n; ++t) out.psi_hat.row(static_cast<Eigen::Index>(t)) /= path.g[t];
  out.g_hat = std::move(path.g);
  return out;
}

Vector default_start(GarchOrder order) {
  order.validate();
  Vector theta(order.num_params());
  if (order.p > 0) {
    theta.head(order.q).setConstant(0.05 / order.q);
    theta.tail(order.p).setConstant(0.85 / order.p);
  } else {
    theta.setConstant(0.1 / order.q);
  }
  return theta;
}

FitResult fit_qmle(const ReturnSeries& series, const LongRunFit& longrun, GarchOrder order,
                   const FitOptions& options) {
  check_inputs(series, longrun, order);
  const int n = order.num_params();
  if (options.init && options.init->size() != n)
    fail(ErrorKind::invalid_argument, "initial theta has the wrong length");
  const auto u_sq = devolatilized_squares(series.values, longrun.tau_hat);
  std::vector<int> free(n);
  std::iota(free.begin(), free.end(), 0);
  const InteriorMap map(Vector::Zero(n), free, 1.0 - kOmegaLowerBound - n * kThetaLowerBound);
  auto sol = minimize_interior(u_sq, order, map, default_start(order), options);
  return assemble(series, longrun, order, std::move(sol));
}

LinearConstraint::LinearConstraint(Matrix R, Vector r) : R_(std::move(R)), r_(std::move(r)) {
  if (R_.rows() < 1 || R_.cols() < 1)
    fail(ErrorKind::invalid_argument, "constraint matrix must be non-empty");
  if (R_.rows() != r_.size())
    fail(ErrorKind::invalid_argument, "constraint R has " + std::to_string(R_.rows()) +
                                          " rows but r has " + std::to_string(r_.size()));
  if (R_.rows() > R_.cols())
    fail(ErrorKind::invalid_argument, "constraint has more rows than parameters");
  if (!R_.allFinite() || !r_.allFinite())
    fail(ErrorKind::invalid_argument, "constraint entries must be finite");
  Eigen::JacobiSVD<Matrix> svd(R_);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 1e-10 * sv(0)))
    fail(ErrorKind::invalid_argument, "constraint matrix R is rank deficient");
}

LinearConstraint LinearConstraint::pin(int num_params, int index, double value) {
  Matrix R = Matrix::Zero(1, num_params);
  R(0, index) = 1.0;
  return LinearConstraint(std::move(R), Vector::Constant(1, value));
}

FitResult fit_qmle_constrained(const ReturnSeries& series, const LongRunFit& longrun,
                               GarchOrder order, const LinearConstraint& constraint,
                               const FitOptions& options) {
  check_inputs(series, longrun, order);
  const int n = order.num_params();
  const Matrix& R = constraint.R();
  if (R.cols() != n)
    fail(ErrorKind::invalid_argument, "constraint has " + std::to_string(R.cols()) +
                                          " columns; order has " + std::to_string(n) +
                                          " parameters");
  const int d = constraint.rank();

  Eigen::JacobiSVD<Matrix> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector particular = svd.solve(constraint.r());
  const Matrix null_basis = svd.matrixV().rightCols(n - d);

  std::vector<int> pinned;
  std::vector<int> free;
  for (int i = 0; i < n; ++i)
    (null_basis.row(i).norm() <= 1e-10 ? pinned : free).push_back(i);

  Vector base = Vector::Zero(n);
  double pinned_sum = 0.0;
  for (int i : pinned) {
    double v = particular(i);
    if (std::abs(v) < 1e-14) v = 0.0;
    if (v < 0.0)
      fail(ErrorKind::invalid_argument, "constraint pins coefficient " + std::to_string(i) +
                                            " to a negative value; feasible set is empty");
    base(i) = v;
    pinned_sum += v;
  }
  if (pinned_sum > 1.0 - kOmegaLowerBound)
    fail(ErrorKind::invalid_argument, "pinned coefficients violate stationarity; feasible set is empty");

  const auto u_sq = devolatilized_squares(series.values, longrun.tau_hat);

  if (free.empty()) {
    ThetaSolution sol;
    sol.theta = base;
    sol.value = likelihood(u_sq, order, base, nullptr);
    sol.converged = true;
    sol.history = {sol.value};
    return assemble(series, longrun, order, std::move(sol));
  }

  if (static_cast<int>(pinned.size()) == d) {
    // Constraint only fixes coordinates: optimize the remaining ones with the
    // same interior map as the unconstrained fit.
    const double budget =
        1.0 - kOmegaLowerBound - pinned_sum - static_cast<double>(free.size()) * kThetaLowerBound;
    if (!(budget > 0.0))
      fail(ErrorKind::invalid_argument, "no interior room left for the free coefficients");
    Vector start = default_start(order);
    for (int i : pinned) start(i) = base(i);
    double free_sum = 0.0;
    for (int i : free) free_sum += start(i);
    if (free_sum >= 0.95 * budget)
      for (int i : free) start(i) *= 0.9 * budget / free_sum;
    const InteriorMap map(base, free, budget);
    FitOptions opts = options;
    if (opts.init) {
      if (opts.init->size() != n) fail(ErrorKind::invalid_argument, "initial theta has the wrong length");
    }
    auto sol = minimize_interior(u_sq, order, map, start, opts);
    for (int i : pinned) sol.theta(i) = base(i);
    return assemble(series, longrun, order, std::move(sol));
  }

  // General affine constraint: theta = particular + N w, with the region
  // enforced by an infinite barrier.
  auto theta_of = [&](const Vector& w) { return Vector(particular + null_basis * w); };
  auto feasible = [&](const Vector& theta) {
    return (theta.array() >= -1e-12).all() && 1.0 - theta.sum() >= kOmegaLowerBound;
  };

  Vector w0 = null_basis.transpose() * (default_start(order) - particular);
  if (options.init) w0 = null_basis.transpose() * (*options.init - particular);
  if (!feasible(theta_of(w0))) {
    constexpr double margin = 1e-4;
    Objective penalty = [&](const Vector& w, Vector* grad) {
      const Vector theta = theta_of(w);
      Vector g_theta = Vector::Zero(n);
      double value = 0.0;
      for (int i : free) {
        const double gap = margin - theta(i);
        if (gap > 0.0) {
          value += gap * gap;
          g_theta(i) -= 2.0 * gap;
        }
      }
      const double excess = theta.sum() - (1.0 - kOmegaLowerBound - margin);
      if (excess > 0.0) {
        value += excess * excess;
        g_theta.array() += 2.0 * excess;
      }
      if (grad) *grad = null_basis.transpose() * g_theta;
      return value;
    };
    BfgsOptions phase1;
    phase1.gradient_tolerance = 1e-14;
    const auto r = minimize_bfgs(penalty, w0, phase1);
    w0 = r.x;
    if (!feasible(theta_of(w0)))
      fail(ErrorKind::invalid_argument, "constraint R theta = r has no feasible point in the parameter region");
  }

  Objective objective = [&](const Vector& w, Vector* grad) {
    const Vector theta = theta_of(w);
    if (!feasible(theta)) return kInf;
    Vector clipped = theta.cwiseMax(0.0);
    if (!grad) return likelihood(u_sq, order, clipped, nullptr);
    Vector g_theta;
    const double value = likelihood(u_sq, order, clipped, &g_theta);
    if (std::isfinite(value)) *grad = null_basis.transpose() * g_theta;
    return value;
  };
  BfgsOptions bfgs;
  bfgs.max_iterations = options.max_iterations;
  bfgs.gradient_tolerance = options.gradient_tolerance * static_cast<double>(u_sq.size());
  const auto r = minimize_bfgs(objective, w0, bfgs);
  ThetaSolution sol;
  sol.theta = theta_of(r.x).cwiseMax(0.0);
  for (int i : pinned) sol.theta(i) = base(i);
  sol.value = r.value;
  sol.converged = r.converged;
  sol.iterations = r.iterations;
  sol.history = r.history;
  return assemble(series, longrun, order, std::move(sol));
}

ArchFit fit_free_arch(std::span<const double> y, int q, const ArchFit* warm_start) {
  if (q < 1) fail(ErrorKind::invalid_argument, "ARCH order must be at least 1");
  const std::size_t n = y.size();
  if (n <= static_cast<std::size_t>(q) + 1)
    fail(ErrorKind::invalid_argument, "window too short for ARCH(" + std::to_string(q) + ")");
  std::vector<double> y_sq(n);
  for (std::size_t t = 0; t < n; ++t) y_sq[t] = y[t] * y[t];
  const double scale =
      std::max(std::accumulate(y_sq.begin(), y_sq.end(), 0.0) / static_cast<double>(n), 1e-12);

  std::vector<int> free(q);
  std::iota(free.begin(), free.end(), 0);
  const InteriorMap alpha_map(Vector::Zero(q), free, 1.0 - 1e-6 - q * 1e-8);

  // z = (log(c / scale), interior coordinates of alpha)
  Objective objective = [&](const Vector& z, Vector* grad) {
    const double c = scale * std::exp(z(0));
    Vector weights;
    const Vector alpha = alpha_map.to_theta(z.tail(q), &weights);
    double value = 0.0;
    double dc = 0.0;
    Vector da = Vector::Zero(q);
    for (std::size_t t = 0; t < n; ++t) {
      const auto ti = static_cast<std::ptrdiff_t>(t);
      double h = c;
      for (int i = 1; i <= q; ++i) h += alpha(i - 1) * (ti - i >= 0 ? y_sq[t - i] : scale);
      if (!(h > 0.0) || !std::isfinite(h)) return kInf;
      value += y_sq[t] / h + std::log(h);
      if (grad) {
        const double f = (1.0 - y_sq[t] / h) / h;
        dc += f;
        for (int i = 1; i <= q; ++i) da(i - 1) += f * (ti - i >= 0 ? y_sq[t - i] : scale);
      }
    }
    if (grad) {
      grad->resize(q + 1);
      (*grad)(0) = dc * c;
      grad->tail(q) = alpha_map.pullback(weights, da);
    }
    return value;
  };

  Vector z0(q + 1);
  if (warm_start && warm_start->alpha.size() == q && warm_start->intercept > 0.0) {
    z0(0) = std::log(warm_start->intercept / scale);
    z0.tail(q) = alpha_map.to_z(warm_start->alpha);
  } else {
    z0(0) = std::log(0.7);
    z0.tail(q) = alpha_map.to_z(Vector::Constant(q, 0.3 / q));
  }
  BfgsOptions options;
  options.max_iterations = 300;
  options.gradient_tolerance = 1e-7 * static_cast<double>(n);
  const auto r = minimize_bfgs(objective, z0, options);

  ArchFit fit;
  fit.intercept = scale * std::exp(r.x(0));
  fit.alpha = alpha_map.to_theta(r.x.tail(q));
  fit.objective = r.value;
  fit.converged = r.converged;
  return fit;
}

}  // namespace sgarch
