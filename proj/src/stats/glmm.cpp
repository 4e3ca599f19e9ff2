#include "novelty/stats/glmm.hpp"

#include <cmath>
#include <limits>

#include "novelty/util/error.hpp"

namespace novelty::stats {

namespace {

double log1p_exp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

}  // namespace

double wald_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

double FixedEffect::odds_ratio() const { return std::exp(estimate); }

Eigen::VectorXd ModelFit::beta() const {
  VectorXd b(static_cast<Index>(fixed.size()));
  for (std::size_t j = 0; j < fixed.size(); ++j) b[static_cast<Index>(j)] = fixed[j].estimate;
  return b;
}

int ModelFit::index_of(const std::string& name) const {
  for (std::size_t j = 0; j < fixed.size(); ++j) {
    if (fixed[j].name == name) return static_cast<int>(j);
  }
  return -1;
}

const FixedEffect& ModelFit::coefficient(const std::string& name) const {
  const int j = index_of(name);
  if (j < 0) fail(ErrorCode::kNotFound, "no coefficient named '" + name + "'", "coefficient");
  return fixed[static_cast<std::size_t>(j)];
}

LaplaceObjective::LaplaceObjective(const Design& design, std::vector<double> prior_precision)
    : d_(design), n_(design.n()), p_(design.p()), k_(design.groups.size()), q_(0), prior_(std::move(prior_precision)) {
  for (const auto& g : d_.groups) {
    offset_.push_back(q_);
    q_ += g.levels.size();
  }
  prior_.resize(p_, 0.0);
  v_ = VectorXd::Zero(static_cast<Index>(q_));
}

double LaplaceObjective::value(const Eigen::VectorXd& theta) { return evaluate(theta, nullptr); }

double LaplaceObjective::value_and_gradient(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
  return evaluate(theta, &grad);
}

void LaplaceObjective::solve_modes(const Eigen::VectorXd& theta) {
  const VectorXd beta = theta.head(static_cast<Index>(p_));
  const VectorXd xb = d_.X * beta;
  auto sigma = [&](std::size_t k) { return theta[static_cast<Index>(p_ + k)]; };
  auto col = [&](std::size_t k, std::size_t i) { return static_cast<Index>(offset_[k] + static_cast<std::size_t>(d_.groups[k].index[i])); };

  auto objective = [&](const VectorXd& v) {
    double g = -0.5 * v.squaredNorm();
    for (std::size_t i = 0; i < n_; ++i) {
      double e = xb[static_cast<Index>(i)];
      for (std::size_t k = 0; k < k_; ++k) e += sigma(k) * v[col(k, i)];
      g += d_.y[static_cast<Index>(i)] * e - log1p_exp(e);
    }
    return g;
  };

  VectorXd grad(static_cast<Index>(q_));
  MatrixXd H(static_cast<Index>(q_), static_cast<Index>(q_));
  double current = objective(v_);
  for (int it = 0; it < 200; ++it) {
    grad = -v_;
    H.setIdentity();
    for (std::size_t i = 0; i < n_; ++i) {
      double e = xb[static_cast<Index>(i)];
      for (std::size_t k = 0; k < k_; ++k) e += sigma(k) * v_[col(k, i)];
      const double m = sigmoid(e);
      const double w = m * (1.0 - m);
      const double r = d_.y[static_cast<Index>(i)] - m;
      for (std::size_t k = 0; k < k_; ++k) {
        grad[col(k, i)] += sigma(k) * r;
        for (std::size_t k2 = 0; k2 < k_; ++k2) H(col(k, i), col(k2, i)) += sigma(k) * sigma(k2) * w;
      }
    }
    const VectorXd step = H.llt().solve(grad);
    double t = 1.0;
    VectorXd next = v_ + step;
    double value = objective(next);
    for (int halve = 0; halve < 50 && value < current; ++halve) {
      t *= 0.5;
      next = v_ + t * step;
      value = objective(next);
    }
    if (value < current) break;
    v_ = next;
    current = value;
    if (step.lpNorm<Eigen::Infinity>() * t < 1e-13 * (1.0 + v_.lpNorm<Eigen::Infinity>())) break;
  }
}

double LaplaceObjective::evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
  if (static_cast<std::size_t>(theta.size()) != dimension()) {
    fail(ErrorCode::kInternal, "parameter vector has the wrong dimension");
  }
  if (k_ > 0) solve_modes(theta);
  const VectorXd beta = theta.head(static_cast<Index>(p_));
  auto sigma = [&](std::size_t k) { return theta[static_cast<Index>(p_ + k)]; };
  auto col = [&](std::size_t k, std::size_t i) { return static_cast<Index>(offset_[k] + static_cast<std::size_t>(d_.groups[k].index[i])); };

  eta_ = d_.X * beta;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t k = 0; k < k_; ++k) eta_[static_cast<Index>(i)] += sigma(k) * v_[col(k, i)];
  }
  mu_.resize(static_cast<Index>(n_));
  w_.resize(static_cast<Index>(n_));
  double ll = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const auto ii = static_cast<Index>(i);
    mu_[ii] = sigmoid(eta_[ii]);
    w_[ii] = mu_[ii] * (1.0 - mu_[ii]);
    ll += d_.y[ii] * eta_[ii] - log1p_exp(eta_[ii]);
  }
  for (std::size_t j = 0; j < p_; ++j) ll -= 0.5 * prior_[j] * beta[static_cast<Index>(j)] * beta[static_cast<Index>(j)];

  MatrixXd Hinv;
  Eigen::LLT<MatrixXd> llt;
  if (k_ > 0) {
    MatrixXd H = MatrixXd::Identity(static_cast<Index>(q_), static_cast<Index>(q_));
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t k = 0; k < k_; ++k) {
        for (std::size_t k2 = 0; k2 < k_; ++k2) H(col(k, i), col(k2, i)) += sigma(k) * sigma(k2) * w_[static_cast<Index>(i)];
      }
    }
    llt.compute(H);
    double logdet = 0.0;
    const MatrixXd& L = llt.matrixLLT();
    for (Index c = 0; c < L.rows(); ++c) logdet += 2.0 * std::log(L(c, c));
    ll += -0.5 * v_.squaredNorm() - 0.5 * logdet;
    if (grad) Hinv = llt.solve(MatrixXd::Identity(static_cast<Index>(q_), static_cast<Index>(q_)));
  }
  if (!grad) return ll;

  grad->resize(static_cast<Index>(dimension()));
  const VectorXd r = d_.y - mu_;
  VectorXd h = VectorXd::Zero(static_cast<Index>(n_));
  for (std::size_t i = 0; i < n_ && k_ > 0; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < k_; ++k) {
      for (std::size_t k2 = 0; k2 < k_; ++k2) s += sigma(k) * sigma(k2) * Hinv(col(k, i), col(k2, i));
    }
    h[static_cast<Index>(i)] = s;
  }

  VectorXd e(static_cast<Index>(n_));
  VectorXd rhs(static_cast<Index>(q_));
  for (std::size_t j = 0; j < dimension(); ++j) {
    const bool is_sigma = j >= p_;
    const std::size_t kg = is_sigma ? j - p_ : 0;
    if (!is_sigma) {
      e = d_.X.col(static_cast<Index>(j));
    } else {
      for (std::size_t i = 0; i < n_; ++i) e[static_cast<Index>(i)] = v_[col(kg, i)];
    }
    double g = r.dot(e);
    if (!is_sigma) g -= prior_[j] * beta[static_cast<Index>(j)];
    if (k_ > 0) {
      rhs.setZero();
      for (std::size_t i = 0; i < n_; ++i) {
        const auto ii = static_cast<Index>(i);
        const double we = w_[ii] * e[ii];
        for (std::size_t k = 0; k < k_; ++k) rhs[col(k, i)] -= sigma(k) * we;
        if (is_sigma) rhs[col(kg, i)] += r[ii];
      }
      const VectorXd dv = llt.solve(rhs);
      double trace = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const auto ii = static_cast<Index>(i);
        double deta = e[ii];
        for (std::size_t k = 0; k < k_; ++k) deta += sigma(k) * dv[col(k, i)];
        trace += w_[ii] * (1.0 - 2.0 * mu_[ii]) * deta * h[ii];
        if (is_sigma) {
          double s = 0.0;
          for (std::size_t k = 0; k < k_; ++k) s += sigma(k) * Hinv(col(k, i), col(kg, i));
          trace += 2.0 * w_[ii] * s;
        }
      }
      g -= 0.5 * trace;
    }
    (*grad)[static_cast<Index>(j)] = g;
  }
  return ll;
}

Eigen::VectorXd irls_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int max_iter,
                              const std::vector<double>& prior_precision) {
  const Index p = X.cols();
  VectorXd beta = VectorXd::Zero(p);
  VectorXd prior = VectorXd::Zero(p);
  for (Index j = 0; j < p && static_cast<std::size_t>(j) < prior_precision.size(); ++j) prior[j] = prior_precision[static_cast<std::size_t>(j)];
  for (int it = 0; it < max_iter; ++it) {
    const VectorXd eta = X * beta;
    VectorXd mu(eta.size());
    VectorXd w(eta.size());
    for (Index i = 0; i < eta.size(); ++i) {
      mu[i] = sigmoid(eta[i]);
      w[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-12);
    }
    MatrixXd info = X.transpose() * w.asDiagonal() * X;
    info.diagonal() += prior;
    const VectorXd score = X.transpose() * (y - mu) - prior.cwiseProduct(beta);
    const VectorXd step = info.ldlt().solve(score);
    beta += step;
    if (!beta.allFinite() || beta.lpNorm<Eigen::Infinity>() > 30.0) {
      beta -= step;
      break;
    }
    if (step.lpNorm<Eigen::Infinity>() < 1e-12 * (1.0 + beta.lpNorm<Eigen::Infinity>())) break;
  }
  return beta;
}

namespace {

MatrixXd numeric_hessian(LaplaceObjective& obj, const VectorXd& theta) {
  const Index m = theta.size();
  MatrixXd hess(m, m);
  VectorXd gp;
  VectorXd gm;
  for (Index j = 0; j < m; ++j) {
    const double step = 1e-5 * std::max(1.0, std::abs(theta[j]));
    VectorXd t = theta;
    t[j] += step;
    obj.value_and_gradient(t, gp);
    t[j] = theta[j] - step;
    obj.value_and_gradient(t, gm);
    hess.col(j) = (gp - gm) / (2.0 * step);
  }
  return 0.5 * (hess + hess.transpose());
}

struct Optimum {
  VectorXd theta;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

Optimum maximize(LaplaceObjective& obj, VectorXd theta, const FitOptions& options) {
  Optimum out;
  VectorXd grad;
  double f = obj.value_and_gradient(theta, grad);
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (grad.norm() < options.gradient_tolerance) {
      out.converged = true;
      break;
    }
    const MatrixXd neg = -numeric_hessian(obj, theta);
    VectorXd dir;
    double lambda = 0.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
      MatrixXd m = neg;
      m.diagonal().array() += lambda;
      Eigen::LLT<MatrixXd> llt(m);
      if (llt.info() == Eigen::Success) {
        dir = llt.solve(grad);
        if (dir.allFinite()) break;
      }
      lambda = lambda == 0.0 ? 1e-6 * std::max(1.0, neg.diagonal().cwiseAbs().maxCoeff()) : lambda * 10.0;
    }
    if (dir.size() == 0) break;
    double t = 1.0;
    bool accepted = false;
    VectorXd trial;
    double ft = 0.0;
    const double slack = 1e-13 * std::max(1.0, std::abs(f));
    for (int halve = 0; halve < 40; ++halve) {
      trial = theta + t * dir;
      ft = obj.value(trial);
      if (std::isfinite(ft) && ft >= f - slack) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    theta = trial;
    f = obj.value_and_gradient(theta, grad);
  }
  if (!out.converged && grad.norm() < options.gradient_tolerance) out.converged = true;
  out.theta = theta;
  out.value = f;
  out.grad_norm = grad.norm();
  out.iterations = it;
  return out;
}

}  // namespace

ModelFit fit_glmm(const Design& input, const FitOptions& options) {
  Design stripped;
  const Design* dp = &input;
  if (options.fixed_only && !input.groups.empty()) {
    stripped = input;
    stripped.groups.clear();
    dp = &stripped;
  }
  const Design& d = *dp;
  const std::size_t n = d.n();
  const std::size_t p = d.p();
  const std::size_t k = d.groups.size();
  if (n == 0) fail(ErrorCode::kValidation, "no observations", "data");
  if (p + k == 0) fail(ErrorCode::kValidation, "model has no parameters", "formula");
  const double ysum = d.y.sum();
  if (ysum == 0.0 || ysum == static_cast<double>(n)) {
    fail(ErrorCode::kValidation, "all outcomes are identical", "response");
  }

  ModelFit fit;
  fit.n_obs = n;
  fit.reference = d.reference;
  fit.factor_levels = d.factor_levels;
  fit.warnings = d.warnings;

  std::vector<double> prior(p, 0.0);
  const int intercept = d.column_index("(Intercept)");
  Optimum opt;
  for (int pass = 0; pass < 2; ++pass) {
    LaplaceObjective obj(d, prior);
    VectorXd theta(static_cast<Index>(p + k));
    theta.head(static_cast<Index>(p)) = irls_logistic(d.X, d.y, 100, prior);
    for (std::size_t g = 0; g < k; ++g) theta[static_cast<Index>(p + g)] = options.initial_sd;
    opt = maximize(obj, theta, options);
    bool separated = false;
    for (std::size_t j = 0; j < p; ++j) {
      if (static_cast<int>(j) != intercept && std::abs(opt.theta[static_cast<Index>(j)]) > options.separation_threshold) {
        separated = true;
      }
    }
    if (!separated || pass == 1) break;
    fit.warnings.push_back("separation detected (|beta| > " + std::to_string(options.separation_threshold) +
                           "); refit with normal(0, " + std::to_string(options.penalty_sd) +
                           ") prior on non-intercept coefficients");
    fit.penalized = true;
    for (std::size_t j = 0; j < p; ++j) {
      if (static_cast<int>(j) != intercept) prior[j] = 1.0 / (options.penalty_sd * options.penalty_sd);
    }
  }

  LaplaceObjective obj(d, prior);
  VectorXd grad;
  double ll = obj.value_and_gradient(opt.theta, grad);
  const VectorXd modes = obj.modes();
  for (std::size_t j = 0; j < p; ++j) {
    ll += 0.5 * prior[j] * opt.theta[static_cast<Index>(j)] * opt.theta[static_cast<Index>(j)];
  }
  fit.log_likelihood = ll;
  fit.aic = -2.0 * ll + 2.0 * static_cast<double>(p + k);
  fit.converged = opt.converged;
  fit.iterations = opt.iterations;
  fit.gradient_norm = opt.grad_norm;
  if (!fit.converged) {
    fit.warnings.push_back("did not converge: gradient norm " + std::to_string(opt.grad_norm) + " after " +
                           std::to_string(opt.iterations) + " iterations");
  }

  std::vector<Index> kept;
  for (std::size_t j = 0; j < p; ++j) kept.push_back(static_cast<Index>(j));
  std::size_t offset = 0;
  for (std::size_t g = 0; g < k; ++g) {
    GroupEstimate ge;
    ge.name = d.groups[g].name;
    ge.n_levels = d.groups[g].levels.size();
    const double s = opt.theta[static_cast<Index>(p + g)];
    ge.sd = std::abs(s);
    ge.boundary = ge.sd < options.boundary_sd;
    if (ge.boundary) {
      fit.warnings.push_back("boundary fit: sd of " + ge.name + " is effectively 0");
    } else {
      kept.push_back(static_cast<Index>(p + g));
    }
    ge.levels = d.groups[g].levels;
    for (std::size_t l = 0; l < ge.n_levels; ++l) ge.modes.push_back(s * modes[static_cast<Index>(offset + l)]);
    offset += ge.n_levels;
    fit.groups.push_back(std::move(ge));
  }

  const MatrixXd neg = -numeric_hessian(obj, opt.theta);
  MatrixXd sub(static_cast<Index>(kept.size()), static_cast<Index>(kept.size()));
  for (std::size_t a = 0; a < kept.size(); ++a) {
    for (std::size_t b = 0; b < kept.size(); ++b) sub(static_cast<Index>(a), static_cast<Index>(b)) = neg(kept[a], kept[b]);
  }
  Eigen::LLT<MatrixXd> llt(sub);
  fit.vcov = MatrixXd::Constant(static_cast<Index>(p), static_cast<Index>(p), std::numeric_limits<double>::quiet_NaN());
  if (llt.info() == Eigen::Success) {
    const MatrixXd inv = llt.solve(MatrixXd::Identity(sub.rows(), sub.cols()));
    fit.vcov = inv.topLeftCorner(static_cast<Index>(p), static_cast<Index>(p));
  } else {
    fit.warnings.push_back("information matrix is not positive definite; standard errors unavailable");
  }

  for (std::size_t j = 0; j < p; ++j) {
    FixedEffect fe;
    fe.name = d.column_names[j];
    fe.estimate = opt.theta[static_cast<Index>(j)];
    fe.se = std::sqrt(fit.vcov(static_cast<Index>(j), static_cast<Index>(j)));
    fe.z = fe.estimate / fe.se;
    fe.p = std::isfinite(fe.z) ? wald_p(fe.z) : std::numeric_limits<double>::quiet_NaN();
    fit.fixed.push_back(fe);
  }
  return fit;
}

ModelFit fit_glmm(const ObservationTable& table, const std::string& formula, const FitOptions& options,
                  const DesignOptions& design_options) {
  const auto f = Formula::parse(formula);
  auto fit = fit_glmm(build_design(table, f, design_options), options);
  fit.formula = formula;
  return fit;
}

double predict_probability(const ModelFit& fit, const Eigen::VectorXd& x) {
  return sigmoid(fit.beta().dot(x));
}

namespace {

io::Json number_or_null(double v) { return std::isfinite(v) ? io::Json(v) : io::Json(nullptr); }

double number_from(const io::Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

io::Json to_json(const ModelFit& fit) {
  io::Json j;
  j["schema"] = "novelty.model_fit";
  j["version"] = 1;
  j["formula"] = fit.formula;
  io::Json fixed = io::Json::array();
  for (const auto& fe : fit.fixed) {
    fixed.push_back({{"name", fe.name},
                     {"estimate", fe.estimate},
                     {"se", number_or_null(fe.se)},
                     {"z", number_or_null(fe.z)},
                     {"p", number_or_null(fe.p)},
                     {"odds_ratio", number_or_null(fe.odds_ratio())}});
  }
  j["fixed"] = fixed;
  io::Json groups = io::Json::array();
  for (const auto& g : fit.groups) {
    groups.push_back({{"name", g.name},
                      {"n_levels", g.n_levels},
                      {"sd", g.sd},
                      {"variance", g.variance()},
                      {"boundary", g.boundary},
                      {"levels", g.levels},
                      {"modes", g.modes}});
  }
  j["groups"] = groups;
  io::Json vcov = io::Json::array();
  for (Index r = 0; r < fit.vcov.rows(); ++r) {
    io::Json row = io::Json::array();
    for (Index c = 0; c < fit.vcov.cols(); ++c) row.push_back(number_or_null(fit.vcov(r, c)));
    vcov.push_back(row);
  }
  j["vcov"] = vcov;
  j["log_likelihood"] = fit.log_likelihood;
  j["aic"] = fit.aic;
  j["converged"] = fit.converged;
  j["penalized"] = fit.penalized;
  j["iterations"] = fit.iterations;
  j["gradient_norm"] = fit.gradient_norm;
  j["n_obs"] = fit.n_obs;
  j["reference"] = fit.reference;
  j["factor_levels"] = fit.factor_levels;
  j["warnings"] = fit.warnings;
  j["estimation"] = "laplace";
  return j;
}

ModelFit model_fit_from_json(const io::Json& j) {
  if (j.value("schema", std::string()) != "novelty.model_fit") {
    fail(ErrorCode::kFormat, "not a model fit record", "fit");
  }
  ModelFit fit;
  fit.formula = j.value("formula", std::string());
  for (const auto& fe : j.at("fixed")) {
    FixedEffect f;
    f.name = fe.at("name").get<std::string>();
    f.estimate = fe.at("estimate").get<double>();
    f.se = number_from(fe.at("se"));
    f.z = number_from(fe.at("z"));
    f.p = number_from(fe.at("p"));
    fit.fixed.push_back(f);
  }
  for (const auto& g : j.at("groups")) {
    GroupEstimate ge;
    ge.name = g.at("name").get<std::string>();
    ge.n_levels = g.at("n_levels").get<std::size_t>();
    ge.sd = g.at("sd").get<double>();
    ge.boundary = g.at("boundary").get<bool>();
    ge.levels = g.at("levels").get<std::vector<std::string>>();
    ge.modes = g.at("modes").get<std::vector<double>>();
    fit.groups.push_back(ge);
  }
  const auto& vcov = j.at("vcov");
  const auto p = static_cast<Index>(fit.fixed.size());
  fit.vcov.resize(p, p);
  for (Index r = 0; r < p; ++r) {
    for (Index c = 0; c < p; ++c) fit.vcov(r, c) = number_from(vcov.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)));
  }
  fit.log_likelihood = j.at("log_likelihood").get<double>();
  fit.aic = j.at("aic").get<double>();
  fit.converged = j.at("converged").get<bool>();
  fit.penalized = j.value("penalized", false);
  fit.iterations = j.value("iterations", 0);
  fit.gradient_norm = j.value("gradient_norm", 0.0);
  fit.n_obs = j.at("n_obs").get<std::size_t>();
  fit.reference = j.value("reference", std::map<std::string, std::string>{});
  fit.factor_levels = j.value("factor_levels", std::map<std::string, std::vector<std::string>>{});
  fit.warnings = j.value("warnings", std::vector<std::string>{});
  return fit;
}

}  // namespace novelty::stats
