// Copyright 2026 The ResPlan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Noise-scale selection.
//
// The mechanism runs one base measurement per attribute set A in the downward
// closure of the workload, each with its own noise scale sigma2[A]. Both the
// privacy cost and every reconstructed cell variance are linear in those
// scales:
//
//   pcost          = sum_A p[A] / sigma2[A],   p[A] = prod_{i in A} (m_i-1)/m_i
//   Var(marginal B) = sum_{A subset of B} sigma2[A] * p[A] * q[B \ A],
//                                              q[C] = prod_{j in C} 1/m_j^2
//
// CostModel holds these coefficients as exact rationals. The solvers convert
// them to binary64 once and then work in floating point.

#ifndef RESPLAN_PLANNER_HPP_
#define RESPLAN_PLANNER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include "resplan/errors.hpp"
#include "resplan/schema.hpp"

namespace resplan {

using Rational = boost::multiprecision::cpp_rational;

enum class Objective {
  kSumOfVariances,  // sum_i c_i * (sum of cell variances of marginal i)
  kMaxVariance,     // max_i (cell variance of marginal i) / c_i
};

inline const char* ObjectiveName(Objective o) {
  return o == Objective::kSumOfVariances ? "sumvar" : "maxvar";
}

// Contribution of one closure member to one workload marginal.
struct VarianceTerm {
  std::size_t set = 0;  // index into CostModel::closure()
  Rational variance;    // p[A'] * q[A \ A']
  Rational covariance;  // prod_{i in A'} (-1/m_i) * q[A \ A']
  double variance_d = 0.0;
  double covariance_d = 0.0;
};

struct MarginalModel {
  AttrSet marginal;
  double weight = 1.0;
  std::uint64_t cells = 1;
  std::vector<VarianceTerm> terms;
};

class CostModel {
 public:
  const std::vector<AttrSet>& closure() const { return closure_; }
  std::size_t size() const { return closure_.size(); }
  const std::vector<MarginalModel>& marginals() const { return marginals_; }

  std::optional<std::size_t> IndexOf(const AttrSet& a) const {
    auto it = index_.find(a);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const Rational& pcost_coefficient(std::size_t j) const { return pcoef_[j]; }
  double pcost_coefficient_d(std::size_t j) const { return pcoef_d_[j]; }

  // Cell variance of workload marginal `i` under noise scales aligned with
  // closure().
  double CellVariance(std::size_t i, std::span<const double> sigma2) const {
    double v = 0.0;
    for (const VarianceTerm& t : marginals_.at(i).terms) {
      v += t.variance_d * sigma2[t.set];
    }
    return v;
  }

  // Covariance between two distinct cells of workload marginal `i`.
  double CellCovariance(std::size_t i, std::span<const double> sigma2) const {
    double v = 0.0;
    for (const VarianceTerm& t : marginals_.at(i).terms) {
      v += t.covariance_d * sigma2[t.set];
    }
    return v;
  }

  double PrivacyCost(std::span<const double> sigma2) const {
    double c = 0.0;
    for (std::size_t j = 0; j < closure_.size(); ++j) {
      c += pcoef_d_[j] / sigma2[j];
    }
    return c;
  }

 private:
  friend CostModel BuildCostModel(const Schema&, const Workload&);

  std::vector<AttrSet> closure_;
  std::unordered_map<AttrSet, std::size_t, AttrSetHash> index_;
  std::vector<Rational> pcoef_;
  std::vector<double> pcoef_d_;
  std::vector<MarginalModel> marginals_;
};

// Builds all coefficients level by level: each closure member derives its
// products from the parent that drops its last attribute, so the total work
// is proportional to sum over the workload of 2^|A|.
inline CostModel BuildCostModel(const Schema& schema,
                                const Workload& workload) {
  CostModel model;
  model.closure_ = Closure(workload);
  const std::size_t n = model.closure_.size();
  model.index_.reserve(n);
  for (std::size_t j = 0; j < n; ++j) model.index_.emplace(model.closure_[j], j);

  model.pcoef_.resize(n);
  std::vector<Rational> q(n);    // prod 1/m^2
  std::vector<Rational> neg(n);  // prod -1/m
  for (std::size_t j = 0; j < n; ++j) {
    const AttrSet& a = model.closure_[j];
    if (a.empty()) {
      model.pcoef_[j] = 1;
      q[j] = 1;
      neg[j] = 1;
      continue;
    }
    const std::uint32_t last = a.indices().back();
    const std::size_t parent =
        model.index_.at(a.Minus(AttrSet{last}));
    const std::int64_t m = schema.domain_size(last);
    model.pcoef_[j] = model.pcoef_[parent] * Rational(m - 1, m);
    q[j] = q[parent] * Rational(1, m * m);
    neg[j] = neg[parent] * Rational(-1, m);
  }
  model.pcoef_d_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    model.pcoef_d_[j] = model.pcoef_[j].convert_to<double>();
  }

  model.marginals_.reserve(workload.size());
  for (const WorkloadEntry& e : workload.entries()) {
    MarginalModel mm;
    mm.marginal = e.marginal;
    mm.weight = e.weight;
    mm.cells = schema.CellCount(e.marginal);
    e.marginal.ForEachSubset([&](const AttrSet& sub) {
      const std::size_t j = model.index_.at(sub);
      const std::size_t rest = model.index_.at(e.marginal.Minus(sub));
      VarianceTerm t;
      t.set = j;
      t.variance = model.pcoef_[j] * q[rest];
      t.covariance = neg[j] * q[rest];
      t.variance_d = t.variance.convert_to<double>();
      t.covariance_d = t.covariance.convert_to<double>();
      mm.terms.push_back(std::move(t));
    });
    model.marginals_.push_back(std::move(mm));
  }
  return model;
}

// Coefficient of sigma2[A] in the weighted sum-of-variances objective,
// sum_i c_i * cells_i * variance_i[A], exactly. Weights enter as the exact
// rational value of their binary64 representation.
inline std::vector<Rational> SumOfVariancesCoefficients(
    const CostModel& model) {
  std::vector<Rational> v(model.size());
  for (const MarginalModel& mm : model.marginals()) {
    const Rational scale = Rational(mm.weight) * Rational(mm.cells);
    for (const VarianceTerm& t : mm.terms) v[t.set] += scale * t.variance;
  }
  return v;
}

struct PlanEntry {
  AttrSet attrset;
  double sigma2 = 0.0;
};

// Noise scale for every member of the workload closure.
struct Plan {
  std::vector<PlanEntry> entries;  // sorted by AttrSet ordering
  Objective objective = Objective::kSumOfVariances;
  double total_pcost = 0.0;
  double predicted_loss = 0.0;
  // Relative primal-dual gap certified by the max-variance solver; 0 for the
  // closed-form solution.
  double solver_gap = 0.0;

  std::optional<double> Sigma2(const AttrSet& a) const {
    auto it = std::lower_bound(
        entries.begin(), entries.end(), a,
        [](const PlanEntry& e, const AttrSet& s) { return e.attrset < s; });
    if (it == entries.end() || it->attrset != a) return std::nullopt;
    return it->sigma2;
  }
};

// Plan noise scales in the order of model.closure().
inline std::vector<double> AlignedSigma2(const CostModel& model,
                                         const Plan& plan) {
  std::vector<double> out(model.size());
  for (std::size_t j = 0; j < model.size(); ++j) {
    auto s = plan.Sigma2(model.closure()[j]);
    if (!s) throw ConfigError("plan has no noise scale for a closure member");
    if (!(*s > 0.0)) throw ConfigError("plan has a non-positive noise scale");
    out[j] = *s;
  }
  return out;
}

namespace internal {

inline Plan MakePlan(const CostModel& model, std::vector<double> sigma2,
                     Objective objective, double loss) {
  Plan plan;
  plan.objective = objective;
  plan.entries.reserve(model.size());
  for (std::size_t j = 0; j < model.size(); ++j) {
    plan.entries.push_back({model.closure()[j], sigma2[j]});
  }
  plan.total_pcost = model.PrivacyCost(sigma2);
  plan.predicted_loss = loss;
  return plan;
}

inline std::vector<double> SumOfVariancesCoefficientsD(const CostModel& model) {
  auto exact = SumOfVariancesCoefficients(model);
  std::vector<double> v(exact.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    v[j] = exact[j].convert_to<double>();
    if (!(v[j] > 0.0)) {
      throw SolverError(
          "closure member contributes to no workload variance");
    }
  }
  return v;
}

}  // namespace internal

// Minimizes the weighted sum of variances subject to pcost <= budget.
// Closed form from Cauchy-Schwarz: with S = sum_A sqrt(v_A p_A), the optimum
// is T = S^2 / budget at sigma2[A] = S * sqrt(p_A / v_A) / budget.
inline Plan SolveSumOfVariances(const CostModel& model, double budget) {
  if (!(budget > 0.0) || !std::isfinite(budget)) {
    throw ConfigError("privacy budget must be positive");
  }
  if (model.size() == 0) {
    return internal::MakePlan(model, {}, Objective::kSumOfVariances, 0.0);
  }
  const std::vector<double> v = internal::SumOfVariancesCoefficientsD(model);
  double s = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    s += std::sqrt(v[j] * model.pcost_coefficient_d(j));
  }
  std::vector<double> sigma2(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    sigma2[j] = s * std::sqrt(model.pcost_coefficient_d(j) / v[j]) / budget;
  }
  return internal::MakePlan(model, std::move(sigma2),
                            Objective::kSumOfVariances, s * s / budget);
}

struct MaxVarianceOptions {
  // Stop once (upper - lower) / upper <= tolerance, where upper is the privacy
  // cost of a feasible plan and lower a dual bound.
  double tolerance = 1e-9;
  int max_newton_steps = 2000;
};

namespace internal {

// Result of the normalized problem
//   minimize sum_A p_A / s_A   subject to   Var_i(s) / c_i <= 1 for all i.
struct MaxVarianceCore {
  std::vector<double> s;   // feasible, max_i Var_i(s)/c_i == 1
  double upper = 0.0;      // pcost of s
  double lower = 0.0;      // certified lower bound on the optimum
  int newton_steps = 0;
};

// Solves the normalized problem through its dual. For mu on the simplex,
//   S(mu) = sum_A sqrt(p_A * w_A(mu)),  w_A(mu) = sum_i mu_i Var_iA / c_i,
// S(mu)^2 lower-bounds the optimum, and the bound is tight at the maximizer,
// where s_A proportional to sqrt(p_A / w_A) is the unique primal solution.
// S is concave; it is maximized with a log-barrier Newton method on the
// simplex.
inline MaxVarianceCore SolveMaxVarianceCore(const CostModel& model,
                                            const MaxVarianceOptions& opts) {
  const std::size_t n = model.size();
  const std::size_t m = model.marginals().size();
  std::vector<double> p(n);
  for (std::size_t j = 0; j < n; ++j) p[j] = model.pcost_coefficient_d(j);

  // Column view: for each closure member, the marginals it feeds.
  struct Entry {
    std::size_t row;
    double a;
  };
  std::vector<std::vector<Entry>> cols(n);
  for (std::size_t i = 0; i < m; ++i) {
    const MarginalModel& mm = model.marginals()[i];
    for (const VarianceTerm& t : mm.terms) {
      cols[t.set].push_back({i, t.variance_d / mm.weight});
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (cols[j].empty()) {
      throw SolverError("closure member contributes to no workload variance");
    }
  }

  auto weights_of = [&](const Eigen::VectorXd& mu) {
    std::vector<double> w(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      for (const Entry& e : cols[j]) w[j] += e.a * mu[e.row];
    }
    return w;
  };
  auto dual_value = [&](const std::vector<double>& w) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::sqrt(p[j] * w[j]);
    return s;
  };
  auto recover = [&](const std::vector<double>& w, MaxVarianceCore& out) {
    out.s.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) out.s[j] = std::sqrt(p[j] / w[j]);
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      worst = std::max(worst, model.CellVariance(i, out.s) /
                                  model.marginals()[i].weight);
    }
    for (double& x : out.s) x /= worst;
    out.upper = model.PrivacyCost(out.s);
  };

  MaxVarianceCore out;
  Eigen::VectorXd mu = Eigen::VectorXd::Constant(
      static_cast<Eigen::Index>(m), 1.0 / static_cast<double>(m));
  std::vector<double> w = weights_of(mu);
  double value = dual_value(w);
  out.lower = value * value;
  recover(w, out);
  if (m == 1 || (out.upper - out.lower) <= opts.tolerance * out.upper) {
    out.lower = std::min(out.lower, out.upper);
    return out;
  }

  double tau = 0.1 * value / static_cast<double>(m);
  const Eigen::Index mi = static_cast<Eigen::Index>(m);
  Eigen::VectorXd grad(mi);
  Eigen::MatrixXd hess(mi, mi);
  auto barrier = [&](const Eigen::VectorXd& x, double& val) {
    for (Eigen::Index i = 0; i < mi; ++i) {
      if (!(x[i] > 0.0)) return false;
    }
    const auto wx = weights_of(x);
    val = dual_value(wx) + tau * x.array().log().sum();
    return true;
  };

  while (true) {
    // Centering: Newton's method on S(mu) + tau * sum log(mu_i) subject to
    // sum(mu) = 1.
    int inner = 0;
    while (true) {
      if (out.newton_steps >= opts.max_newton_steps) {
        throw SolverError(
            "max-variance solver did not converge: relative gap " +
            std::to_string((out.upper - out.lower) / out.upper) +
            " after " + std::to_string(out.newton_steps) + " Newton steps");
      }
      ++out.newton_steps;
      w = weights_of(mu);
      grad.setZero();
      hess.setZero();
      for (std::size_t j = 0; j < n; ++j) {
        const double g = 0.5 * std::sqrt(p[j] / w[j]);
        const double h = 0.25 * std::sqrt(p[j]) / (w[j] * std::sqrt(w[j]));
        const auto& c = cols[j];
        for (std::size_t a = 0; a < c.size(); ++a) {
          const auto ra = static_cast<Eigen::Index>(c[a].row);
          grad[ra] += c[a].a * g;
          for (std::size_t b = 0; b < c.size(); ++b) {
            hess(ra, static_cast<Eigen::Index>(c[b].row)) +=
                c[a].a * c[b].a * h;
          }
        }
      }
      // hess now holds the negated Hessian of S, which is positive
      // semidefinite; the barrier makes it definite.
      Eigen::VectorXd gb = grad.array() + tau / mu.array();
      hess.diagonal().array() += tau / mu.array().square();
      Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
      if (ldlt.info() != Eigen::Success) {
        throw SolverError("max-variance solver: singular Newton system");
      }
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mi);
      const Eigen::VectorXd hg = ldlt.solve(gb);
      const Eigen::VectorXd h1 = ldlt.solve(ones);
      const double nu = hg.sum() / h1.sum();
      const Eigen::VectorXd step = hg - nu * h1;
      const double decrement = gb.dot(step);
      const double rel_step = (step.array().abs() / mu.array()).maxCoeff();
      // The dual can be very flat near its maximizer, so a small decrement
      // does not mean mu is accurate; centering ends on the step size.
      if (!(rel_step > 1e-12)) break;
      if (++inner > 200) break;

      double t = 1.0;
      Eigen::VectorXd trial(mi);
      if (decrement > 1e-12 * value) {
        double current = 0.0;
        barrier(mu, current);
        bool accepted = false;
        while (t > 1e-14) {
          trial = mu + t * step;
          double next = 0.0;
          if (barrier(trial, next) &&
              next >= current + 0.25 * t * decrement) {
            accepted = true;
            break;
          }
          t *= 0.5;
        }
        if (!accepted) break;
      } else {
        // Changes in the barrier value are below rounding; the quadratic
        // model is accurate here, so take the Newton step, only keeping mu
        // inside the simplex.
        while ((mu + t * step).minCoeff() <= 0.5 * mu.minCoeff() && t > 1e-14) {
          t *= 0.5;
        }
        trial = mu + t * step;
      }
      mu = trial / trial.sum();
    }

    w = weights_of(mu);
    value = dual_value(w);
    out.lower = std::max(out.lower, value * value);
    MaxVarianceCore candidate;
    recover(w, candidate);
    if (candidate.upper < out.upper) {
      out.s = std::move(candidate.s);
      out.upper = candidate.upper;
    }
    if (out.upper - out.lower <= opts.tolerance * out.upper) break;
    if (tau * static_cast<double>(m) < 1e-3 * opts.tolerance * value) {
      // The barrier is negligible and the gap is stuck at rounding level.
      if (out.upper - out.lower <= 1e2 * opts.tolerance * out.upper) break;
      throw SolverError(
          "max-variance solver stalled at relative gap " +
          std::to_string((out.upper - out.lower) / out.upper));
    }
    tau *= 0.1;
  }
  return out;
}

}  // namespace internal

// Minimizes max_i Var_i / c_i subject to pcost <= budget.
//
// The optimum is unique: the utility-constrained problem minimizes a strictly
// convex pcost over a convex set, and rescaling maps its solution onto this
// one.
inline Plan SolveMaxVariance(const CostModel& model, double budget,
                             const MaxVarianceOptions& opts = {}) {
  if (!(budget > 0.0) || !std::isfinite(budget)) {
    throw ConfigError("privacy budget must be positive");
  }
  if (!(opts.tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  if (model.size() == 0) {
    return internal::MakePlan(model, {}, Objective::kMaxVariance, 0.0);
  }
  internal::MaxVarianceCore core =
      internal::SolveMaxVarianceCore(model, opts);
  const double k = core.upper / budget;
  for (double& x : core.s) x *= k;
  Plan plan = internal::MakePlan(model, std::move(core.s),
                                 Objective::kMaxVariance, core.upper / budget);
  plan.solver_gap = (core.upper - core.lower) / core.upper;
  return plan;
}

// Privacy-constrained selection for either objective.
inline Plan SolvePrivacyConstrained(const CostModel& model,
                                    Objective objective, double budget,
                                    const MaxVarianceOptions& opts = {}) {
  return objective == Objective::kSumOfVariances
             ? SolveSumOfVariances(model, budget)
             : SolveMaxVariance(model, budget, opts);
}

// Minimizes pcost subject to loss <= loss_bound. Both objectives are
// homogeneous of degree one in sigma2 while pcost is homogeneous of degree
// minus one, so the unit-budget solution rescaled to the bound is optimal.
inline Plan SolveUtilityConstrained(const CostModel& model,
                                    Objective objective, double loss_bound,
                                    const MaxVarianceOptions& opts = {}) {
  if (!(loss_bound > 0.0) || !std::isfinite(loss_bound)) {
    throw ConfigError("loss bound must be positive");
  }
  if (model.size() == 0) {
    return internal::MakePlan(model, {}, objective, 0.0);
  }
  Plan unit = SolvePrivacyConstrained(model, objective, 1.0, opts);
  const double k = loss_bound / unit.predicted_loss;
  std::vector<double> sigma2(unit.entries.size());
  for (std::size_t j = 0; j < sigma2.size(); ++j) {
    sigma2[j] = unit.entries[j].sigma2 * k;
  }
  Plan plan =
      internal::MakePlan(model, std::move(sigma2), objective, loss_bound);
  plan.solver_gap = unit.solver_gap;
  return plan;
}

// Cell variance of every workload marginal, in workload order.
inline std::vector<double> MarginalVariances(const CostModel& model,
                                             const Plan& plan) {
  const auto sigma2 = AlignedSigma2(model, plan);
  std::vector<double> out(model.marginals().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = model.CellVariance(i, sigma2);
  }
  return out;
}

inline std::vector<double> MarginalCovariances(const CostModel& model,
                                               const Plan& plan) {
  const auto sigma2 = AlignedSigma2(model, plan);
  std::vector<double> out(model.marginals().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = model.CellCovariance(i, sigma2);
  }
  return out;
}

inline double PrivacyCost(const CostModel& model, const Plan& plan) {
  return model.PrivacyCost(AlignedSigma2(model, plan));
}

// Square root of total workload cell variance over total workload cells.
inline double Rmse(const CostModel& model, const Plan& plan) {
  const auto var = MarginalVariances(model, plan);
  double total = 0.0;
  double cells = 0.0;
  for (std::size_t i = 0; i < var.size(); ++i) {
    const double c = static_cast<double>(model.marginals()[i].cells);
    total += c * var[i];
    cells += c;
  }
  return cells > 0.0 ? std::sqrt(total / cells) : 0.0;
}

// Largest cell variance over the workload, ignoring weights.
inline double MaxCellVariance(const CostModel& model, const Plan& plan) {
  const auto var = MarginalVariances(model, plan);
  double worst = 0.0;
  for (double v : var) worst = std::max(worst, v);
  return worst;
}

// Value of the given objective, weights included.
inline double Loss(const CostModel& model, const Plan& plan,
                   Objective objective) {
  const auto var = MarginalVariances(model, plan);
  double out = 0.0;
  for (std::size_t i = 0; i < var.size(); ++i) {
    const MarginalModel& mm = model.marginals()[i];
    if (objective == Objective::kSumOfVariances) {
      out += mm.weight * static_cast<double>(mm.cells) * var[i];
    } else {
      out = std::max(out, var[i] / mm.weight);
    }
  }
  return out;
}

}  // namespace resplan

#endif  // RESPLAN_PLANNER_HPP_
