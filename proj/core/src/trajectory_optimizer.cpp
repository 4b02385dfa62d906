#include "shrums/trajectory_optimizer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace shrums {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNormEps2 = 1e-18;  // softens the 6-DOF norm at zero length

using Vector6 = Eigen::Matrix<double, 6, 1>;
using Eigen::VectorXd;

double smooth_norm(const Vec3& dt, const Vec3& da, double lambda) {
  return std::sqrt(dt.squaredNorm() + lambda * lambda * da.squaredNorm() + kNormEps2);
}

// Limited-memory BFGS with Armijo backtracking; F(x, grad) -> value.
template <class F>
void minimize_lbfgs(const F& fg, VectorXd& x, int max_iter, double grad_tol) {
  constexpr int kMemory = 8;
  std::vector<VectorXd> s_hist, y_hist;
  std::vector<double> inv_sy;
  VectorXd g(x.size()), gn(x.size());
  double f = fg(x, g);

  for (int iter = 0; iter < max_iter; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= grad_tol * std::max(1.0, std::abs(f))) break;

    VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = inv_sy[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty())
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = inv_sy[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    VectorXd dir = -q;
    double slope = g.dot(dir);
    if (slope > -1e-18) {
      dir = -g;
      slope = -g.squaredNorm();
      if (slope == 0.0) break;
    }

    double step = 1.0;
    double fn = f;
    bool moved = false;
    VectorXd xn;
    for (int bt = 0; bt < 48; ++bt) {
      xn = x + step * dir;
      fn = fg(xn, gn);
      if (fn <= f + 1e-4 * step * slope) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;

    const VectorXd s = xn - x;
    const VectorXd y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      inv_sy.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > kMemory) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        inv_sy.erase(inv_sy.begin());
      }
    }
    x = xn;
    f = fn;
    g = gn;
    if (s.lpNorm<Eigen::Infinity>() < 1e-13) break;
  }
}

struct Contact {
  int seg = 0;  // constraint couples states seg and seg+1 (0-based)
  int obs = 0;
  double sd = 0.0;
  Vector6 grad_i = Vector6::Zero();
  Vector6 grad_j = Vector6::Zero();
};

struct Sweep {
  std::vector<Contact> contacts;
  double horizon = 0.0;
  Vec3 horizon_dir = Vec3::UnitX();
};

// The decision vector stacks states 2..n as (x, y, z, roll, pitch, yaw).
class Planner {
 public:
  Planner(const Pose6& start, const Pose6& goal, std::vector<const ConvexPolytope*> obstacles,
          const ConvexPolytope& robot, const PlannerConfig& cfg, bool goal_within)
      : start_(start), goal_(goal), obstacles_(std::move(obstacles)), robot_(robot),
        cfg_(cfg), n_(cfg.state_count()), goal_within_(goal_within) {
    goal_t_ = goal.translation();
    goal_a_ = goal.angles();
  }

  int dim() const { return 6 * (n_ - 1); }

  VectorXd pack(const std::vector<Pose6>& states) const {
    VectorXd x(dim());
    Vec3 prev_a = start_.angles();
    for (int i = 1; i < n_; ++i) {
      // Unwrap angles against the previous state so raw differences stay
      // minimal along the path.
      const Vec3 a = prev_a + wrap_angles(states[i].angles() - prev_a);
      x.segment<3>(6 * (i - 1)) = states[i].translation();
      x.segment<3>(6 * (i - 1) + 3) = a;
      prev_a = a;
    }
    return x;
  }

  std::vector<Pose6> unpack(const VectorXd& x) const {
    std::vector<Pose6> states(n_);
    states[0] = start_;
    for (int i = 1; i < n_; ++i) {
      const Vec3 t = x.segment<3>(6 * (i - 1));
      const Vec3 a = x.segment<3>(6 * (i - 1) + 3);
      states[i] = Pose6::from(t, wrap_angles(a));
    }
    return states;
  }

  Vec3 translation(const VectorXd& x, int i) const {  // i in [0, n)
    return i == 0 ? start_.translation() : Vec3(x.segment<3>(6 * (i - 1)));
  }

  Vec3 angles_raw(const VectorXd& x, int i) const {
    return i == 0 ? start_.angles() : Vec3(x.segment<3>(6 * (i - 1) + 3));
  }

  double smooth_objective(const VectorXd& x, VectorXd* grad) const {
    const double lam = cfg_.orientation_weight;
    const double lam2 = lam * lam;
    if (grad) grad->setZero(dim());
    double total = 0.0;
    for (int i = 0; i + 1 < n_; ++i) {
      const Vec3 dt = translation(x, i + 1) - translation(x, i);
      const Vec3 da = angles_raw(x, i + 1) - angles_raw(x, i);
      const double c = smooth_norm(dt, da, lam);
      total += c;
      if (!grad) continue;
      const Vec3 gt = dt / c;
      const Vec3 ga = lam2 * da / c;
      grad->segment<3>(6 * i) += gt;
      grad->segment<3>(6 * i + 3) += ga;
      if (i > 0) {
        grad->segment<3>(6 * (i - 1)) -= gt;
        grad->segment<3>(6 * (i - 1) + 3) -= ga;
      }
    }
    const Vec3 dt = goal_t_ - translation(x, n_ - 1);
    Vec3 da = goal_a_ - angles_raw(x, n_ - 1);
    da = wrap_angles(da);
    const double c = smooth_norm(dt, da, lam);
    total += cfg_.goal_weight * c;
    if (grad) {
      grad->segment<3>(6 * (n_ - 2)) += cfg_.goal_weight * (-dt / c);
      grad->segment<3>(6 * (n_ - 2) + 3) += cfg_.goal_weight * (-lam2 * da / c);
    }
    return total;
  }

  Sweep sweep(const VectorXd& x) const {
    Sweep sw;
    std::vector<RigidTransform> transforms(n_);
    std::vector<std::array<Mat3, 3>> rot_derivs(n_);
    std::vector<Pose6> poses(n_);
    for (int i = 0; i < n_; ++i) {
      poses[i] = Pose6::from(translation(x, i), angles_raw(x, i));
      transforms[i] = pose_to_transform(poses[i]);
      rot_derivs[i] = rotation_angle_derivatives(poses[i]);
    }

    for (int i = 0; i + 1 < n_; ++i) {
      for (int o = 0; o < static_cast<int>(obstacles_.size()); ++o) {
        const SweptContact c =
            swept_signed_distance(robot_, transforms[i], transforms[i + 1], *obstacles_[o]);
        Contact contact;
        contact.seg = i;
        contact.obs = o;
        contact.sd = c.signed_distance;
        const double mass_j = 1.0 - c.mass_first;
        contact.grad_i.head<3>() = -c.mass_first * c.axis;
        contact.grad_j.head<3>() = -mass_j * c.axis;
        for (int k = 0; k < 3; ++k) {
          contact.grad_i[3 + k] = -c.axis.dot(rot_derivs[i][k] * c.local_first);
          contact.grad_j[3 + k] = -c.axis.dot(rot_derivs[i + 1][k] * c.local_second);
        }
        sw.contacts.push_back(contact);
      }
    }

    const Vec3 span = translation(x, n_ - 1) - start_.translation();
    sw.horizon = span.norm();
    sw.horizon_dir = sw.horizon > 1e-9 ? Vec3(span / sw.horizon) : goal_dir_fallback();
    return sw;
  }

  double horizon_residual(double h) const {
    return goal_within_ ? std::max(0.0, h - cfg_.horizon_m) : h - cfg_.horizon_m;
  }

  double max_violation(const Sweep& sw) const {
    double v = std::abs(horizon_residual(sw.horizon));
    for (const Contact& c : sw.contacts) v = std::max(v, cfg_.d_safe - c.sd);
    return v;
  }

  double merit(const VectorXd& x, const Sweep& sw, double mu_c, double mu_h) const {
    double value = smooth_objective(x, nullptr);
    for (const Contact& c : sw.contacts) {
      const double viol = std::max(0.0, cfg_.d_safe - c.sd);
      value += mu_c * viol * viol;
    }
    const double r = horizon_residual(sw.horizon);
    value += mu_h * r * r;
    return value;
  }

  // Convex model frozen at x0: witness-normal linearized clearances, a
  // linearized horizon, hinge-squared exterior penalties and a proximal term.
  double model(const VectorXd& x, VectorXd* grad, const VectorXd& x0, const Sweep& sw,
               double mu_c, double mu_h, double rho) const {
    double value = smooth_objective(x, grad);
    const double activation = cfg_.d_safe + cfg_.activation_margin;
    for (const Contact& c : sw.contacts) {
      if (c.sd >= activation) continue;
      double s = c.sd;
      const int bi = 6 * (c.seg - 1);  // seg 0 couples the fixed start
      const int bj = 6 * c.seg;
      if (c.seg > 0) s += c.grad_i.dot(x.segment<6>(bi) - x0.segment<6>(bi));
      s += c.grad_j.dot(x.segment<6>(bj) - x0.segment<6>(bj));
      const double viol = cfg_.d_safe - s;
      if (viol <= 0.0) continue;
      value += mu_c * viol * viol;
      if (grad) {
        if (c.seg > 0) grad->segment<6>(bi) += mu_c * 2.0 * viol * (-c.grad_i);
        grad->segment<6>(bj) += mu_c * 2.0 * viol * (-c.grad_j);
      }
    }

    const int bn = 6 * (n_ - 2);
    const double h_lin = sw.horizon + sw.horizon_dir.dot(x.segment<3>(bn) - x0.segment<3>(bn));
    const double r = goal_within_ ? std::max(0.0, h_lin - cfg_.horizon_m)
                                  : h_lin - cfg_.horizon_m;
    value += mu_h * r * r;
    if (grad && (r != 0.0 || !goal_within_))
      grad->segment<3>(bn) += mu_h * 2.0 * r * sw.horizon_dir;

    value += 0.5 * rho * (x - x0).squaredNorm();
    if (grad) *grad += rho * (x - x0);
    return value;
  }

  void apply_roll_lock(VectorXd& x) const {
    if (!cfg_.lock_roll) return;
    for (int i = 1; i < n_; ++i) x[6 * (i - 1) + 3] = start_.roll;
  }

  void zero_locked_grad(VectorXd& grad) const {
    if (!cfg_.lock_roll) return;
    for (int i = 1; i < n_; ++i) grad[6 * (i - 1) + 3] = 0.0;
  }

 private:
  Vec3 goal_dir_fallback() const {
    const Vec3 d = goal_t_ - start_.translation();
    const double len = d.norm();
    return len > 1e-9 ? Vec3(d / len) : Vec3::UnitX();
  }

  Pose6 start_, goal_;
  std::vector<const ConvexPolytope*> obstacles_;
  const ConvexPolytope& robot_;
  const PlannerConfig& cfg_;
  int n_;
  bool goal_within_;
  Vec3 goal_t_, goal_a_;
};

}  // namespace

void PlannerConfig::validate() const {
  if (!(horizon_m > 0.0)) throw std::invalid_argument("PlannerConfig: horizon must be positive");
  if (!(states_per_meter > 0.0))
    throw std::invalid_argument("PlannerConfig: states_per_meter must be positive");
  if (!(d_safe >= 0.0)) throw std::invalid_argument("PlannerConfig: d_safe must be >= 0");
  if (!(goal_weight > 0.0)) throw std::invalid_argument("PlannerConfig: goal weight must be positive");
}

int PlannerConfig::state_count() const {
  return static_cast<int>(std::ceil(horizon_m * states_per_meter)) + 1;
}

double objective(const std::vector<Pose6>& states, const Pose6& goal, double w,
                 double lambda) {
  if (states.size() < 2) throw std::invalid_argument("objective: need at least 2 states");
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < states.size(); ++i) {
    const Vec3 dt = states[i + 1].translation() - states[i].translation();
    const Vec3 da = wrap_angles(states[i + 1].angles() - states[i].angles());
    total += std::sqrt(dt.squaredNorm() + lambda * lambda * da.squaredNorm());
  }
  const Vec3 dt = goal.translation() - states.back().translation();
  const Vec3 da = wrap_angles(goal.angles() - states.back().angles());
  total += w * std::sqrt(dt.squaredNorm() + lambda * lambda * da.squaredNorm());
  return total;
}

std::vector<Pose6> warm_start(const PathSolution* previous, const Pose6& new_start,
                              const Pose6& goal, const PlannerConfig& config,
                              WarmStartMode mode) {
  const int n = config.state_count();
  if (mode == WarmStartMode::Previous) {
    if (previous == nullptr || previous->states.size() < 2)
      return warm_start(nullptr, new_start, goal, config, WarmStartMode::Linear);
    const auto& old_states = previous->states;
    int nearest = 0;
    double best = kInf;
    for (int i = 0; i < static_cast<int>(old_states.size()); ++i) {
      const double d = (old_states[i].translation() - new_start.translation()).norm();
      if (d < best) {
        best = d;
        nearest = i;
      }
    }
    if (nearest + 1 >= static_cast<int>(old_states.size()))
      return warm_start(nullptr, new_start, goal, config, WarmStartMode::Linear);

    std::vector<Pose6> states;
    states.reserve(n);
    states.push_back(new_start);
    for (int i = nearest + 1; i < static_cast<int>(old_states.size()) &&
                              static_cast<int>(states.size()) < n;
         ++i)
      states.push_back(old_states[i]);
    // Extend along the last heading until the state count is restored.
    const double step = 1.0 / config.states_per_meter;
    while (static_cast<int>(states.size()) < n) {
      const Pose6& last = states.back();
      Vec3 dir;
      if (states.size() >= 2) {
        dir = last.translation() - states[states.size() - 2].translation();
      } else {
        dir = goal.translation() - last.translation();
      }
      const double len = dir.norm();
      dir = len > 1e-9 ? Vec3(dir / len) : Vec3::UnitX();
      states.push_back(Pose6::from(last.translation() + step * dir, last.angles()));
    }
    return states;
  }

  // Linear interpolation toward the goal, truncated at the horizon.
  std::vector<Pose6> states(n, new_start);
  const Vec3 to_goal = goal.translation() - new_start.translation();
  const double dist = to_goal.norm();
  if (dist < 1e-12) return states;
  const double length = std::min(config.horizon_m, dist);
  const Vec3 dir = to_goal / dist;
  const Vec3 dangles = wrap_angles(goal.angles() - new_start.angles());
  for (int i = 1; i < n; ++i) {
    const double along = length * i / (n - 1);
    const double frac = along / dist;
    states[i] = Pose6::from(new_start.translation() + along * dir,
                            wrap_angles(new_start.angles() + frac * dangles));
  }
  return states;
}

ConvexPolytope default_robot_body() {
  return make_box(Vec3::Zero(), Vec3(0.66, 0.55, 0.13));
}

PathSolution plan(const Pose6& start, const Pose6& global_goal,
                  const ObstacleSet& obstacles, const ConvexPolytope& robot,
                  const PlannerConfig& config, const std::vector<Pose6>* warm,
                  const std::atomic<bool>* cancel) {
  const auto t_begin = std::chrono::steady_clock::now();
  config.validate();
  const int n = config.state_count();

  PathSolution sol;
  sol.states.assign(n, start);
  sol.goal_within_horizon =
      (global_goal.translation() - start.translation()).norm() < config.horizon_m;

  auto finalize = [&](PlanStatus status) {
    sol.status = status;
    sol.objective = objective(sol.states, global_goal, config.goal_weight,
                              config.orientation_weight);
    const ClearanceReport cert = min_clearance(robot, sol.states, obstacles);
    sol.min_clearance = cert.min_clearance;
    const Vec3 span = sol.states.back().translation() - start.translation();
    const double residual = sol.goal_within_horizon
                                ? std::max(0.0, span.norm() - config.horizon_m)
                                : std::abs(span.norm() - config.horizon_m);
    sol.feasible = status != PlanStatus::InfeasibleStart &&
                   sol.min_clearance >= config.d_safe - config.constraint_tolerance &&
                   residual <= config.constraint_tolerance;
    sol.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
    return sol;
  };

  // Hard precondition: the start itself must be collision-free.
  if (!obstacles.parts.empty()) {
    const RigidTransform at_start = pose_to_transform(start);
    ConvexPolytope placed;
    placed.vertices.reserve(robot.vertices.size());
    for (const Vec3& v : robot.vertices) placed.vertices.push_back(at_start.apply(v));
    placed.degenerate = robot.degenerate;
    for (const ObstaclePart& part : obstacles.parts) {
      if (signed_distance(placed, part.polytope).signed_distance < 0.0)
        return finalize(PlanStatus::InfeasibleStart);
    }
  }

  // Broad phase: only obstacles reachable within the horizon matter.
  Vec3 robot_lo, robot_hi;
  robot.aabb(robot_lo, robot_hi);
  const double robot_diameter = (robot_hi - robot_lo).norm();
  const double reach = config.horizon_m + robot_diameter + config.d_safe + 1.0;
  std::vector<const ConvexPolytope*> nearby;
  for (const ObstaclePart& part : obstacles.parts) {
    Vec3 lo, hi;
    part.polytope.aabb(lo, hi);
    const Vec3 s = start.translation();
    if (aabb_signed_distance(s, s, lo, hi) <= reach) nearby.push_back(&part.polytope);
  }

  Planner planner(start, global_goal, std::move(nearby), robot, config,
                  sol.goal_within_horizon);

  std::vector<Pose6> initial =
      (warm != nullptr && static_cast<int>(warm->size()) == n)
          ? *warm
          : warm_start(nullptr, start, global_goal, config, WarmStartMode::Linear);
  initial[0] = start;
  VectorXd x = planner.pack(initial);
  planner.apply_roll_lock(x);

  double mu_c = config.initial_penalty;
  double mu_h = config.initial_penalty;
  double rho = 1.0;
  bool post_feasible = false;
  int stall = 0;
  PlanStatus status = PlanStatus::NoConvergence;

  Sweep sw = planner.sweep(x);
  for (int outer = 1; outer <= config.max_outer_iterations; ++outer) {
    sol.iterations = outer;
    if (cancel != nullptr && cancel->load()) {
      status = PlanStatus::Cancelled;
      break;
    }

    auto model_fn = [&](const VectorXd& xc, VectorXd& grad) {
      const double v = planner.model(xc, &grad, x, sw, mu_c, mu_h, rho);
      planner.zero_locked_grad(grad);
      return v;
    };

    VectorXd candidate = x;
    minimize_lbfgs(model_fn, candidate, 200, 1e-10);
    planner.apply_roll_lock(candidate);

    VectorXd unused;
    const double model_at_x = planner.model(x, nullptr, x, sw, mu_c, mu_h, rho);
    const double model_at_c = planner.model(candidate, nullptr, x, sw, mu_c, mu_h, rho);
    const double predicted = model_at_x - model_at_c;

    const double viol_x = planner.max_violation(sw);
    double objective_x = objective(planner.unpack(x), global_goal, config.goal_weight,
                                   config.orientation_weight);
    sol.trace.push_back({outer, objective_x, viol_x, mu_c, rho});

    if (predicted <= 1e-13) {
      if (viol_x <= config.constraint_tolerance) {
        status = PlanStatus::Converged;
        break;
      }
      mu_c = std::min(mu_c * config.penalty_growth, 1e8);
      mu_h = std::min(mu_h * config.penalty_growth, 1e8);
      rho = std::max(rho * 0.25, 1e-4);
      continue;
    }

    const Sweep sw_c = planner.sweep(candidate);
    const double merit_x = planner.merit(x, sw, mu_c, mu_h);
    const double merit_c = planner.merit(candidate, sw_c, mu_c, mu_h);
    const double ratio = (merit_x - merit_c) / predicted;
    const double viol_c = planner.max_violation(sw_c);

    bool accept = ratio > 0.05;
    if (post_feasible && accept) {
      const double objective_c = objective(planner.unpack(candidate), global_goal,
                                           config.goal_weight, config.orientation_weight);
      accept = objective_c <= objective_x + 1e-12 && viol_c <= config.constraint_tolerance;
    }

    if (accept) {
      const double step = (candidate - x).lpNorm<Eigen::Infinity>();
      x = candidate;
      sw = sw_c;
      rho = std::max(rho * 0.5, 1e-4);
      const double viol_now = planner.max_violation(sw);
      if (viol_now <= config.constraint_tolerance) {
        post_feasible = true;
        if (step <= 1e-7) {
          status = PlanStatus::Converged;
          break;
        }
      } else {
        if (viol_now >= 0.9 * viol_x) ++stall;
        else stall = 0;
        if (stall >= 2) {
          mu_c = std::min(mu_c * config.penalty_growth, 1e8);
          mu_h = std::min(mu_h * config.penalty_growth, 1e8);
          stall = 0;
        }
      }
    } else {
      rho = rho * 4.0;
      if (rho > 1e7) {
        if (planner.max_violation(sw) <= config.constraint_tolerance) {
          status = PlanStatus::Converged;
          break;
        }
        mu_c = std::min(mu_c * config.penalty_growth, 1e8);
        mu_h = std::min(mu_h * config.penalty_growth, 1e8);
        rho = 1.0;
      }
    }
  }

  sol.states = planner.unpack(x);
  sol.states[0] = start;
  return finalize(status);
}

}  // namespace shrums
