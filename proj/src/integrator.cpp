#include "oncodyn/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace oncodyn {

void IntegratorSettings::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "integrator tolerances must be > 0");
  }
  if (!(max_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "max_step must be > 0");
  if (max_steps <= 0) throw Error(ErrorCode::InvalidArgument, "max_steps must be > 0");
}

// ---------------------------------------------------------------------------
// Trajectory

Trajectory::Trajectory(std::vector<Sample> samples) : samples_(std::move(samples)) {
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    if (!(samples_[i].t > samples_[i - 1].t)) {
      throw Error(ErrorCode::InvalidArgument, "trajectory times must be strictly increasing");
    }
  }
}

Vec3 Trajectory::at(double t) const {
  if (samples_.empty()) throw Error(ErrorCode::InvalidArgument, "empty trajectory");
  if (t < t_first() || t > t_last() || std::isnan(t)) {
    throw Error(ErrorCode::InvalidArgument,
                "time " + std::to_string(t) + " outside trajectory range");
  }
  auto it = std::lower_bound(samples_.begin(), samples_.end(), t,
                             [](const Sample& s, double v) { return s.t < v; });
  if (it->t == t) return it->x;
  const Sample& hi = *it;
  const Sample& lo = *(it - 1);
  const double h = hi.t - lo.t;
  const double s = (t - lo.t) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * lo.x + (h10 * h) * lo.dxdt + h01 * hi.x + (h11 * h) * hi.dxdt;
}

Trajectory Trajectory::join(const Trajectory& before, const Trajectory& after) {
  if (before.empty()) return after;
  if (after.empty()) return before;
  if (before.t_last() != after.t_first()) {
    throw Error(ErrorCode::InvalidArgument, "trajectories do not share an endpoint");
  }
  std::vector<Sample> all(before.samples_);
  all.insert(all.end(), after.samples_.begin() + 1, after.samples_.end());
  return Trajectory(std::move(all));
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)

namespace {

constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

double error_norm(const Vec3& err, const Vec3& y0, const Vec3& y1,
                  const IntegratorSettings& s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double sc = s.abs_tol + s.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / sc;
    acc += r * r;
  }
  return std::sqrt(acc / 3.0);
}

double scaled_norm(const Vec3& v, const Vec3& y, const IntegratorSettings& s) {
  return error_norm(v, y, y, s);
}

Vec3 eval_checked(const VectorField& f, const Vec3& x, double t) {
  Vec3 d = f(x);
  if (!d.finite()) {
    throw Error(ErrorCode::NonFiniteDerivative,
                "vector field returned a non-finite value at t=" + std::to_string(t));
  }
  return d;
}

// Integrates in the "arc" variable s in [0, length]; the physical time is
// t0 + direction * s. Samples are returned in order of increasing s.
std::vector<Trajectory::Sample> run(const VectorField& f, const Vec3& v0, double t0,
                                    double t_final, double length, double direction,
                                    const IntegratorSettings& settings,
                                    std::span<const double> stops) {
  settings.validate();
  if (!v0.finite()) throw Error(ErrorCode::InvalidArgument, "initial state is not finite");

  // (arc position, exact physical time) of every point that must be hit.
  std::vector<std::pair<double, double>> targets;
  for (double st : stops) {
    const double s = (st - t0) * direction;
    if (s > 0.0 && s < length) targets.emplace_back(s, st);
  }
  targets.emplace_back(length, t_final);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end(),
                            [](const auto& a, const auto& b) { return a.first == b.first; }),
                targets.end());

  auto time_of = [&](double s) { return t0 + direction * s; };
  auto g = [&](const Vec3& x, double s) { return direction * eval_checked(f, x, time_of(s)); };

  std::vector<Trajectory::Sample> out;
  Vec3 y = v0;
  Vec3 k1 = g(y, 0.0);
  out.push_back({t0, y, direction * k1});
  if (length == 0.0) return out;

  const double h_floor = 1e-14 * length;

  // Initial step guess (Hairer, Norsett & Wanner II.4).
  double h;
  {
    const double d0 = scaled_norm(y, y, settings);
    const double d1 = scaled_norm(k1, y, settings);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, length);
    const Vec3 y1 = y + h0 * k1;
    const Vec3 f1 = direction * f(y1);
    double d2 = f1.finite() ? scaled_norm(f1 - k1, y, settings) / h0 : 0.0;
    const double m = std::max(d1, d2);
    const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
    h = std::min({100.0 * h0, h1, settings.max_step});
  }

  double s = 0.0;
  std::size_t next = 0;
  long steps = 0;
  bool last_rejected = false;
  while (next < targets.size()) {
    if (++steps > settings.max_steps) {
      throw Error(ErrorCode::StepLimitExceeded,
                  "max_steps exhausted at t=" + std::to_string(time_of(s)));
    }
    const double remaining = targets[next].first - s;
    bool lands = false;
    if (h >= remaining) {
      h = remaining;
      lands = true;
    }
    if (h < h_floor && !lands) {
      throw Error(ErrorCode::StepLimitExceeded,
                  "step size underflow at t=" + std::to_string(time_of(s)));
    }

    const Vec3 k2 = direction * f(y + h * (a21 * k1));
    const Vec3 k3 = direction * f(y + h * (a31 * k1 + a32 * k2));
    const Vec3 k4 = direction * f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec3 k5 = direction * f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec3 k6 =
        direction * f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vec3 y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec3 k7 = y_new.finite() ? direction * f(y_new) : Vec3{NAN, NAN, NAN};

    double err = std::numeric_limits<double>::infinity();
    if (k2.finite() && k3.finite() && k4.finite() && k5.finite() && k6.finite() &&
        k7.finite()) {
      const Vec3 e = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      err = error_norm(e, y, y_new, settings);
    }

    if (err <= 1.0) {
      double t_new;
      if (lands) {
        s = targets[next].first;
        t_new = targets[next].second;
        ++next;
      } else {
        s += h;
        t_new = time_of(s);
      }
      y = y_new;
      k1 = k7;
      out.push_back({t_new, y, direction * k1});
      double fac = err == 0.0 ? 5.0 : 0.9 * std::pow(err, -0.2);
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
      h = std::min(h * fac, settings.max_step);
      last_rejected = false;
    } else {
      const double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
      h *= fac;
      last_rejected = true;
      if (h < h_floor) {
        throw Error(ErrorCode::StepLimitExceeded,
                    "step size underflow at t=" + std::to_string(time_of(s)));
      }
    }
  }
  return out;
}

}  // namespace

Trajectory integrate(const VectorField& rhs, const Vec3& v0, double t0, double t_end,
                     const IntegratorSettings& settings, std::span<const double> stops) {
  if (!(t_end >= t0)) throw Error(ErrorCode::InvalidArgument, "integrate requires t_end >= t0");
  return Trajectory(run(rhs, v0, t0, t_end, t_end - t0, 1.0, settings, stops));
}

Trajectory integrate_backward(const VectorField& rhs, const Vec3& v0, double t0,
                              double t_begin, const IntegratorSettings& settings,
                              std::span<const double> stops) {
  if (!(t_begin <= t0)) {
    throw Error(ErrorCode::InvalidArgument, "integrate_backward requires t_begin <= t0");
  }
  auto samples = run(rhs, v0, t0, t_begin, t0 - t_begin, -1.0, settings, stops);
  std::reverse(samples.begin(), samples.end());
  return Trajectory(std::move(samples));
}

}  // namespace oncodyn
