#include "oncodyn/basin.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "oncodyn/sampling.hpp"

namespace oncodyn {

void SamplingPlan::validate() const {
  if (n_samples <= 0) throw Error(ErrorCode::InvalidArgument, "n_samples must be > 0");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw Error(ErrorCode::InvalidArgument, "horizon must be finite and >= 0");
  }
  if (!(convergence_radius > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "convergence_radius must be > 0");
  }
  if (!(escape_multiplier > 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "escape_multiplier must be > 1");
  }
  if (threads <= 0) throw Error(ErrorCode::InvalidArgument, "threads must be > 0");
  if (keep_trajectories < 0) throw Error(ErrorCode::InvalidArgument, "keep_trajectories < 0");
  integrator.validate();
}

namespace {

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
// visited exactly once; callers write only to slot i.
template <class Body>
void parallel_for(int n, int threads, Body&& body) {
  const int workers = std::clamp(threads, 1, std::max(1, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct Cholesky {
  std::array<double, 9> l{};  // lower triangle, row-major
};

Cholesky cholesky(const SymMat3& p) {
  Cholesky c;
  auto L = [&](std::size_t i, std::size_t j) -> double& { return c.l[3 * i + j]; };
  for (std::size_t j = 0; j < 3; ++j) {
    double d = p(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (!(d > 0.0)) throw Error(ErrorCode::InvalidArgument, "P is not positive definite");
    L(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < 3; ++i) {
      double s = p(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / L(j, j);
    }
  }
  return c;
}

// Solves L^T y = z.
Vec3 solve_upper(const Cholesky& c, const Vec3& z) {
  auto L = [&](std::size_t i, std::size_t j) { return c.l[3 * i + j]; };
  Vec3 y;
  for (int i = 2; i >= 0; --i) {
    double s = z[static_cast<std::size_t>(i)];
    for (std::size_t k = static_cast<std::size_t>(i) + 1; k < 3; ++k) {
      s -= L(k, static_cast<std::size_t>(i)) * y[k];
    }
    y[static_cast<std::size_t>(i)] = s / L(static_cast<std::size_t>(i), static_cast<std::size_t>(i));
  }
  return y;
}

double escape_radius_for(const LyapunovCertificate& cert, const std::vector<Vec3>& samples,
                         const SamplingPlan& plan) {
  double far = 0.0;
  for (const Vec3& s : samples) far = std::max(far, (s - cert.center()).norm2());
  return plan.escape_multiplier * std::max(far, plan.convergence_radius);
}

}  // namespace

double verified_decrease_radius(const VectorField& f, const LyapunovCertificate& cert,
                                double r_max, int n_shell_samples, std::uint64_t seed,
                                double eps_decay) {
  if (!cert.pd_sylvester) {
    throw Error(ErrorCode::InvalidArgument, "certificate matrix is not positive definite");
  }
  if (!(r_max > 0.0) || !std::isfinite(r_max)) {
    throw Error(ErrorCode::InvalidArgument, "r_max must be finite and > 0");
  }
  if (n_shell_samples <= 0) throw Error(ErrorCode::InvalidArgument, "n_shell_samples must be > 0");

  const Halton3 halton(substream_seed(seed, "decrease"));
  struct Direction {
    double depth;  // interior fraction of the radius
    Vec3 d;
  };
  const std::size_t max_dirs = 1000 * static_cast<std::size_t>(n_shell_samples);
  std::vector<Direction> dirs;
  auto direction = [&](std::size_t i) -> const Direction& {
    while (dirs.size() <= i) {
      const auto u = halton.point(dirs.size());
      dirs.push_back({std::cbrt(u[0]), sphere_point(u[1], u[2])});
    }
    return dirs[i];
  };

  const Vec3& c = cert.center();
  auto passes = [&](double r) {
    int admissible = 0;
    for (std::size_t i = 0; i < max_dirs && admissible < n_shell_samples; ++i) {
      const Direction& dir = direction(i);
      for (double scale : {1.0, dir.depth}) {
        const Vec3 x = c + (r * scale) * dir.d;
        if (x.min_component() < 0.0) continue;
        const double v = v_value(cert, x);
        if (!(v > 0.0)) continue;
        ++admissible;
        if (!(v_dot(f, cert, x) < -eps_decay * v)) return false;
      }
    }
    return admissible > 0;
  };

  if (passes(r_max)) return r_max;
  double lo = 0.0, hi = r_max;
  for (int step = 0; step < 40; ++step) {
    const double mid = 0.5 * (lo + hi);
    if (passes(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (lo == 0.0) {
    throw Error(ErrorCode::NoPositiveRadius, "V does not decrease on any sampled ball");
  }
  return lo;
}

double verified_decrease_radius(const RateModel& model, const LyapunovCertificate& cert,
                                double r_max, int n_shell_samples, std::uint64_t seed,
                                double eps_decay) {
  return verified_decrease_radius(as_vector_field(model), cert, r_max, n_shell_samples, seed,
                                  eps_decay);
}

double level_from_radius(const LyapunovCertificate& cert, double r, double margin) {
  if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius must be > 0");
  if (!(cert.lambda_min > 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda_min must be > 0");
  if (!(margin >= 0.0 && margin < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "margin must lie in [0, 1)");
  }
  return (1.0 - margin) * cert.lambda_min * r * r;
}

std::vector<Vec3> sample_sublevel(const LyapunovCertificate& cert, double C,
                                  const SamplingPlan& plan) {
  plan.validate();
  if (!(C >= 0.0) || !std::isfinite(C)) {
    throw Error(ErrorCode::InvalidArgument, "level C must be finite and >= 0");
  }
  const auto n = static_cast<std::size_t>(plan.n_samples);
  if (C == 0.0) return std::vector<Vec3>(n, cert.center());

  const Cholesky chol = cholesky(cert.p);
  const double scale = std::sqrt(C);
  const Halton3 halton(substream_seed(plan.seed, "basin"));
  std::vector<Vec3> out;
  out.reserve(n);
  std::uint64_t attempts = 0;
  while (out.size() < n) {
    const Vec3 z = ball_point(halton.point(attempts));
    ++attempts;
    const Vec3 x = cert.center() + scale * solve_upper(chol, z);
    if (x.min_component() >= 0.0) out.push_back(x);
    if (attempts >= 10000 && static_cast<double>(out.size()) < 1e-4 * static_cast<double>(attempts)) {
      throw Error(ErrorCode::EmptyRegion, "sublevel set barely meets the nonnegative octant");
    }
  }
  return out;
}

RunOutcome check_convergence(const VectorField& f, const LyapunovCertificate& cert,
                             const Vec3& start, const SamplingPlan& plan, double escape_radius,
                             Trajectory* keep) {
  if (!(plan.horizon > 0.0)) return RunOutcome::Undecided;
  Trajectory traj;
  try {
    traj = integrate(f, start, 0.0, plan.horizon, plan.integrator);
  } catch (const Error&) {
    return RunOutcome::Undecided;
  }
  const Vec3& c = cert.center();
  bool monotone = true;
  bool escaped = false;
  double prev = v_value(cert, start);
  for (const auto& s : traj.samples()) {
    const double v = v_value(cert, s.x);
    if (v > prev + 1e-9) monotone = false;
    prev = v;
    if ((s.x - c).norm2() > escape_radius) escaped = true;
  }
  if (keep) *keep = traj;
  if (escaped) return RunOutcome::Escaped;
  const double final_distance = (traj.final_state() - c).norm2();
  return final_distance < plan.convergence_radius && monotone ? RunOutcome::Converged
                                                              : RunOutcome::Undecided;
}

BasinCertificate monte_carlo_verify(const VectorField& f, const LyapunovCertificate& cert,
                                    double C, const SamplingPlan& plan) {
  const std::vector<Vec3> samples = sample_sublevel(cert, C, plan);
  const double escape = escape_radius_for(cert, samples, plan);
  const int n = static_cast<int>(samples.size());
  const int keep = std::min(plan.keep_trajectories, n);

  std::vector<RunOutcome> outcome(samples.size(), RunOutcome::Undecided);
  std::vector<Trajectory> kept(static_cast<std::size_t>(keep));
  parallel_for(n, plan.threads, [&](int i) {
    Trajectory* slot = i < keep ? &kept[static_cast<std::size_t>(i)] : nullptr;
    outcome[static_cast<std::size_t>(i)] =
        check_convergence(f, cert, samples[static_cast<std::size_t>(i)], plan, escape, slot);
  });

  BasinCertificate b;
  b.cert = cert;
  b.level_C = C;
  b.mc_total = n;
  for (RunOutcome o : outcome) {
    if (o == RunOutcome::Converged) {
      ++b.mc_converged;
    } else {
      ++b.mc_escaped_or_undecided;
      if (o == RunOutcome::Escaped) ++b.mc_escaped;
    }
  }
  b.trajectories = std::move(kept);
  return b;
}

BasinCertificate monte_carlo_verify(const RateModel& model, const LyapunovCertificate& cert,
                                    double C, const SamplingPlan& plan) {
  return monte_carlo_verify(as_vector_field(model), cert, C, plan);
}

MultipointProbeTallies multipoint_basin_probe(const VectorField& f,
                                              const MultipointCondition& cond_template,
                                              const LyapunovCertificate& cert, double C,
                                              const SamplingPlan& plan,
                                              const FixedPointSettings& fp) {
  cond_template.validate();
  const std::vector<Vec3> samples = sample_sublevel(cert, C, plan);
  const double escape = escape_radius_for(cert, samples, plan);
  double t_end = cond_template.t0;
  for (double t : cond_template.phase_times) t_end = std::max(t_end, t);
  if (!(t_end > cond_template.t0)) t_end = cond_template.t0 + 1e-6;

  enum class Probe { InConverged, InNotConverged, Left, Negative, NoContraction, Failed };
  std::vector<Probe> result(samples.size(), Probe::Failed);
  parallel_for(static_cast<int>(samples.size()), plan.threads, [&](int i) {
    const auto idx = static_cast<std::size_t>(i);
    MultipointCondition cond = cond_template;
    cond.x0 = samples[idx];
    Vec3 v0;
    try {
      v0 = solve_multipoint(f, cond, t_end, fp).v0;
    } catch (const Error& e) {
      result[idx] = e.code() == ErrorCode::NoContraction ? Probe::NoContraction : Probe::Failed;
      return;
    }
    if (v0.min_component() < 0.0) {
      result[idx] = Probe::Negative;
    } else if (v_value(cert, v0) <= C) {
      result[idx] = check_convergence(f, cert, v0, plan, escape) == RunOutcome::Converged
                        ? Probe::InConverged
                        : Probe::InNotConverged;
    } else {
      result[idx] = Probe::Left;
    }
  });

  MultipointProbeTallies t;
  t.total = static_cast<int>(samples.size());
  for (Probe p : result) {
    switch (p) {
      case Probe::InConverged: ++t.in_level; ++t.in_level_converged; break;
      case Probe::InNotConverged: ++t.in_level; break;
      case Probe::Left: ++t.left_level; break;
      case Probe::Negative: ++t.negative_effective; break;
      case Probe::NoContraction: ++t.no_contraction; break;
      case Probe::Failed: ++t.failed; break;
    }
  }
  return t;
}

MultipointProbeTallies multipoint_basin_probe(const RateModel& model,
                                              const MultipointCondition& cond_template,
                                              const LyapunovCertificate& cert, double C,
                                              const SamplingPlan& plan,
                                              const FixedPointSettings& fp) {
  return multipoint_basin_probe(as_vector_field(model), cond_template, cert, C, plan, fp);
}

}  // namespace oncodyn
