#include "oncodyn/tumor_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace oncodyn {

void ModelParams::validate() const {
  const std::array<std::pair<const char*, double>, 11> all{{{"r1", r1},
                                                            {"r2", r2},
                                                            {"r3", r3},
                                                            {"k1", k1},
                                                            {"k2", k2},
                                                            {"k3", k3},
                                                            {"a12", a12},
                                                            {"a13", a13},
                                                            {"a21", a21},
                                                            {"a31", a31},
                                                            {"d3", d3}}};
  for (const auto& [name, value] : all) {
    if (!std::isfinite(value) || !(value > 0.0)) {
      throw Error(ErrorCode::InvalidArgument,
                  std::string("model parameter ") + name + " must be finite and > 0");
    }
  }
}

std::vector<std::string> ModelParams::warnings() const {
  std::vector<std::string> w;
  if (!(r1 > r2)) w.emplace_back("r1 <= r2: tumor does not proliferate faster than host tissue");
  return w;
}

RateModel concrete_model(const ModelParams& p, H2Sign h2_sign) {
  p.validate();
  const double s2 = h2_sign == H2Sign::GeneralMinus ? 1.0 : -1.0;
  RateModel m;
  m.B1 = {[=](double x1) { return p.r1 * x1 * (1.0 - x1 / p.k1); },
          [=](double x1) { return p.r1 * (1.0 - 2.0 * x1 / p.k1); }};
  m.B2 = {[=](double x2) { return p.r2 * x2 * (1.0 - x2 / p.k2); },
          [=](double x2) { return p.r2 * (1.0 - 2.0 * x2 / p.k2); }};
  m.D2 = {[](double) { return 0.0; }, [](double) { return 0.0; }};
  m.D3 = {[=](double x3) { return p.d3 * x3; }, [=](double) { return p.d3; }};
  m.D1 = {[=](double x1, double x2) { return p.a12 * x1 * x2; },
          [=](double, double x2) { return p.a12 * x2; },
          [=](double x1, double) { return p.a12 * x1; }};
  m.h1 = {[=](double x1, double x3) { return p.a13 * x1 * x3; },
          [=](double, double x3) { return p.a13 * x3; },
          [=](double x1, double) { return p.a13 * x1; }};
  m.h2 = {[=](double x1, double x2) { return s2 * p.a21 * x1 * x2; },
          [=](double, double x2) { return s2 * p.a21 * x2; },
          [=](double x1, double) { return s2 * p.a21 * x1; }};
  m.B3 = {[=](double x1, double x3) { return p.r3 * x1 * x3 / (x1 + p.k3); },
          [=](double x1, double x3) {
            const double den = x1 + p.k3;
            return p.r3 * p.k3 * x3 / (den * den);
          },
          [=](double x1, double) { return p.r3 * x1 / (x1 + p.k3); }};
  m.h3 = {[=](double x1, double x3) { return p.a31 * x1 * x3; },
          [=](double, double x3) { return p.a31 * x3; },
          [=](double x1, double) { return p.a31 * x1; }};
  return m;
}

namespace {

Vec3 rhs_unchecked(const RateModel& m, const Vec3& x) {
  const double x1 = x[0], x2 = x[1], x3 = x[2];
  return {m.B1.value(x1) - m.D1.value(x1, x2) - m.h1.value(x1, x3),
          m.B2.value(x2) - m.D2.value(x2) - m.h2.value(x1, x2),
          m.B3.value(x1, x3) - m.D3.value(x3) - m.h3.value(x1, x3)};
}

}  // namespace

Vec3 eval_rhs(const RateModel& m, const Vec3& x) {
  Vec3 f = rhs_unchecked(m, x);
  if (!f.finite()) throw Error(ErrorCode::NonFiniteDerivative, "rate callback returned NaN/Inf");
  return f;
}

Mat3 jacobian(const RateModel& m, const Vec3& x) {
  const double x1 = x[0], x2 = x[1], x3 = x[2];
  Mat3 j;
  j(0, 0) = m.B1.deriv(x1) - m.D1.d_first(x1, x2) - m.h1.d_first(x1, x3);
  j(0, 1) = -m.D1.d_second(x1, x2);
  j(0, 2) = -m.h1.d_second(x1, x3);
  j(1, 0) = -m.h2.d_first(x1, x2);
  j(1, 1) = m.B2.deriv(x2) - m.D2.deriv(x2) - m.h2.d_second(x1, x2);
  j(1, 2) = 0.0;
  j(2, 0) = m.B3.d_first(x1, x3) - m.h3.d_first(x1, x3);
  j(2, 1) = 0.0;
  j(2, 2) = m.B3.d_second(x1, x3) - m.D3.deriv(x3) - m.h3.d_second(x1, x3);
  if (!j.finite()) throw Error(ErrorCode::NonFiniteDerivative, "derivative callback returned NaN/Inf");
  return j;
}

double divergence(const RateModel& model, const Vec3& x) { return jacobian(model, x).trace(); }

VectorField as_vector_field(const RateModel& model) {
  // Trial stages may leave the domain; the integrator rejects those steps itself.
  return [model](const Vec3& x) { return rhs_unchecked(model, x); };
}

std::vector<DerivativeMismatch> validate_rate_model(const RateModel& m,
                                                   const std::vector<Vec3>& points,
                                                   double rel_tol) {
  std::vector<DerivativeMismatch> out;
  auto compare = [&](const std::string& term, const Vec3& at, double analytic,
                     const std::function<double(double)>& g, double u) {
    const double h = 1e-6 * std::max(1.0, std::abs(u));
    const double numeric = (g(u + h) - g(u - h)) / (2.0 * h);
    const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
    if (std::abs(analytic - numeric) > rel_tol * scale) out.push_back({term, at, analytic, numeric});
  };
  for (const Vec3& p : points) {
    const double x1 = p[0], x2 = p[1], x3 = p[2];
    compare("B1'", p, m.B1.deriv(x1), m.B1.value, x1);
    compare("B2'", p, m.B2.deriv(x2), m.B2.value, x2);
    compare("D2'", p, m.D2.deriv(x2), m.D2.value, x2);
    compare("D3'", p, m.D3.deriv(x3), m.D3.value, x3);
    auto binary = [&](const std::string& name, const BinaryRate& r, double u, double w) {
      compare(name + "_u", p, r.d_first(u, w), [&](double a) { return r.value(a, w); }, u);
      compare(name + "_w", p, r.d_second(u, w), [&](double b) { return r.value(u, b); }, w);
    };
    binary("D1", m.D1, x1, x2);
    binary("h1", m.h1, x1, x3);
    binary("h2", m.h2, x1, x2);
    binary("B3", m.B3, x1, x3);
    binary("h3", m.h3, x1, x3);
  }
  return out;
}

void InvariantBox::validate() const {
  if (!(K1 >= 1.0) || !(K2 >= 1.0) || !(K3 >= 1.0) || !std::isfinite(K1) ||
      !std::isfinite(K2) || !std::isfinite(K3)) {
    throw Error(ErrorCode::InvalidArgument, "invariant box bounds must be finite and >= 1");
  }
}

// ---------------------------------------------------------------------------
// Structural verification

namespace {

enum class Rel { Positive, NonNegative, Zero, NonZero };

constexpr double kZeroTol = 1e-12;

class ItemChecker {
 public:
  ItemChecker(std::string description, Rel rel) : rel_(rel) { item_.description = std::move(description); }

  void observe(const Vec3& at, double g) {
    item_.evaluated = true;
    bool ok = true;
    double amount = 0.0;
    switch (rel_) {
      case Rel::Positive:
        ok = g > 0.0;
        amount = -g;
        break;
      case Rel::NonNegative:
        ok = g >= 0.0;
        amount = -g;
        break;
      case Rel::Zero:
        ok = std::abs(g) <= kZeroTol;
        amount = std::abs(g);
        break;
      case Rel::NonZero:
        ok = std::abs(g) > kZeroTol;
        amount = kZeroTol - std::abs(g);
        break;
    }
    if (!std::isfinite(g)) {
      ok = false;
      amount = std::numeric_limits<double>::infinity();
    }
    if (ok) return;
    if (item_.passed || amount > item_.worst_violation) {
      item_.worst_violation = amount;
      item_.witness = at;
    }
    item_.passed = false;
  }

  [[nodiscard]] StructuralItem result() const { return item_; }

 private:
  StructuralItem item_;
  Rel rel_;
};

struct Check {
  ItemChecker checker;
  std::function<bool(const Vec3&)> domain;
  std::function<double(const Vec3&)> g;
};

bool pos(double v) { return v > 0.0; }

}  // namespace

bool StructuralReport::all_passed() const {
  return std::all_of(clauses.begin(), clauses.end(), [](const StructuralClause& c) { return c.passed; });
}

StructuralReport verify_structural(const RateModel& m, const InvariantBox& box, int grid_n) {
  if (grid_n < 2) throw Error(ErrorCode::InvalidArgument, "grid_n must be >= 2");
  box.validate();

  using V = const Vec3&;
  auto any = [](V) { return true; };
  auto x1_pos = [](V x) { return pos(x[0]); };
  auto x2_pos = [](V x) { return pos(x[1]); };
  auto x3_pos = [](V x) { return pos(x[2]); };
  auto x12_pos = [](V x) { return pos(x[0]) && pos(x[1]); };
  auto x13_pos = [](V x) { return pos(x[0]) && pos(x[2]); };
  auto x1_zero = [](V x) { return x[0] == 0.0; };
  auto x2_zero = [](V x) { return x[1] == 0.0; };
  auto x3_zero = [](V x) { return x[2] == 0.0; };
  const double K1 = box.K1, K2 = box.K2, K3 = box.K3;
  auto corner_x1 = [K1, K2, K3](V x) {
    return x[0] == K1 && (x[1] == 0.0 || x[1] == K2) && (x[2] == 0.0 || x[2] == K3);
  };
  auto corner_x2 = [K1, K2, K3](V x) {
    return x[1] == K2 && (x[0] == 0.0 || x[0] == K1) && (x[2] == 0.0 || x[2] == K3);
  };

  std::array<std::vector<Check>, 6> checks;
  auto add = [&](int clause, std::string text, Rel rel, std::function<bool(const Vec3&)> dom,
                 std::function<double(const Vec3&)> g) {
    checks[static_cast<std::size_t>(clause - 1)].push_back(
        {ItemChecker(std::move(text), rel), std::move(dom), std::move(g)});
  };

  // (1) growth and death of tumor and host cells
  add(1, "B1(x1) > 0 for x1 > 0", Rel::Positive, x1_pos, [&](V x) { return m.B1.value(x[0]); });
  add(1, "B2(x2) > 0 for x2 > 0", Rel::Positive, x2_pos, [&](V x) { return m.B2.value(x[1]); });
  add(1, "D1(x1,x2) > 0 for x1,x2 > 0", Rel::Positive, x12_pos,
      [&](V x) { return m.D1.value(x[0], x[1]); });
  add(1, "D2(x2) > 0 for x2 > 0", Rel::Positive, x2_pos, [&](V x) { return m.D2.value(x[1]); });
  add(1, "B1(0) = 0", Rel::Zero, x1_zero, [&](V) { return m.B1.value(0.0); });
  add(1, "D1(0,x2) = 0", Rel::Zero, x1_zero, [&](V x) { return m.D1.value(0.0, x[1]); });
  add(1, "dB1/dx1 > 0 for x1 > 0", Rel::Positive, x1_pos, [&](V x) { return m.B1.deriv(x[0]); });
  add(1, "dB2/dx2 > 0 for x2 > 0", Rel::Positive, x2_pos, [&](V x) { return m.B2.deriv(x[1]); });
  add(1, "dD1/dx1 > 0 for x1,x2 > 0", Rel::Positive, x12_pos,
      [&](V x) { return m.D1.d_first(x[0], x[1]); });
  add(1, "dD2/dx2 > 0 for x2 > 0", Rel::Positive, x2_pos, [&](V x) { return m.D2.deriv(x[1]); });
  add(1, "dB1/dx1(0) > dD1/dx1(0,x2)", Rel::Positive, x1_zero,
      [&](V x) { return m.B1.deriv(0.0) - m.D1.d_first(0.0, x[1]); });
  add(1, "dB2/dx2(0) > dD2/dx2(0)", Rel::Positive, x2_zero,
      [&](V) { return m.B2.deriv(0.0) - m.D2.deriv(0.0); });

  // (2) tumor-immune interaction terms h1, h3
  add(2, "h1(x1,x3) > 0 for x1,x3 > 0", Rel::Positive, x13_pos,
      [&](V x) { return m.h1.value(x[0], x[2]); });
  add(2, "h3(x1,x3) > 0 for x1,x3 > 0", Rel::Positive, x13_pos,
      [&](V x) { return m.h3.value(x[0], x[2]); });
  add(2, "h1(0,x3) = 0", Rel::Zero, x1_zero, [&](V x) { return m.h1.value(0.0, x[2]); });
  add(2, "h3(0,x3) = 0", Rel::Zero, x1_zero, [&](V x) { return m.h3.value(0.0, x[2]); });
  add(2, "h1(x1,0) = 0", Rel::Zero, x3_zero, [&](V x) { return m.h1.value(x[0], 0.0); });
  add(2, "h3(x1,0) = 0", Rel::Zero, x3_zero, [&](V x) { return m.h3.value(x[0], 0.0); });
  add(2, "dh1/dx1 >= 0", Rel::NonNegative, any, [&](V x) { return m.h1.d_first(x[0], x[2]); });
  add(2, "dh3/dx3 >= 0", Rel::NonNegative, any, [&](V x) { return m.h3.d_second(x[0], x[2]); });

  // (3) tumor-host interaction h2 and the boundary derivatives of h1, h3
  add(3, "h2(x1,x2) > 0 for x1,x2 > 0", Rel::Positive, x12_pos,
      [&](V x) { return m.h2.value(x[0], x[1]); });
  add(3, "h2(x1,0) = 0", Rel::Zero, x2_zero, [&](V x) { return m.h2.value(x[0], 0.0); });
  add(3, "h2(0,x2) = 0", Rel::Zero, x1_zero, [&](V x) { return m.h2.value(0.0, x[1]); });
  add(3, "dh2/dx1(0,x2) != 0 for x2 > 0", Rel::NonZero,
      [](V x) { return x[0] == 0.0 && pos(x[1]); }, [&](V x) { return m.h2.d_first(0.0, x[1]); });
  add(3, "dh2/dx2(0,x2) = 0", Rel::Zero, x1_zero, [&](V x) { return m.h2.d_second(0.0, x[1]); });
  add(3, "dh1/dx1(0,x3) != 0 for x3 > 0", Rel::NonZero,
      [](V x) { return x[0] == 0.0 && pos(x[2]); }, [&](V x) { return m.h1.d_first(0.0, x[2]); });
  add(3, "dh3/dx1(0,x3) != 0 for x3 > 0", Rel::NonZero,
      [](V x) { return x[0] == 0.0 && pos(x[2]); }, [&](V x) { return m.h3.d_first(0.0, x[2]); });
  add(3, "dh1/dx3(0,x3) = 0", Rel::Zero, x1_zero, [&](V x) { return m.h1.d_second(0.0, x[2]); });
  add(3, "dh3/dx3(0,x3) = 0", Rel::Zero, x1_zero, [&](V x) { return m.h3.d_second(0.0, x[2]); });
  add(3, "dh2/dx2 >= 0", Rel::NonNegative, any, [&](V x) { return m.h2.d_second(x[0], x[1]); });

  // (4) immune stimulation
  add(4, "B3(x1,x3) > 0 for x1,x3 > 0", Rel::Positive, x13_pos,
      [&](V x) { return m.B3.value(x[0], x[2]); });
  add(4, "dB3/dx1 > 0 for x1,x3 > 0", Rel::Positive, x13_pos,
      [&](V x) { return m.B3.d_first(x[0], x[2]); });
  add(4, "dB3/dx3 > 0 for x1,x3 > 0", Rel::Positive, x13_pos,
      [&](V x) { return m.B3.d_second(x[0], x[2]); });
  add(4, "B3(x1,0) = 0", Rel::Zero, x3_zero, [&](V x) { return m.B3.value(x[0], 0.0); });
  add(4, "B3(0,x3) = 0", Rel::Zero, x1_zero, [&](V x) { return m.B3.value(0.0, x[2]); });
  add(4, "dB3/dx3 < d/dx3[D3 - h3] for x1,x3 > 0", Rel::Positive, x13_pos, [&](V x) {
    return m.D3.deriv(x[2]) - m.h3.d_second(x[0], x[2]) - m.B3.d_second(x[0], x[2]);
  });

  // (5) immune natural death
  add(5, "D3(x3) > 0 for x3 > 0", Rel::Positive, x3_pos, [&](V x) { return m.D3.value(x[2]); });
  add(5, "D3(0) = 0", Rel::Zero, x3_zero, [&](V) { return m.D3.value(0.0); });
  add(5, "dD3/dx3 > 0 for x3 > 0", Rel::Positive, x3_pos, [&](V x) { return m.D3.deriv(x[2]); });

  // (6) box boundary and dissipativity
  add(6, "B1(K1) = D1(K1,x2) at box corners", Rel::Zero, corner_x1,
      [&](V x) { return m.B1.value(x[0]) - m.D1.value(x[0], x[1]); });
  add(6, "dB1/dx1(K1) < dD1/dx1(K1,x2) at box corners", Rel::Positive, corner_x1,
      [&](V x) { return m.D1.d_first(x[0], x[1]) - m.B1.deriv(x[0]); });
  add(6, "B2(K2) = D2(K2) at box corners", Rel::Zero, corner_x2,
      [&](V x) { return m.B2.value(x[1]) - m.D2.value(x[1]); });
  add(6, "dB2/dx2(K2) < dD2/dx2(K2) at box corners", Rel::Positive, corner_x2,
      [&](V x) { return m.D2.deriv(x[1]) - m.B2.deriv(x[1]); });
  add(6, "dB1/dx1 < d/dx1[D1 - h1]", Rel::Positive, any, [&](V x) {
    return m.D1.d_first(x[0], x[1]) - m.h1.d_first(x[0], x[2]) - m.B1.deriv(x[0]);
  });
  add(6, "dB2/dx2 < d/dx2[D2 - h2]", Rel::Positive, any, [&](V x) {
    return m.D2.deriv(x[1]) - m.h2.d_second(x[0], x[1]) - m.B2.deriv(x[1]);
  });
  add(6, "divergence < 0 on O_K", Rel::Positive, any, [&](V x) { return -divergence(m, x); });

  StructuralReport report;
  report.grid_n = grid_n;
  report.box = box;
  report.divergence_max = -std::numeric_limits<double>::infinity();

  const double denom = static_cast<double>(grid_n - 1);
  auto coord = [denom, grid_n](double K, int i) { return i == grid_n - 1 ? K : K * i / denom; };
  for (int i = 0; i < grid_n; ++i) {
    for (int j = 0; j < grid_n; ++j) {
      for (int k = 0; k < grid_n; ++k) {
        const Vec3 x{coord(K1, i), coord(K2, j), coord(K3, k)};
        const double div = divergence(m, x);
        if (div > report.divergence_max) {
          report.divergence_max = div;
          report.divergence_argmax = x;
        }
        for (auto& clause : checks) {
          for (auto& c : clause) {
            if (c.domain(x)) c.checker.observe(x, c.g(x));
          }
        }
      }
    }
  }

  static constexpr std::array<const char*, 6> kSummaries{
      "growth and death of tumor and host cells",
      "tumor-immune interaction terms h1, h3",
      "tumor-host interaction term h2",
      "immune stimulation B3",
      "immune natural death D3",
      "box boundary conditions and dissipativity"};
  for (std::size_t c = 0; c < 6; ++c) {
    StructuralClause& out = report.clauses[c];
    out.number = static_cast<int>(c) + 1;
    out.summary = kSummaries[c];
    for (const auto& chk : checks[c]) {
      StructuralItem item = chk.checker.result();
      if (!item.passed && (out.passed || item.worst_violation > out.worst_violation)) {
        out.worst_violation = item.worst_violation;
        out.witness = item.witness;
      }
      out.passed = out.passed && item.passed;
      out.items.push_back(std::move(item));
    }
  }
  return report;
}

double positivity_trajectory_check(const RateModel& model, const std::vector<Vec3>& starts,
                                   double horizon, const IntegratorSettings& settings) {
  double lowest = std::numeric_limits<double>::infinity();
  const VectorField f = as_vector_field(model);
  for (const Vec3& s : starts) {
    if (s.min_component() < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "positivity check needs nonnegative starts");
    }
    const Trajectory traj = integrate(f, s, 0.0, horizon, settings);
    const auto& samples = traj.samples();
    for (std::size_t i = 0; i < samples.size(); ++i) {
      lowest = std::min(lowest, samples[i].x.min_component());
      if (i > 0) {
        const double mid = 0.5 * (samples[i - 1].t + samples[i].t);
        lowest = std::min(lowest, traj.at(mid).min_component());
      }
    }
  }
  return lowest;
}

}  // namespace oncodyn
