#include <cmath>

#include "oncodyn/integrator.hpp"
#include "support.hpp"

using namespace oncodyn;
using oncodyn::testing::error_code_of;

TEST_SUITE("integrator") {
  TEST_CASE("linear decay matches the exponential") {
    const VectorField f = [](const Vec3& x) { return Vec3{-x[0], -2.0 * x[1], 0.5 * x[2]}; };
    const Trajectory tr = integrate(f, {1.0, 1.0, 1.0}, 0.0, 3.0);
    CHECK(tr.t_last() == 3.0);
    const Vec3 end = tr.final_state();
    CHECK(std::abs(end[0] - std::exp(-3.0)) < 1e-10);
    CHECK(std::abs(end[1] - std::exp(-6.0)) < 1e-10);
    CHECK(std::abs(end[2] - std::exp(1.5)) < 1e-9);

    for (double t = 0.0; t <= 3.0; t += 0.137) {
      CHECK(std::abs(tr.at(t)[0] - std::exp(-t)) < 1e-8);
    }
  }

  TEST_CASE("harmonic oscillator conserves energy") {
    const VectorField f = [](const Vec3& x) { return Vec3{x[1], -x[0], 0.0}; };
    const Trajectory tr = integrate(f, {1.0, 0.0, 0.0}, 0.0, 20.0);
    const Vec3 end = tr.final_state();
    CHECK(std::abs(end[0] - std::cos(20.0)) < 1e-8);
    CHECK(std::abs(end[1] + std::sin(20.0)) < 1e-8);
  }

  TEST_CASE("stop times are hit exactly") {
    const VectorField f = [](const Vec3& x) { return Vec3{-x[0], 0.0, 0.0}; };
    const std::vector<double> stops{0.1, 0.3333333333333333, 1.7};
    const Trajectory tr = integrate(f, {1.0, 0.0, 0.0}, 0.0, 2.0, {}, stops);
    for (double s : stops) {
      bool found = false;
      for (const auto& smp : tr.samples()) found = found || smp.t == s;
      CHECK(found);
    }
  }

  TEST_CASE("backward integration is ordered and ends at t0") {
    const VectorField f = [](const Vec3& x) { return Vec3{-x[0], 0.0, 0.0}; };
    const Trajectory tr = integrate_backward(f, {1.0, 0.0, 0.0}, 0.0, -1.0);
    CHECK(tr.t_first() == -1.0);
    CHECK(tr.t_last() == 0.0);
    CHECK(std::abs(tr.samples().front().x[0] - std::exp(1.0)) < 1e-9);
    for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr.samples()[i].t > tr.samples()[i - 1].t);
  }

  TEST_CASE("join keeps a single sample at the seam") {
    const VectorField f = [](const Vec3& x) { return Vec3{-x[0], 0.0, 0.0}; };
    const Trajectory back = integrate_backward(f, {1.0, 0.0, 0.0}, 0.0, -0.5);
    const Trajectory fwd = integrate(f, {1.0, 0.0, 0.0}, 0.0, 0.5);
    const Trajectory all = Trajectory::join(back, fwd);
    CHECK(all.size() == back.size() + fwd.size() - 1);
    CHECK(std::abs(all.at(0.25)[0] - std::exp(-0.25)) < 1e-8);
  }

  TEST_CASE("errors") {
    const VectorField blowup = [](const Vec3& x) { return Vec3{x[0] * x[0], 0.0, 0.0}; };
    const auto code = error_code_of([&] { (void)integrate(blowup, {1.0, 0, 0}, 0.0, 2.0); });
    CHECK((code == ErrorCode::StepLimitExceeded || code == ErrorCode::NonFiniteDerivative));

    IntegratorSettings few;
    few.max_steps = 3;
    const VectorField osc = [](const Vec3& x) { return Vec3{x[1], -x[0], 0.0}; };
    CHECK(error_code_of([&] { (void)integrate(osc, {1, 0, 0}, 0.0, 100.0, few); }) ==
          ErrorCode::StepLimitExceeded);

    const VectorField nan_field = [](const Vec3&) { return Vec3{NAN, 0.0, 0.0}; };
    CHECK(error_code_of([&] { (void)integrate(nan_field, {1, 0, 0}, 0.0, 1.0); }) ==
          ErrorCode::NonFiniteDerivative);

    IntegratorSettings bad;
    bad.rel_tol = -1.0;
    CHECK(error_code_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);

    const Trajectory tr = integrate(osc, {1, 0, 0}, 0.0, 1.0);
    CHECK(error_code_of([&] { (void)tr.at(1.5); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("empty interval yields one sample") {
    const VectorField f = [](const Vec3& x) { return -1.0 * x; };
    const Trajectory tr = integrate(f, {1, 2, 3}, 1.0, 1.0);
    CHECK(tr.size() == 1);
    CHECK(tr.final_state() == Vec3{1, 2, 3});
  }
}
