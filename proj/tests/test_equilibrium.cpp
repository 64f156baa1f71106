#include <cmath>

#include "oncodyn/equilibrium.hpp"
#include "support.hpp"

using namespace oncodyn;
using oncodyn::testing::error_code_of;
using oncodyn::testing::fixture_params;
using oncodyn::testing::healthy_stable_params;

namespace {

const Equilibrium* find_kind(const std::vector<Equilibrium>& list, EquilibriumKind k) {
  for (const auto& e : list)
    if (e.kind == k) return &e;
  return nullptr;
}

}  // namespace

TEST_SUITE("equilibrium") {
  TEST_CASE("fixture catalog") {
    const auto list = closed_form_equilibria(fixture_params());
    REQUIRE(list.size() == 4);
    CHECK(find_kind(list, EquilibriumKind::Death)->point == Vec3{0, 0, 0});
    CHECK(find_kind(list, EquilibriumKind::TumorOnly)->point == Vec3{1, 0, 0});
    CHECK(find_kind(list, EquilibriumKind::Healthy)->point == Vec3{0, 1, 0});
    const Equilibrium* ti = find_kind(list, EquilibriumKind::TumorImmune);
    REQUIRE(ti != nullptr);
    // Frozen 30-digit oracle of the x1 quadratic and x3 = (r1 / a13)(1 - x1 / k1).
    CHECK(std::abs(ti->point[0] - 0.13250300240240269) < 1e-12);
    CHECK(ti->point[1] == 0.0);
    CHECK(std::abs(ti->point[2] - 0.52049819855855839) < 1e-12);
    for (const auto& e : list) CHECK(e.rhs_norm < 1e-10);
    CHECK(find_kind(list, EquilibriumKind::TumorHost) == nullptr);
  }

  TEST_CASE("tumor-host point when the isoclines intersect") {
    ModelParams p;
    p.a12 = 0.5;
    p.a21 = 0.5;
    const auto list = closed_form_equilibria(p);
    const Equilibrium* th = find_kind(list, EquilibriumKind::TumorHost);
    REQUIRE(th != nullptr);
    // r1(1 - x1) = a12 x2 and r2(1 - x2) = a21 x1
    CHECK(std::abs(1.5 * (1 - th->point[0]) - 0.5 * th->point[1]) < 1e-12);
    CHECK(std::abs(1.0 * (1 - th->point[1]) - 0.5 * th->point[0]) < 1e-12);
    CHECK(th->rhs_norm < 1e-12);
  }

  TEST_CASE("pattern kinds") {
    CHECK(kind_from_pattern({0, 0, 0}) == EquilibriumKind::Death);
    CHECK(kind_from_pattern({2, 0, 0}) == EquilibriumKind::TumorOnly);
    CHECK(kind_from_pattern({0, 2, 0}) == EquilibriumKind::Healthy);
    CHECK(kind_from_pattern({1, 0, 1}) == EquilibriumKind::TumorImmune);
    CHECK(kind_from_pattern({1, 1, 0}) == EquilibriumKind::TumorHost);
    CHECK(kind_from_pattern({0, 1, 1}) == EquilibriumKind::HostImmune);
    CHECK(kind_from_pattern({1, 1, 1}) == EquilibriumKind::Interior);
    CHECK(kind_from_pattern({1e-9, 1, 0}) == EquilibriumKind::Healthy);
  }

  TEST_CASE("Newton refinement") {
    const RateModel m = concrete_model(fixture_params());
    const Equilibrium e = refine_equilibrium(m, {0.15, 0.0, 0.5});
    CHECK(e.kind == EquilibriumKind::TumorImmune);
    CHECK(std::abs(e.point[0] - 0.13250300240240269) < 1e-10);
    CHECK(e.rhs_norm < 1e-12);
    CHECK(error_code_of([&] { (void)refine_equilibrium(m, {5.0, 5.0, 5.0}, 1e-12, 1); }) ==
          ErrorCode::NoConvergence);
  }

  TEST_CASE("fixture classification") {
    const RateModel m = concrete_model(fixture_params());
    for (const auto& e : closed_form_equilibria(fixture_params())) {
      CAPTURE(to_string(e.kind));
      const StabilityReport r = classify(m, e);
      CHECK(r.eig_class == EigenClass::Unstable);
      CHECK(r.agreement);
    }
    const StabilityReport origin = classify(m, {{0, 0, 0}, EquilibriumKind::Death, 0.0});
    CHECK(origin.jacobian(0, 0) == 1.5);
    CHECK(origin.jacobian(1, 1) == 1.0);
    CHECK(origin.jacobian(2, 2) == -0.5);
    CHECK(origin.criterion.test == "diagonal_sign");
    CHECK(origin.criterion.verdict == CriterionVerdict::Inconclusive);
  }

  TEST_CASE("healthy point is stable when competition is strong") {
    const RateModel m = concrete_model(healthy_stable_params());
    const Equilibrium e{{0, 1, 0}, EquilibriumKind::Healthy, 0.0};
    const StabilityReport r = classify(m, e);
    CHECK(r.jacobian(0, 0) == doctest::Approx(-0.5));
    CHECK(r.jacobian(1, 1) == doctest::Approx(-1.0));
    CHECK(r.jacobian(2, 2) == doctest::Approx(-0.5));
    CHECK(r.jacobian(0, 1) == 0.0);
    CHECK(r.jacobian(1, 0) == doctest::Approx(-1.5));
    CHECK(r.eig_class == EigenClass::Stable);
    CHECK(r.criterion.verdict == CriterionVerdict::StableByCriterion);
    CHECK(r.agreement);

    const ProbeResult pr = simulation_probe(m, e.point, 20, 1e-3, 200.0, 1);
    CHECK(pr.converged == 20);
    CHECK(pr.escaped == 0);

    const ProbeResult unstable = simulation_probe(m, {0, 0, 0}, 10, 1e-3, 50.0, 1);
    CHECK(unstable.escaped > 0);
  }

  TEST_CASE("eigenvalue classes") {
    CHECK(classify_eigenvalues({Complex(-1, 0), Complex(-2, 1), Complex(-2, -1)}) ==
          EigenClass::Stable);
    CHECK(classify_eigenvalues({Complex(-1, 0), Complex(0.1, 0), Complex(-2, 0)}) ==
          EigenClass::Unstable);
    CHECK(classify_eigenvalues({Complex(-1, 0), Complex(0, 1), Complex(0, -1)}) ==
          EigenClass::Marginal);
  }

  TEST_CASE("diagonal sign test") {
    CHECK(diagonal_sign_test(Mat3::diag(-1, -2, -3)).verdict == CriterionVerdict::StableByCriterion);
    CHECK(diagonal_sign_test(Mat3::diag(1, 2, 3)).verdict == CriterionVerdict::UnstableByCriterion);
    CHECK(diagonal_sign_test(Mat3::diag(1, -2, 3)).verdict == CriterionVerdict::Inconclusive);
  }

  TEST_CASE("block tests") {
    Mat3 j = Mat3::diag(-1, -1, -1);
    j(0, 1) = 0.5;
    CHECK(symmetric_block_test(j).verdict == CriterionVerdict::StableByCriterion);
    j(2, 2) = 1.0;
    CHECK(symmetric_block_test(j).verdict == CriterionVerdict::UnstableByCriterion);
    j(0, 1) = 3.0;
    CHECK(symmetric_block_test(j).verdict == CriterionVerdict::Inconclusive);
  }

  TEST_CASE("symmetrized hypothesis does not control the general 2x2 block") {
    // m12^2 <= m11 m22 holds but m12 m21 > m11 m22 makes the block a saddle.
    const Mat3 j = Mat3::from_rows({{{-1, -0.9, 0}, {-5, -1, 0}, {0, 0, -1}}});
    CHECK(symmetric_block_test(j).verdict == CriterionVerdict::StableByCriterion);
    CHECK(classify_eigenvalues(eigenvalues_3x3(j)) == EigenClass::Unstable);
    CHECK(general_block_test(j).verdict == CriterionVerdict::Inconclusive);
  }

  TEST_CASE("cubic test admits a non-Hurwitz matrix") {
    const Mat3 j = Mat3::from_rows({{{0, 0.5, -1.5}, {0, -1, 0}, {2, 0, 0.5}}});
    CHECK(tumor_immune_cubic_test(j).verdict == CriterionVerdict::StableByCriterion);
    CHECK(classify_eigenvalues(eigenvalues_3x3(j)) == EigenClass::Unstable);
  }

  TEST_CASE("criterion chosen by kind") {
    const Mat3 j = Mat3::diag(-1, -1, -1);
    CHECK(sufficient_criterion(j, EquilibriumKind::Death).test == "diagonal_sign");
    CHECK(sufficient_criterion(j, EquilibriumKind::Healthy).test == "symmetric_block");
    CHECK(sufficient_criterion(j, EquilibriumKind::TumorImmune).test == "tumor_immune_cubic");
    CHECK(sufficient_criterion(j, EquilibriumKind::HostImmune).test == "general_block");
    CHECK(sufficient_criterion(j, EquilibriumKind::Interior).verdict ==
          CriterionVerdict::Inconclusive);
  }
}
