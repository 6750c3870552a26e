#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "mnci/adam.hpp"
#include "reference.hpp"

using namespace mnci;
using Catch::Matchers::WithinAbs;

TEST_CASE("zero gradient leaves parameters unchanged but advances the step") {
  Vec param = (Vec(3) << 1.0, -2.0, 0.5).finished();
  const Vec before = param;
  AdamState<Vec> state(param);
  adam_step(state, param, Vec(Vec::Zero(3)), 0.01, AdamConfig{}, "p");
  CHECK((param - before).cwiseAbs().maxCoeff() == 0.0);
  CHECK(state.step == 1);
}

TEST_CASE("constant gradients drive the update magnitude toward lr") {
  Vec param = Vec::Zero(1);
  AdamState<Vec> state(param);
  const Vec grad = (Vec(1) << -3.7).finished();
  const double lr = 0.01;
  double prev = param[0];
  double last_update = 0.0;
  for (int i = 0; i < 500; ++i) {
    adam_step(state, param, grad, lr, AdamConfig{}, "p");
    last_update = param[0] - prev;
    prev = param[0];
  }
  // steady state: lr * sign(g), and the sign opposes the gradient
  CHECK_THAT(last_update, WithinAbs(lr, 1e-6));
}

TEST_CASE("one step from zero moments matches the hand computation") {
  const AdamConfig cfg;
  for (double g : {2.0, -0.001, 123.456}) {
    Vec param = (Vec(1) << 0.25).finished();
    AdamState<Vec> state(param);
    adam_step(state, param, Vec((Vec(1) << g).finished()), 0.001, cfg, "p");

    double m = 0.0, v = 0.0;
    long t = 0;
    const double want = ref::adam_scalar_step(0.25, g, m, v, t, 0.001, cfg.beta1, cfg.beta2, cfg.eps);
    CHECK_THAT(param[0], WithinAbs(want, 1e-15));
    // closed form of the first step: param - lr * g / (|g| + eps)
    CHECK_THAT(param[0], WithinAbs(0.25 - 0.001 * g / (std::fabs(g) + cfg.eps), 1e-12));
  }
}

TEST_CASE("multi-step updates match the scalar reference") {
  const AdamConfig cfg;
  Rng rng(5);
  Vec param = (Vec(1) << -1.5).finished();
  AdamState<Vec> state(param);
  double ref_param = -1.5, m = 0.0, v = 0.0;
  long t = 0;
  for (int i = 0; i < 50; ++i) {
    const double g = rng.uniform(-2.0, 2.0);
    adam_step(state, param, Vec((Vec(1) << g).finished()), 0.005, cfg, "p");
    ref_param = ref::adam_scalar_step(ref_param, g, m, v, t, 0.005, cfg.beta1, cfg.beta2, cfg.eps);
    CHECK_THAT(param[0], WithinAbs(ref_param, 1e-13));
  }
}

TEST_CASE("non-finite gradients are rejected, naming the tensor") {
  Vec param = Vec::Zero(2);
  AdamState<Vec> state(param);
  Vec bad = Vec::Zero(2);
  bad[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_MATCHES(adam_step(state, param, bad, 0.01, AdamConfig{}, "w_cand"), NumericError,
                       Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("w_cand")));
}

TEST_CASE("sparse updates only touch the named entries") {
  Vec params = (Vec(4) << 1.0, 1.0, 1.0, 1.0).finished();
  AdamScalarArray state(4);
  adam_step_sparse(state, params, {{1, 0.5}, {3, -0.25}}, 0.01, AdamConfig{}, "delta");
  CHECK(params[0] == 1.0);
  CHECK(params[2] == 1.0);
  CHECK(params[1] != 1.0);
  CHECK(params[3] != 1.0);
  CHECK(state.steps[0] == 0);
  CHECK(state.steps[1] == 1);
  CHECK(state.steps[2] == 0);
  CHECK(state.steps[3] == 1);

  // entry updates equal the scalar reference with per-entry step counters
  double m = 0.0, v = 0.0;
  long t = 0;
  const double want = ref::adam_scalar_step(1.0, 0.5, m, v, t, 0.01, 0.9, 0.999, 1e-8);
  CHECK_THAT(params[1], WithinAbs(want, 1e-15));

  CHECK_THROWS_AS(
      adam_step_sparse(state, params, {{0, std::nan("")}}, 0.01, AdamConfig{}, "delta"),
      NumericError);
}
