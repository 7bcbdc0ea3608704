#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "hsl/simgen.hpp"

TEST_CASE("defaults match the reference scenario shape") {
  hsl::ScenarioConfig cfg;
  cfg.seed = 1;
  const auto panel = hsl::generate(cfg);
  CHECK(panel.dataset.n_units() == 50);
  CHECK(panel.dataset.n_periods() == 20);
  CHECK(panel.dataset.n_features() == 2);
  CHECK(panel.dataset.t0 == 10);
  CHECK(panel.dataset.n_treated() >= 1);
  CHECK(panel.dataset.n_control() >= 1);
  CHECK(panel.true_tau_at_units.size() == 50);
}

TEST_CASE("noise off reduces the factor to a geometric decay") {
  hsl::ScenarioConfig cfg;
  cfg.factor_noise_sd = 0.0;
  cfg.outcome_noise_sd = 0.0;
  cfg.tau_kind = hsl::TauKind::Null;
  cfg.seed = 2;
  const auto panel = hsl::generate(cfg);
  for (int t = 0; t < panel.dataset.n_periods(); ++t)
    CHECK(panel.factor(t) == doctest::Approx(std::pow(0.95, t)).epsilon(1e-12));
  // Y(0) = b_i * f_t exactly, for every unit and period (null effect).
  for (int i = 0; i < panel.dataset.n_units(); ++i)
    for (int t = 0; t < panel.dataset.n_periods(); ++t)
      CHECK(panel.dataset.outcomes(i, t) ==
            doctest::Approx(panel.loadings(i) * panel.factor(t)).epsilon(1e-12));
}

TEST_CASE("true_tau closed forms") {
  hsl::ScenarioConfig cfg;
  Eigen::VectorXd x(2);

  cfg.tau_kind = hsl::TauKind::Linear;
  x << 1.0, 1.0;
  CHECK(hsl::true_tau(cfg, x) == doctest::Approx(1.0).epsilon(1e-15));
  x << 0.0, 0.0;
  CHECK(hsl::true_tau(cfg, x) == 0.0);
  x << 2.0, -1.0;
  CHECK(hsl::true_tau(cfg, x) == doctest::Approx(0.8).epsilon(1e-15));

  cfg.tau_kind = hsl::TauKind::Cosine;
  x << 0.0, 0.0;
  CHECK(hsl::true_tau(cfg, x) == doctest::Approx(1.0).epsilon(1e-15));

  cfg.tau_kind = hsl::TauKind::Null;
  x << 3.0, -7.0;
  CHECK(hsl::true_tau(cfg, x) == 0.0);

  Eigen::VectorXd bad(3);
  bad.setZero();
  CHECK_THROWS_AS(hsl::true_tau(cfg, bad), std::invalid_argument);
}

TEST_CASE("seed determinism and stream separation") {
  auto cfg = hsl::preset("paper-a");
  cfg.seed = 123;
  const auto a = hsl::generate(cfg);
  const auto b = hsl::generate(cfg);
  CHECK((a.dataset.outcomes - b.dataset.outcomes).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.dataset.features - b.dataset.features).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.dataset.treated_mask == b.dataset.treated_mask);

  cfg.seed = 124;
  const auto c = hsl::generate(cfg);
  CHECK((a.dataset.outcomes - c.dataset.outcomes).cwiseAbs().maxCoeff() > 0.0);
  CHECK((a.dataset.features - c.dataset.features).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("no anticipation and additive effects (same stream, different tau)") {
  auto null_cfg = hsl::preset("paper-a");
  null_cfg.tau_kind = hsl::TauKind::Null;
  null_cfg.seed = 99;
  auto cos_cfg = null_cfg;
  cos_cfg.tau_kind = hsl::TauKind::Cosine;

  const auto y0 = hsl::generate(null_cfg);   // observed == Y(0) everywhere
  const auto y1 = hsl::generate(cos_cfg);
  REQUIRE(y0.dataset.treated_mask == y1.dataset.treated_mask);
  const int t0 = y0.dataset.t0;
  for (int i = 0; i < y0.dataset.n_units(); ++i) {
    const double tau = hsl::true_tau(cos_cfg, y1.dataset.features.row(i).transpose());
    for (int t = 0; t < y0.dataset.n_periods(); ++t) {
      const bool dosed = y0.dataset.treated_mask[i] && t >= t0;
      const double want = y0.dataset.outcomes(i, t) + (dosed ? tau : 0.0);
      CHECK(y1.dataset.outcomes(i, t) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("loading moments over many draws") {
  hsl::ScenarioConfig cfg;
  cfg.n_units = 10000;
  cfg.seed = 7;
  const auto panel = hsl::generate(cfg);
  const double mean = panel.loadings.mean();
  const double var =
      (panel.loadings.array() - mean).square().sum() / (panel.loadings.size() - 1);
  CHECK(std::abs(mean - 1.0) <= 0.05);
  CHECK(std::abs(var - 1.0) <= 0.1);
}

TEST_CASE("ar1 variant changes the noise but keeps the shape") {
  auto iid = hsl::preset("paper-a");
  iid.seed = 11;
  auto ar1 = hsl::preset("paper-a-ar1");
  ar1.seed = 11;
  CHECK(ar1.error_kind == hsl::ErrorKind::AR1);
  const auto pa = hsl::generate(iid);
  const auto pb = hsl::generate(ar1);
  CHECK(pa.dataset.n_units() == pb.dataset.n_units());
  CHECK((pa.dataset.outcomes - pb.dataset.outcomes).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("presets exist and reject unknown names") {
  for (const char* name :
       {"paper-a", "paper-b", "paper-c", "paper-a-ar1", "paper-b-ar1", "paper-c-ar1"}) {
    CHECK(hsl::is_preset(name));
    CHECK_NOTHROW(hsl::preset(name));
  }
  CHECK_FALSE(hsl::is_preset("paper-z"));
  CHECK_THROWS_AS(hsl::preset("paper-z"), std::invalid_argument);
  CHECK(hsl::preset("paper-b").tau_kind == hsl::TauKind::Cosine);
  CHECK(hsl::preset("paper-c").tau_kind == hsl::TauKind::Null);
}

TEST_CASE("config JSON round trip") {
  auto cfg = hsl::preset("paper-b-ar1");
  cfg.seed = 31337;
  cfg.n_units = 77;
  cfg.ite_noise_sd = 0.25;
  cfg.propensity_beta_mode = hsl::BetaMode::PerUnit;
  const auto back = hsl::config_from_json(hsl::to_json(cfg));
  CHECK(back.name == cfg.name);
  CHECK(back.t0 == cfg.t0);
  CHECK(back.t1 == cfg.t1);
  CHECK(back.n_units == 77);
  CHECK(back.seed == 31337);
  CHECK(back.tau_kind == cfg.tau_kind);
  CHECK(back.error_kind == cfg.error_kind);
  CHECK(back.propensity_beta_mode == cfg.propensity_beta_mode);
  CHECK(back.ite_noise_sd == 0.25);
}

TEST_CASE("config validation rejects out-of-range values") {
  hsl::ScenarioConfig cfg;
  cfg.t0 = 0;
  CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
  cfg = {};
  cfg.factor_rho = 1.5;
  CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
  cfg = {};
  cfg.outcome_noise_sd = -0.1;
  CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
  cfg = {};
  CHECK_NOTHROW(cfg.check());
}

TEST_CASE("treated-first normalization in generated panels") {
  auto cfg = hsl::preset("paper-a");
  cfg.seed = 5;
  const auto panel = hsl::generate(cfg);
  const int m = panel.dataset.n_treated();
  for (int i = 0; i < panel.dataset.n_units(); ++i)
    CHECK(panel.dataset.treated_mask[i] == (i < m));
}
