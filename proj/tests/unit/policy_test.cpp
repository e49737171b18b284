#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "pgso/errors.hpp"
#include "pgso/policy/actor_critic.hpp"
#include "test_support.hpp"

namespace pgso::policy {
namespace {

PolicyConfig small_config() {
  PolicyConfig cfg;
  cfg.hidden = 16;
  return cfg;
}

PolicyState state2(double a = 2.0, double b = 0.0) { return {{a, b}, 1, 0, 0.1}; }

void zero_output_layer(nn::Mlp& net) {
  for (double& v : net.layers().back().weight.values()) v = 0.0;
  for (double& v : net.layers().back().bias.values()) v = 0.0;
}

TEST(PolicyVariants, StringRoundTrip) {
  for (auto v : {PolicyVariant::pi_e, PolicyVariant::pi_al_e, PolicyVariant::pi_al_g_e}) {
    EXPECT_EQ(policy_variant_from_string(to_string(v)), v);
  }
  EXPECT_THROW(policy_variant_from_string("pi_X"), ConfigError);
}

TEST(ActorCritic, OutputShapes) {
  ActorCritic e(PolicyVariant::pi_e, 2, small_config(), 1);
  ActorCritic al(PolicyVariant::pi_al_e, 2, small_config(), 1);
  EXPECT_EQ(e.actor().input_dim(), 5u);
  EXPECT_EQ(e.actor().output_dim(), 1u);
  EXPECT_EQ(al.actor().output_dim(), 3u);
  EXPECT_EQ(al.critic().output_dim(), 1u);
  EXPECT_EQ(e.actor().layer_count(), 2u);
}

TEST(ActorCritic, DefaultWidthIs256) {
  ActorCritic ac(PolicyVariant::pi_e, 2, PolicyConfig{}, 1);
  EXPECT_EQ(ac.actor().layers().front().weight.cols(), 256u);
}

TEST(ActorCritic, FeaturesNormalizeTimeAndCalls) {
  ActorCritic ac(PolicyVariant::pi_e, 2, small_config(), 1);
  const auto f = ac.features({{0.5, -1.0}, 250, 10, 0.3});
  ASSERT_EQ(f.size(), 5u);
  EXPECT_DOUBLE_EQ(f[0], 0.5);
  EXPECT_DOUBLE_EQ(f[1], -1.0);
  EXPECT_DOUBLE_EQ(f[2], 0.25);
  EXPECT_DOUBLE_EQ(f[3], 0.2);
  EXPECT_DOUBLE_EQ(f[4], 0.3);
  EXPECT_THROW(ac.features({{0.5}, 1, 0, 0.0}), DimensionError);
}

TEST(ActorCritic, ZeroOutputLayerGivesHalfProbabilityAndLnTwoScale) {
  ActorCritic ac(PolicyVariant::pi_al_e, 2, small_config(), 3);
  zero_output_layer(ac.actor());
  const auto d = ac.distributions(state2());
  EXPECT_DOUBLE_EQ(d.call_probability, 0.5);
  EXPECT_NEAR(d.s, std::log(2.0), 1e-15);
  EXPECT_NEAR(d.mu, std::log(0.5), 1e-15);
}

TEST(ActorCritic, InitialCallProbabilityNearHalf) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ActorCritic ac(PolicyVariant::pi_e, 2, PolicyConfig{}, seed);
    for (double a : {-2.0, 0.0, 2.0}) {
      const auto d = ac.distributions({{a, a}, 500, 25, 0.5});
      EXPECT_NEAR(d.call_probability, 0.5, 0.05);
    }
  }
}

TEST(ActorCritic, LargeLogitSaturatesCall) {
  ActorCritic ac(PolicyVariant::pi_e, 2, small_config(), 1);
  zero_output_layer(ac.actor());
  ac.actor().layers().back().bias[0] = 800.0;
  Rng rng(4);
  const auto a = ac.sample(state2(), rng);
  EXPECT_TRUE(a.call);
  EXPECT_DOUBLE_EQ(a.log_prob_b, 0.0);
  EXPECT_DOUBLE_EQ(a.call_probability, 1.0);
}

TEST(ActorCritic, NonFiniteOutputRejected) {
  ActorCritic ac(PolicyVariant::pi_e, 2, small_config(), 1);
  ac.actor().layers().back().bias[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(ac.distributions(state2()), DivergenceError);
}

TEST(BernoulliLogProb, MatchesDirectFormulaAndNormalizes) {
  for (double logit : {-30.0, -3.0, -0.2, 0.0, 0.7, 5.0, 30.0}) {
    const double p = 1.0 / (1.0 + std::exp(-logit));
    EXPECT_NEAR(bernoulli_log_prob(logit, true), std::log(p), 1e-12);
    EXPECT_NEAR(std::exp(bernoulli_log_prob(logit, true)) +
                    std::exp(bernoulli_log_prob(logit, false)),
                1.0, 1e-14);
  }
}

TEST(LognormalLogPdf, MatchesIndependentDensity) {
  for (double v : {0.01, 0.3, 0.5, 1.0, 4.0}) {
    for (double mu : {-1.0, 0.0, 0.8}) {
      for (double s : {0.1, 0.7, 2.0}) {
        const double z = (std::log(v) - mu) / s;
        const double pdf =
            std::exp(-0.5 * z * z) / (v * s * std::sqrt(2.0 * std::numbers::pi));
        if (pdf < 1e-300) continue;
        EXPECT_NEAR(lognormal_log_pdf(v, mu, s), std::log(pdf), 1e-10);
      }
    }
  }
}

TEST(ActorCritic, EpsilonOnlyForActiveLearningVariants) {
  ActorCritic e(PolicyVariant::pi_e, 2, small_config(), 1);
  ActorCritic al(PolicyVariant::pi_al_g_e, 2, small_config(), 1);
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto a = e.sample(state2(), rng);
    EXPECT_FALSE(a.epsilon.has_value());
    EXPECT_FALSE(a.log_prob_eps.has_value());
    const auto b = al.sample(state2(), rng);
    ASSERT_TRUE(b.epsilon.has_value());
    EXPECT_GT(b.epsilon_raw, 0.0);
    EXPECT_GE(*b.epsilon, al.config().epsilon_min);
    EXPECT_LE(*b.epsilon, al.config().epsilon_max);
    const auto d = al.distributions(state2());
    EXPECT_NEAR(*b.log_prob_eps, lognormal_log_pdf(b.epsilon_raw, d.mu, d.s), 1e-12);
  }
}

TEST(ActorCritic, EpsilonClampedToInterval) {
  ActorCritic ac(PolicyVariant::pi_al_e, 2, small_config(), 1);
  zero_output_layer(ac.actor());
  ac.actor().layers().back().bias[1] = 40.0;
  Rng rng(2);
  auto a = ac.sample(state2(), rng);
  EXPECT_DOUBLE_EQ(*a.epsilon, 10.0);
  EXPECT_GT(a.epsilon_raw, 10.0);
  ac.actor().layers().back().bias[1] = -40.0;
  a = ac.sample(state2(), rng);
  EXPECT_DOUBLE_EQ(*a.epsilon, 1e-3);
}

TEST(ActorCritic, SamplingIsSeedDeterministic) {
  ActorCritic ac(PolicyVariant::pi_al_e, 2, small_config(), 9);
  Rng a(77), b(77);
  for (int i = 0; i < 20; ++i) {
    const auto x = ac.sample(state2(0.1 * i, 0.0), a);
    const auto y = ac.sample(state2(0.1 * i, 0.0), b);
    EXPECT_EQ(x.call, y.call);
    EXPECT_EQ(*x.epsilon, *y.epsilon);
    EXPECT_EQ(x.log_prob_b, y.log_prob_b);
  }
}

TEST(ActorCritic, SampledCallFrequencyMatchesProbability) {
  ActorCritic ac(PolicyVariant::pi_e, 2, small_config(), 1);
  zero_output_layer(ac.actor());
  ac.actor().layers().back().bias[0] = std::log(0.3 / 0.7);
  Rng rng(3);
  int calls = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) calls += ac.sample(state2(), rng).call;
  const double se = std::sqrt(0.3 * 0.7 / n);
  EXPECT_NEAR(calls / static_cast<double>(n), 0.3, 4 * se);
}

TEST(ActorCritic, DeterministicModeTakesMode) {
  ActorCritic ac(PolicyVariant::pi_al_e, 2, small_config(), 1);
  zero_output_layer(ac.actor());
  ac.actor().layers().back().bias[0] = 0.1;
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const auto a = ac.sample(state2(), rng, true);
    EXPECT_TRUE(a.call);
    EXPECT_NEAR(*a.epsilon, 0.5, 1e-15);
  }
}

TEST(ActorCritic, CriticScalesByHorizon) {
  ActorCritic ac(PolicyVariant::pi_e, 2, small_config(), 1);
  zero_output_layer(ac.critic());
  EXPECT_DOUBLE_EQ(ac.value(state2()), 0.0);
  ac.critic().layers().back().bias[0] = -1.0;
  EXPECT_DOUBLE_EQ(ac.value(state2()), -1000.0);
}

TEST(ActorCritic, TracedHeadsMatchEager) {
  ActorCritic ac(PolicyVariant::pi_al_e, 3, small_config(), 5);
  std::mt19937_64 gen(1);
  const PolicyState s{testing::random_vector(3, gen), 17, 4, 0.2};
  const auto f = ac.features(s);
  nn::Tape tape;
  nn::BoundMlp bound(tape, ac.actor());
  nn::Tensor x = nn::Tensor::matrix(1, f.size());
  std::copy(f.begin(), f.end(), x.values().begin());
  const auto h = ac.heads(bound, tape.variable(x));
  const auto d = ac.distributions(s);
  EXPECT_NEAR(h.logit.value()[0], d.call_logit, 1e-14);
  EXPECT_NEAR(h.mu.value()[0], d.mu, 1e-14);
  EXPECT_NEAR(h.s.value()[0], d.s, 1e-14);
}

TEST(ActorCritic, CheckpointRoundTrip) {
  ActorCritic ac(PolicyVariant::pi_al_g_e, 2, small_config(), 11);
  const auto path = std::filesystem::temp_directory_path() / "pgso_policy_roundtrip.json";
  ac.save(path);
  const auto back = ActorCritic::load(path);
  std::filesystem::remove(path);
  EXPECT_TRUE(back == ac);
  EXPECT_EQ(back.variant(), PolicyVariant::pi_al_g_e);
  EXPECT_EQ(back.config(), ac.config());
  const auto s = state2(0.3, -0.2);
  EXPECT_EQ(back.distributions(s).call_logit, ac.distributions(s).call_logit);
  EXPECT_EQ(back.value(s), ac.value(s));
}

TEST(ActorCritic, CheckpointRejectsWrongFormat) {
  ActorCritic ac(PolicyVariant::pi_e, 2, small_config(), 11);
  auto j = ac.to_json();
  j["format"] = "something-else";
  EXPECT_THROW(ActorCritic::from_json(j), ConfigError);
}

}  // namespace
}  // namespace pgso::policy
