#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "narendra/payoffs.hpp"

using namespace narendra;

TEST(Rotation, FirstBits) {
  auto src = PayoffSource::rotation(0.7);
  const std::array<int, 5> expected{0, 1, 1, 0, 1};
  for (int b : expected) EXPECT_EQ(src.next_bit(), b);
}

TEST(Rotation, DeviationStaysBelowOne) {
  auto a = PayoffSource::rotation(0.7);
  auto b = PayoffSource::rotation(0.4);
  DeviationTracker t(0.7, 0.4);
  for (int k = 0; k < 100000; ++k) next_pair(a, b, t);
  EXPECT_LE(t.R(), 1.0 + 1e-9);
}

TEST(Iid, SameSeedSameStream) {
  auto a = PayoffSource::iid(0.3, 99);
  auto b = PayoffSource::iid(0.3, 99);
  for (int k = 0; k < 1000; ++k) ASSERT_EQ(a.next_bit(), b.next_bit());
}

TEST(Iid, EmpiricalMean) {
  auto a = PayoffSource::iid(0.3, 5);
  long ones = 0;
  for (int k = 0; k < 200000; ++k) ones += a.next_bit();
  EXPECT_NEAR(ones / 200000.0, 0.3, 5 * std::sqrt(0.21 / 200000.0));
}

TEST(Iid, RejectsDegenerateMean) {
  EXPECT_THROW(PayoffSource::iid(1.0, 1), std::invalid_argument);
  EXPECT_THROW(PayoffSource::iid(0.0, 1), std::invalid_argument);
}

TEST(Scripted, ExhaustionThrows) {
  auto s = PayoffSource::scripted({1, 0}, 0.5);
  EXPECT_EQ(s.next_bit(), 1);
  EXPECT_EQ(s.next_bit(), 0);
  EXPECT_THROW(s.next_bit(), HorizonOverrun);
}

TEST(Scripted, BitFile) {
  const auto path = std::filesystem::temp_directory_path() / "narendra_bits.txt";
  { std::ofstream(path) << "01 1\n0"; }
  const auto bits = load_bit_file(path);
  EXPECT_EQ(bits, (std::vector<Bit>{0, 1, 1, 0}));
  { std::ofstream(path) << "012"; }
  EXPECT_THROW(load_bit_file(path), ConfigError);
  std::filesystem::remove(path);
}

TEST(Markov, StationaryMeanOfTwoStateChain) {
  Eigen::MatrixXd P(2, 2);
  P << 0.9, 0.1, 0.2, 0.8;
  const std::array<int, 1> a{0}, b{1};
  EXPECT_NEAR(stationary_mean(P, a), 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(stationary_mean(P, b), 1.0 / 3.0, 1e-14);
}

TEST(Markov, EmpiricalMeanMatchesStationaryLaw) {
  Eigen::MatrixXd P(2, 2);
  P << 0.9, 0.1, 0.2, 0.8;
  const std::array<int, 1> target{0};
  auto src = PayoffSource::markov(P, target, 3);
  EXPECT_NEAR(src.nominal_mean(), 2.0 / 3.0, 1e-14);
  long ones = 0;
  const long n = 400000;
  for (long k = 0; k < n; ++k) ones += src.next_bit();
  // Autocorrelation inflates the variance by (1 + 0.7) / (1 - 0.7).
  EXPECT_NEAR(static_cast<double>(ones) / n, 2.0 / 3.0, 5 * std::sqrt(2.0 / 9.0 * (1.7 / 0.3) / n));
}

TEST(Markov, RejectsBadChains) {
  Eigen::MatrixXd reducible(2, 2);
  reducible << 1.0, 0.0, 0.0, 1.0;
  Eigen::MatrixXd leaky(2, 2);
  leaky << 0.5, 0.4, 0.5, 0.5;
  const std::array<int, 1> t{0};
  EXPECT_THROW(stationary_mean(reducible, t), std::invalid_argument);
  EXPECT_THROW(stationary_mean(leaky, t), std::invalid_argument);
  const std::array<int, 1> out_of_range{2};
  Eigen::MatrixXd P(2, 2);
  P << 0.5, 0.5, 0.5, 0.5;
  EXPECT_THROW(stationary_mean(P, out_of_range), std::invalid_argument);
}

TEST(DeviationTracker, HistoryStartsAtZero) {
  DeviationTracker t(0.5, 0.5);
  ASSERT_EQ(t.history().size(), 1u);
  EXPECT_EQ(t.history()[0].first, 0);
  t.record(1, 0);
  EXPECT_DOUBLE_EQ(t.kappa_a(), 0.5);
  EXPECT_DOUBLE_EQ(t.kappa_b(), -0.5);
  EXPECT_DOUBLE_EQ(t.R(), 0.5);
}

// phi(n) = n / log(n+2)^2 for epsilon = 1.
TEST(RateEnvelope, LogPowerValues) {
  const auto env = RateEnvelope::log_power(1.0);
  EXPECT_NEAR(env(2), 1.0407, 1e-4);
  EXPECT_NEAR(env(3), 1.1582, 1e-4);
  const PhiValues v = env.eval(3);
  EXPECT_NEAR(v.phi_prime, env(3) - env(2), 1e-15);
  EXPECT_NEAR(v.phi_second, env(2) + env(4) - 2 * env(3), 1e-15);
}

TEST(RateEnvelope, ConcaveAndIncreasingPastK0) {
  for (double eps : {0.5, 1.0, 2.0}) {
    const auto env = RateEnvelope::log_power(eps);
    for (long n = std::max<long>(env.k0(), 2); n < env.k0() + 20000; ++n) {
      const PhiValues v = env.eval(n);
      ASSERT_GE(v.phi_prime, 0.0) << "eps " << eps << " n " << n;
      ASSERT_LE(v.phi_second, 1e-15 * env(n)) << "eps " << eps << " n " << n;
    }
    EXPECT_LE(env.second_derivative(static_cast<double>(env.k0()) * 10), 0.0);
  }
}

TEST(RateEnvelope, Linear) {
  const auto env = RateEnvelope::linear();
  EXPECT_EQ(env(10), 10.0);
  EXPECT_EQ(env.eval(10).phi_prime, 1.0);
  EXPECT_EQ(env.eval(10).phi_second, 0.0);
}

TEST(DeviationStats, BetaIsTruncatedReverseMax) {
  auto a = PayoffSource::iid(0.5, 1);
  auto b = PayoffSource::iid(0.5, 2);
  DeviationTracker t(0.5, 0.5);
  for (int k = 0; k < 5000; ++k) next_pair(a, b, t);
  const auto s = deviation_stats(t, RateEnvelope::linear(), 5000);
  for (long n = s.first_index; n < 5000; ++n) {
    ASSERT_GE(s.beta(n), s.alpha(n));
    ASSERT_GE(s.beta(n), s.beta(n + 1));
  }
  EXPECT_EQ(s.beta(5000), s.alpha(5000));
}

// Block ratios from tests/oracles/envelope_oracle.py: rotation ~0.57, iid median ~0.84.
TEST(DeviationEnvelope, RotationAndIidPass) {
  auto ra = PayoffSource::rotation(0.7);
  auto rb = PayoffSource::rotation(0.4);
  DeviationTracker rot(0.7, 0.4);
  for (int k = 0; k < 100000; ++k) next_pair(ra, rb, rot);
  EXPECT_EQ(check_deviation_envelope(deviation_stats(rot, RateEnvelope::log_power(1.0), 100000)).verdict, Verdict::pass);

  auto ia = PayoffSource::iid(0.7, 11);
  auto ib = PayoffSource::iid(0.4, 12);
  DeviationTracker iid(0.7, 0.4);
  for (int k = 0; k < 100000; ++k) next_pair(ia, ib, iid);
  EXPECT_EQ(check_deviation_envelope(deviation_stats(iid, RateEnvelope::log_power(1.0), 100000)).verdict, Verdict::pass);
}

// A source with the wrong declared mean has linear deviations.
TEST(DeviationEnvelope, MisdeclaredMeanFails) {
  auto a = PayoffSource::rotation(0.7);
  auto b = PayoffSource::rotation(0.4);
  DeviationTracker t(0.6, 0.4);
  for (int k = 0; k < 100000; ++k) t.record(a.next_bit(), b.next_bit());
  EXPECT_EQ(check_deviation_envelope(deviation_stats(t, RateEnvelope::log_power(1.0), 100000)).verdict, Verdict::fail);
}
