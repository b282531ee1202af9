#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "narendra/bounds.hpp"
#include "narendra/config.hpp"
#include "narendra/rng.hpp"

using namespace narendra;

namespace {

// Fixed-seed generators: every failure reproduces.
struct Gen {
  std::mt19937_64 g;
  explicit Gen(std::uint64_t seed) : g(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); }
  long integer(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(g); }
  std::uint64_t word() { return g(); }

  StepFamily schedule() {
    switch (integer(0, 2)) {
      case 0: return Rational{uniform(0.1, 6.0)};
      case 1: return Power{uniform(0.1, 3.0), uniform(0.3, 1.0), uniform(0.2, 0.95)};
      default: {
        Scripted s;
        double v = uniform(0.05, 0.95);
        for (int k = 0; k < 5000; ++k) s.values.push_back(v *= uniform(0.97, 1.0));
        return s;
      }
    }
  }

  PayoffSource source(double& theta) {
    switch (integer(0, 2)) {
      case 0:
        theta = uniform(0.05, 0.95);
        return PayoffSource::iid(theta, word());
      case 1:
        theta = uniform(0.05, 0.95);
        return PayoffSource::rotation(theta);
      default: {
        const long states = integer(2, 5);
        Eigen::MatrixXd P(states, states);
        for (long i = 0; i < states; ++i) {
          for (long j = 0; j < states; ++j) P(i, j) = uniform(0.05, 1.0);
          P.row(i) /= P.row(i).sum();
        }
        std::vector<int> target{0};
        if (states > 2) target.push_back(static_cast<int>(states - 1));
        auto s = PayoffSource::markov(P, target, word());
        theta = s.nominal_mean();
        return s;
      }
    }
  }
};

constexpr int kCases = 40;

// Halves the horizon until S_n stays representable.
PrefixTables representable(const StepFamily& family, long& n) {
  for (;; n /= 2) {
    try {
      return build_prefix(family, n);
    } catch (const std::range_error&) {
    }
  }
}

}  // namespace

TEST(Property, MartingaleIncrementIsCentredAndBounded) {
  Gen gen(1);
  for (int i = 0; i < 100000; ++i) {
    const double x = gen.uniform(0.0, 1.0);
    for (Bit a : {0, 1})
      for (Bit b : {0, 1}) {
        ASSERT_LE(std::abs(branch_weighted_mean(x, a, b)), 1e-12);
        ASSERT_LE(branch_second_moment(x, a, b), f(x) + 1e-15);
        for (Arm u : {Arm::A, Arm::B}) ASSERT_LE(std::pow(martingale_increment(x, u, a, b), 2), 1.0);
      }
  }
}

TEST(Property, PrefixTablesAreConsistent) {
  Gen gen(2);
  for (int i = 0; i < kCases; ++i) {
    const auto family = gen.schedule();
    long n = std::holds_alternative<Scripted>(family) ? 5000 : gen.integer(100, 50000);
    long n_ok = n;
    const PrefixTables t = representable(family, n_ok);
    n = n_ok;
    EXPECT_EQ(check_sandwich(t).verdict, Verdict::pass);
    double delta_sum = 0.0;
    for (long k = 0; k <= n; ++k) {
      delta_sum += t.Delta(k);
      ASSERT_NEAR(delta_sum, t.S(k), 1e-10 * t.S(k)) << "k = " << k;
    }
  }
}

TEST(Property, RunInvariantsHoldForRandomConfigs) {
  Gen gen(3);
  for (int i = 0; i < kCases; ++i) {
    const auto family = gen.schedule();
    long n = std::holds_alternative<Scripted>(family) ? 4999 : gen.integer(1, 30000);
    double ta = 0, tb = 0;
    auto a = gen.source(ta);
    auto b = gen.source(tb);
    const double x0 = gen.uniform(0.01, 0.99);
    auto tables = std::make_shared<const PrefixTables>(representable(family, n));
    RunOptions opt;
    opt.dense_prefix = n;
    SCOPED_TRACE("case " + std::to_string(i) + " n " + std::to_string(n) + " Gamma_N " +
                 std::to_string(tables->Gamma(n)) + " theta " + std::to_string(ta) + "/" + std::to_string(tb) +
                 " x0 " + std::to_string(x0));
    const RunRecord r = run({tables, std::move(a), std::move(b), x0, n, gen.word(), opt});
    const auto& inv = r.invariants;
    EXPECT_LE(inv.worst_decomposition_residual, 1e-8);
    EXPECT_LE(inv.worst_lower_bound_excess, 1e-12);
    EXPECT_GE(inv.min_yb_minus_x0, 0.0);
    EXPECT_TRUE(inv.sb_le_s);
    EXPECT_TRUE(inv.x_in_unit_interval);
    EXPECT_EQ(inv.sf_violations, 0);
    EXPECT_EQ(check_sf_monotone(r.windows.at(0), *tables).verdict, Verdict::pass);
    EXPECT_LE(brake_mass_verify(r.windows.at(0), *tables, tb).at("worst_identity_residual"), 1e-10);
  }
}

TEST(Property, AbelTransformMatchesDirectDifference) {
  Gen gen(4);
  for (int i = 0; i < kCases; ++i) {
    const long n = gen.integer(10, 3000);
    std::vector<double> xi(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<Bit> bits(static_cast<std::size_t>(n));
    double w = gen.uniform(0.1, 1.0);
    for (long k = 1; k <= n; ++k) xi[static_cast<std::size_t>(k)] = (w *= gen.uniform(0.99, 1.0));
    const double theta = gen.uniform(0.05, 0.95);
    for (auto& b : bits) b = gen.uniform(0, 1) < theta;
    const long m = gen.integer(1, n), hi = gen.integer(m, n);
    double direct = 0.0;
    for (long k = m + 1; k <= hi; ++k) direct += xi[static_cast<std::size_t>(k)] * (bits[static_cast<std::size_t>(k - 1)] - theta);
    EXPECT_NEAR(abel_transform_difference(xi, bits, theta, m, hi), direct, 1e-10);
  }
}

TEST(Property, DeriveSeedIsInjectivePerMaster) {
  Gen gen(5);
  for (int i = 0; i < 4; ++i) {
    const std::uint64_t master = gen.word();
    std::vector<std::uint64_t> seeds;
    seeds.reserve(1 << 20);
    for (std::uint64_t k = 0; k < (1u << 20); ++k) seeds.push_back(derive_seed(master, k));
    std::sort(seeds.begin(), seeds.end());
    EXPECT_EQ(std::adjacent_find(seeds.begin(), seeds.end()), seeds.end());
  }
}

TEST(Property, BetaDominatesAlpha) {
  Gen gen(6);
  for (int i = 0; i < 10; ++i) {
    double ta = 0, tb = 0;
    auto a = gen.source(ta);
    auto b = gen.source(tb);
    DeviationTracker t(ta, tb);
    const long n = gen.integer(100, 20000);
    for (long k = 0; k < n; ++k) next_pair(a, b, t);
    const auto s = deviation_stats(t, RateEnvelope::log_power(gen.uniform(0.5, 2.0)), n);
    for (long k = s.first_index; k <= n; ++k) ASSERT_GE(s.beta(k), s.alpha(k));
  }
}

TEST(Property, ConfigRoundTripKeepsHash) {
  Gen gen(7);
  for (int i = 0; i < kCases; ++i) {
    nlohmann::json j{{"schedule", {{"kind", "power"}, {"a", gen.uniform(0.1, 2)}, {"rho", gen.uniform(0.5, 1)}}},
                     {"arms",
                      {{"A", {{"kind", "iid"}, {"theta", gen.uniform(0.1, 0.9)}}},
                       {"B", {{"kind", "rotation"}, {"theta", gen.uniform(0.1, 0.9)}}}}},
                     {"x0", gen.uniform(0.01, 0.89)},
                     {"horizon", gen.integer(1, 1000)},
                     {"seed", gen.word()}};
    const auto c = parse_config(j);
    EXPECT_EQ(config_hash(parse_config(to_json(c))), config_hash(c));
  }
}
