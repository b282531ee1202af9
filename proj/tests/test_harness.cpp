#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "narendra/config.hpp"
#include "narendra/harness.hpp"
#include "narendra/io.hpp"
#include "narendra/rng.hpp"

using namespace narendra;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json canonical() {
  return json::parse(R"({
    "schedule": {"kind": "rational", "c": 2.0},
    "arms": {"A": {"kind": "iid", "theta": 0.7}, "B": {"kind": "iid", "theta": 0.4}},
    "x0": 0.5, "horizon": 1000, "replicas": 4, "seed": 7
  })");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("narendra_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(NARENDRA_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "cfg.json";
  std::ofstream(p) << j.dump();
  return p;
}

ReplicaOutcome finished(long index, double x) {
  ReplicaOutcome o;
  o.index = index;
  o.x_final = x;
  return o;
}

}  // namespace

// Golden values from tests/oracles/seed_oracle.py.
TEST(Seeds, GoldenValues) {
  EXPECT_EQ(derive_seed(0, 0), 5197578548964807871ULL);
  EXPECT_EQ(derive_seed(0, 1), 15916886550466581944ULL);
  EXPECT_EQ(derive_seed(7, 3), 6480866302467822589ULL);
  EXPECT_EQ(derive_seed(~0ULL, 4294967295ULL), 11277460914395421666ULL);
  const auto s = derive_seed(0, 0);
  EXPECT_EQ(substream_seed(s, Substream::uniform), 6235967106033911276ULL);
  EXPECT_EQ(substream_seed(s, Substream::arm_a), 4964577235801436555ULL);
  EXPECT_EQ(substream_seed(s, Substream::arm_b), 5009519748041543987ULL);
}

TEST(Seeds, PortableUniforms) {
  Rng r(42);
  EXPECT_EQ(r.uniform(), 0.755155532954539);
  EXPECT_EQ(r.uniform(), 0.6390313938546974);
  EXPECT_EQ(r.uniform(), 0.7521452007480266);
}

TEST(Seeds, SubstreamsDiffer) {
  const auto s = derive_seed(0, 0);
  Rng u(substream_seed(s, Substream::uniform));
  Rng a(substream_seed(s, Substream::arm_a));
  EXPECT_NE(u.next_u64(), a.next_u64());
}

TEST(Config, ParsesCanonical) {
  const auto c = parse_config(canonical());
  EXPECT_EQ(c.horizon, 1000);
  EXPECT_EQ(c.replicas, 4);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_DOUBLE_EQ(c.arm_a.theta, 0.7);
  EXPECT_DOUBLE_EQ(c.thresholds.hi, 0.9);
  EXPECT_DOUBLE_EQ(c.thresholds.lo, 1e-3);
  EXPECT_EQ(c.envelope.kind, RateEnvelope::Kind::log_power);
}

TEST(Config, RejectsUnknownKeysAtAnyDepth) {
  auto j = canonical();
  j["extra"] = 1;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = canonical();
  j["arms"]["A"]["rate"] = 0.1;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = canonical();
  j["schedule"]["rho"] = 0.5;
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Config, RejectsOutOfRange) {
  for (auto mutate : std::vector<std::function<void(json&)>>{
           [](json& j) { j["x0"] = 1.0; },
           [](json& j) { j["x0"] = "half"; },
           [](json& j) { j["horizon"] = -1; },
           [](json& j) { j["replicas"] = 0; },
           [](json& j) { j["arms"]["B"]["theta"] = 1.0; },
           [](json& j) { j["thresholds"] = {{"hi", 0.4}}; },
           [](json& j) { j["schedule"] = {{"kind", "geometric"}}; },
           [](json& j) { j.erase("arms"); },
       }) {
    auto j = canonical();
    mutate(j);
    EXPECT_THROW(parse_config(j), ConfigError) << j.dump();
  }
}

TEST(Config, MarkovThetaIsStationaryMean) {
  auto j = canonical();
  j["arms"]["A"] = json::parse(R"({"kind": "markov", "matrix": [[0.9, 0.1], [0.2, 0.8]], "target": [0]})");
  EXPECT_NEAR(parse_config(j).arm_a.theta, 2.0 / 3.0, 1e-14);
  j["arms"]["A"]["theta"] = 0.5;
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Config, HashTracksContent) {
  const auto a = parse_config(canonical());
  auto j = canonical();
  EXPECT_EQ(config_hash(a), config_hash(parse_config(j)));
  j["seed"] = 8;
  EXPECT_NE(config_hash(a), config_hash(parse_config(j)));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Aggregate, CountsFractions) {
  std::vector<ReplicaOutcome> v{finished(0, 0.95), finished(1, 0.99), finished(2, 0.0005), finished(3, 0.5)};
  const auto s = aggregate(v, Thresholds{}, "h");
  EXPECT_DOUBLE_EQ(s.fraction_hi, 0.5);
  EXPECT_DOUBLE_EQ(s.fraction_lo, 0.25);
  EXPECT_LE(s.fraction_hi + s.fraction_lo, 1.0);
}

TEST(Aggregate, ZeroHorizonSingleReplica) {
  const auto s = aggregate({finished(0, 0.5)}, Thresholds{}, "h");
  EXPECT_EQ(s.fraction_hi, 0.0);
  EXPECT_EQ(s.fraction_lo, 0.0);
}

TEST(Aggregate, OrderIndependentBytes) {
  std::vector<ReplicaOutcome> v;
  for (long i = 0; i < 50; ++i) v.push_back(finished(i, std::fmod(0.37 * static_cast<double>(i), 1.0)));
  const std::string ref = to_json(aggregate(v, Thresholds{}, "h")).dump();
  std::mt19937 g(1);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(v.begin(), v.end(), g);
    EXPECT_EQ(to_json(aggregate(v, Thresholds{}, "h")).dump(), ref);
  }
}

TEST(Aggregate, ErroredReplicasExcluded) {
  std::vector<ReplicaOutcome> v{finished(0, 0.95), finished(1, 0.0)};
  v[1].error = "boom";
  const auto s = aggregate(v, Thresholds{}, "h");
  EXPECT_EQ(s.errored, 1);
  EXPECT_DOUBLE_EQ(s.fraction_hi, 1.0);
  EXPECT_DOUBLE_EQ(s.fraction_lo, 0.0);
  v[0].error = "boom";
  EXPECT_THROW(aggregate(v, Thresholds{}, "h"), ConsistencyError);
}

TEST(Quantile, Interpolates) {
  const std::vector<double> v{0.0, 1.0, 2.0, 3.0};
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 1.5);
  EXPECT_DOUBLE_EQ(quantile(v, 1.0), 3.0);
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
  auto j = canonical();
  j["replicas"] = 16;
  const auto c = parse_config(j);
  const std::string one = to_json(aggregate(run_sweep(c, 1), c.thresholds, config_hash(c))).dump();
  const std::string four = to_json(aggregate(run_sweep(c, 4), c.thresholds, config_hash(c))).dump();
  EXPECT_EQ(one, four);
}

TEST(Io, Formatting) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(Io, TrajectoryHeader) {
  const std::string csv = trajectory_csv({TrajectoryRow{0, 0.5, 0, 0, 0, 1, 1, 0.5, 1, 0}});
  EXPECT_EQ(csv, "n,X,M,Lambda,drift,S,S_B,Y_B,T_B,R_n\n0,0.5,0,0,0,1,1,0.5,1,0\n");
}

TEST(Io, ReportSchema) {
  ConditionReport r{"step_growth", 10};
  r.verdict = Verdict::fail;
  r.with("violation_index", 5);
  const json j = to_json(r);
  EXPECT_EQ(j["condition_name"], "step_growth");
  EXPECT_EQ(j["horizon"], 10);
  EXPECT_EQ(j["verdict"], "fail");
  EXPECT_EQ(j["witness"][0]["key"], "violation_index");
  EXPECT_EQ(reports_json({r}, "h")["schema_version"], kSchemaVersion);
}

TEST(Cli, RunTwiceIsByteIdentical) {
  const auto dir = scratch("run");
  const auto cfg = write_config(dir, canonical());
  ASSERT_EQ(cli("run --config " + cfg.string() + " --seed 7 --out " + (dir / "a").string()), 0);
  ASSERT_EQ(cli("run --config " + cfg.string() + " --seed 7 --out " + (dir / "b").string()), 0);
  EXPECT_EQ(slurp(dir / "a" / "trajectory.csv"), slurp(dir / "b" / "trajectory.csv"));
  EXPECT_EQ(slurp(dir / "a" / "report.json"), slurp(dir / "b" / "report.json"));
  ASSERT_EQ(cli("run --config " + cfg.string() + " --seed 8 --out " + (dir / "c").string()), 0);
  EXPECT_NE(slurp(dir / "a" / "trajectory.csv"), slurp(dir / "c" / "trajectory.csv"));
}

TEST(Cli, StrictCheckFailsWhenS2Fails) {
  const auto dir = scratch("check");
  auto j = canonical();
  j["schedule"]["c"] = 5.0;
  j["horizon"] = 100000;
  const auto cfg = write_config(dir, j);
  EXPECT_EQ(cli("check --config " + cfg.string() + " --strict --out " + dir.string()), 4);
  EXPECT_EQ(cli("check --config " + cfg.string() + " --out " + dir.string()), 0);
  const json checks = json::parse(slurp(dir / "checks.json"));
  bool saw_s2 = false;
  for (const auto& r : checks["reports"])
    if (r["condition_name"] == "step_growth") {
      saw_s2 = true;
      EXPECT_EQ(r["verdict"], "fail");
    }
  EXPECT_TRUE(saw_s2);
}

TEST(Cli, SweepWritesOneRowPerReplica) {
  const auto dir = scratch("sweep");
  auto j = canonical();
  j["horizon"] = 10;
  const auto cfg = write_config(dir, j);
  ASSERT_EQ(cli("sweep --config " + cfg.string() + " --out " + dir.string()), 0);
  const std::string csv = slurp(dir / "finals.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  const json s = json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(s["replicas"], 4);
  EXPECT_EQ(s["schema_version"], kSchemaVersion);
  EXPECT_TRUE(fs::exists(dir / "timing.json"));
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("codes");
  auto j = canonical();
  j["unknown"] = true;
  const auto bad = write_config(dir, j);
  EXPECT_EQ(cli("run --config " + bad.string() + " --out " + dir.string()), 2);
  const auto good = write_config(dir, canonical());
  EXPECT_EQ(cli("run --config " + good.string() + " --frobnicate"), 2);
  EXPECT_EQ(cli("run --config " + (dir / "missing.json").string()), 2);
  EXPECT_EQ(cli("frobnicate --config " + good.string()), 2);
  EXPECT_EQ(cli("run --config " + good.string() + " --out /proc/narendra_unwritable"), 2);
}

TEST(Cli, EnvironmentOverridesOutputDirectory) {
  const auto dir = scratch("env");
  const auto cfg = write_config(dir, canonical());
  const std::string cmd = "NARENDRA_OUTPUT_DIR=" + (dir / "fromenv").string() + " " + NARENDRA_CLI +
                          " mean-field --config " + cfg.string() + " > /dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "fromenv" / "mean_field.csv"));
}

TEST(Cli, ScriptedSourcesResolveRelativeToConfig) {
  const auto dir = scratch("scripted");
  std::ofstream(dir / "a.txt") << std::string(20, '1');
  auto j = canonical();
  j["horizon"] = 20;
  j["arms"]["A"] = {{"kind", "scripted"}, {"file", "a.txt"}, {"theta", 0.9}};
  const auto cfg = write_config(dir, j);
  EXPECT_EQ(cli("run --config " + cfg.string() + " --out " + dir.string()), 0);
  j["horizon"] = 21;
  write_config(dir, j);
  EXPECT_EQ(cli("run --config " + cfg.string() + " --out " + dir.string()), 2);
}
