#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "qreduce/harness.hpp"

using namespace qreduce;
using namespace qreduce::harness;
using nlohmann::json;

TEST(Harness, ParseOracle) {
  EXPECT_EQ(parse_oracle("exhaustive", 0).strategy(), Strategy::exhaustive);
  EXPECT_EQ(parse_oracle("mitm", 0).strategy(), Strategy::meet_in_middle);
  EXPECT_EQ(parse_oracle("unreliable:0.5", 1).thinnings().size(), 1u);
  EXPECT_THROW(parse_oracle("unreliable:0", 1), UsageError);
  EXPECT_THROW(parse_oracle("unreliable:x", 1), UsageError);
  EXPECT_THROW(parse_oracle("oracle", 1), UsageError);
}

TEST(Harness, LoadConfig) {
  const std::string path = testing::TempDir() + "/qreduce_cfg.json";
  {
    std::ofstream out(path);
    out << R"({"seed": 9, "trials": 3, "N": 512, "params": {"bad_prob": 0.1}})";
  }
  const auto cfg = load_config(path);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.trials, 3u);
  EXPECT_EQ(cfg.params["N"], 512);
  EXPECT_DOUBLE_EQ(cfg.params["bad_prob"].get<double>(), 0.1);
  std::remove(path.c_str());
  EXPECT_THROW(load_config(path), IoError);
}

TEST(Harness, TrialsKeepOrder) {
  const auto out = run_trials(7, 3, [](std::uint64_t i) { return json(i * i); });
  for (std::uint64_t i = 0; i < 7; ++i) EXPECT_EQ(out[i], i * i);
  EXPECT_THROW(run_trials(4, 2, [](std::uint64_t i) -> json {
                 if (i == 2) throw std::runtime_error("boom");
                 return i;
               }),
               std::runtime_error);
}

TEST(Harness, ReportsAreReplayable) {
  ExperimentConfig cfg;
  cfg.command = "solve-dcp";
  cfg.seed = 4;
  cfg.trials = 2;
  cfg.omit_timing = true;
  cfg.params = {{"N", 256}, {"bad_prob", 0.0}};
  const auto a = run(cfg).body.dump();
  cfg.threads = 2;
  const auto b = run(cfg).body.dump();
  EXPECT_EQ(a, b);
  const auto j = json::parse(a);
  EXPECT_EQ(j["config"]["params"]["N"], 256);
  EXPECT_FALSE(j.contains("wall_time_s"));
  EXPECT_EQ(j["result"]["success_rate"].get<double>(), 1.0);
  cfg.omit_timing = false;
  EXPECT_TRUE(run(cfg).body.contains("wall_time_s"));
}

TEST(Harness, DcpEdgeCases) {
  ExperimentConfig cfg;
  cfg.command = "solve-dcp";
  cfg.params = {{"N", 2}};
  EXPECT_TRUE(run(cfg).criterion_met);
  cfg.params = {{"N", 256}, {"bad_prob", 1.5}};
  EXPECT_THROW(run(cfg), UsageError);
  cfg.params = {{"N", "many"}};
  EXPECT_THROW(run(cfg), UsageError);
  cfg.command = "nothing";
  EXPECT_THROW(run(cfg), UsageError);
}

TEST(Harness, StatsBatteries) {
  ExperimentConfig cfg;
  cfg.command = "matching-stats";
  cfg.params = {{"N", 512}, {"q_max", 8}, {"sets", 10}};
  const auto r = run(cfg);
  EXPECT_TRUE(r.criterion_met);
  EXPECT_EQ(r.body["result"]["involution"]["failures"], 0);
  cfg.command = "subsetsum-stats";
  cfg.params = {{"batteries", json::array()}};
  EXPECT_TRUE(run(cfg).body["result"].empty());
  cfg.params = {{"batteries", {"nope"}}};
  EXPECT_THROW(run(cfg), UsageError);
}

TEST(Harness, SvpMissingInstance) {
  ExperimentConfig cfg;
  cfg.command = "solve-svp";
  cfg.params = {{"instance", "/nonexistent/instance.json"}};
  EXPECT_THROW(run(cfg), IoError);
  cfg.params = {{"mode", "sphere"}};
  EXPECT_THROW(run(cfg), UsageError);
}

TEST(Harness, Selftest) {
  ExperimentConfig cfg;
  cfg.command = "selftest";
  EXPECT_TRUE(run(cfg).criterion_met);
}
