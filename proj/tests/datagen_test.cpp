#include <cmath>
#include <numbers>

#include <gtest/gtest.h>
#include <spdlog/spdlog.h>

#include "heatadapt/datagen.hpp"
#include "support/benchmark.hpp"

using namespace heatadapt;

namespace {

class Quiet : public ::testing::Environment {
  void SetUp() override { spdlog::set_level(spdlog::level::off); }
};
const auto* const quiet = ::testing::AddGlobalTestEnvironment(new Quiet);

}  // namespace

TEST(Datagen, NoiselessTargetsMatchPhysicalModelExactly) {
  const auto cfg = bench::generator(3, 40, 0.0);
  const auto d = generate_dataset(cfg);
  ASSERT_EQ(d.records.size(), 40u);
  EXPECT_TRUE(d.skipped.empty());
  EXPECT_EQ(evaluate_mae(d.records, cfg.material, cfg.setup), 0.0);
}

TEST(Datagen, NoiseLevelMatchesHalfNormalMean) {
  const auto cfg = bench::generator(4, 1000, 5.0);
  const auto d = generate_dataset(cfg);
  const double expected = 5.0 * std::sqrt(2.0 / std::numbers::pi);  // E|N(0, s)| = s sqrt(2/pi)
  EXPECT_NEAR(evaluate_mae(d.records, cfg.material, cfg.setup), expected, 0.1 * expected);
}

TEST(Datagen, DeterministicAndThreadInvariant) {
  auto cfg = bench::generator(5, 30);
  const auto a = generate_dataset(cfg);
  EXPECT_EQ(generate_dataset(cfg).records, a.records);
  cfg.threads = 3;
  EXPECT_EQ(generate_dataset(cfg).records, a.records);
  cfg.threads = 1;
  cfg.seed = 6;
  EXPECT_NE(generate_dataset(cfg).records, a.records);
}

TEST(Datagen, PrefixStable) {
  const auto small = generate_dataset(bench::generator(7, 10)).records;
  const auto big = generate_dataset(bench::generator(7, 25)).records;
  for (std::size_t i = 0; i < small.size(); ++i) EXPECT_EQ(small[i], big[i]);
}

TEST(Datagen, DrawsStayInRanges) {
  const auto cfg = bench::generator(8, 200, 5.0);
  const auto d = generate_dataset(cfg);
  for (const auto& r : d.records) {
    EXPECT_LE(r.zone_temp_135, r.zone_temp_246);
    for (double t : {r.zone_temp_135, r.zone_temp_246}) {
      EXPECT_GE(t, cfg.zone_temp.lo);
      EXPECT_LE(t, cfg.zone_temp.hi);
    }
    for (double t : {r.zone_time_12, r.zone_time_34, r.zone_time_56}) {
      EXPECT_GE(t, cfg.zone_time.lo);
      EXPECT_LE(t, cfg.zone_time.hi);
    }
    for (double p : {r.zone_press_12, r.zone_press_34, r.zone_press_56}) {
      EXPECT_GE(p, cfg.pressure.lo);
      EXPECT_LE(p, cfg.pressure.hi);
    }
    EXPECT_GE(r.cooling_time, cfg.cooling_time.lo);
    EXPECT_LE(r.cooling_time, cfg.cooling_time.hi);
    // a heated billet ends between the initial temperature and the hottest zone, up to the noise
    EXPECT_GT(r.target_temp, cfg.setup.initial_temp - 30.0);
    EXPECT_LT(r.target_temp, r.zone_temp_246 + 30.0);
    EXPECT_EQ(record_to_schedule(r, cfg.setup.tau).horizon(), 20u);
  }
}

TEST(Datagen, InvalidConfigRejected) {
  auto cfg = bench::generator(1, 10);
  cfg.n_records = 0;
  EXPECT_THROW(generate_dataset(cfg), InvalidConfig);
  cfg = bench::generator(1, 10);
  cfg.zone_temp = {1500, 1100};
  EXPECT_THROW(generate_dataset(cfg), InvalidConfig);
  cfg = bench::generator(1, 10);
  cfg.noise_sigma = -1;
  EXPECT_THROW(generate_dataset(cfg), InvalidConfig);
}

TEST(Datagen, DegenerateDrawsAreSkippedAndCounted) {
  auto cfg = bench::generator(1, 10);
  cfg.setup.tau = 1e5;  // every record is shorter than one step
  EXPECT_THROW(generate_dataset(cfg), NumericalError);
  cfg.max_skip_fraction = 1.0;
  const auto d = generate_dataset(cfg);
  EXPECT_TRUE(d.records.empty());
  EXPECT_EQ(d.skipped.size(), 10u);
}
