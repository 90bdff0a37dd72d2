#pragma once

// Synthetic furnace logs: random zone schedules pushed through the physical model, plus Gaussian
// pyrometer noise on the readout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <spdlog/spdlog.h>

#include "heatadapt/errors.hpp"
#include "heatadapt/materials.hpp"
#include "heatadapt/trainer.hpp"

namespace heatadapt {

struct Range {
  double lo;
  double hi;
};

struct GeneratorConfig {
  std::size_t n_records = 200;
  MaterialModel material = default_carbon_steel();
  Range zone_time{690.0, 750.0};     // s, each of the three zone pairs
  Range zone_temp{1100.0, 1500.0};   // K
  Range cooling_time{190.0, 290.0};  // s
  Range pressure{0.5, 1.5};          // arbitrary units, inert
  double noise_sigma = 5.0;          // K
  std::uint64_t seed = 1;
  ModelSetup setup;
  unsigned threads = 1;
  double max_skip_fraction = 0.01;

  void validate() const {
    if (n_records < 1) throw InvalidConfig("n_records", "must be >= 1");
    auto ordered = [](const Range& r, const char* key, bool positive) {
      if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !(r.lo <= r.hi)) throw InvalidConfig(key, "range must be ordered");
      if (positive ? !(r.lo > 0.0) : !(r.lo >= 0.0)) throw InvalidConfig(key, positive ? "must be > 0" : "must be >= 0");
    };
    ordered(zone_time, "zone_time", false);
    ordered(zone_temp, "zone_temp", true);
    ordered(cooling_time, "cooling_time", false);
    ordered(pressure, "pressure", false);
    if (!(noise_sigma >= 0.0)) throw InvalidConfig("noise_sigma", "must be >= 0");
    if (!(setup.tau > 0.0)) throw InvalidConfig("tau", "must be > 0");
    if (threads < 1) throw InvalidConfig("threads", "must be >= 1");
  }
};

struct GeneratedDataset {
  Dataset records;
  std::vector<std::string> skipped;  // one reason per dropped draw
};

namespace detail {

inline constexpr std::uint64_t kGeneratorStream = 4;

inline HeatingRecord draw_record(std::mt19937_64& rng, const GeneratorConfig& cfg) {
  auto U = [&](const Range& r) { return std::uniform_real_distribution<double>(r.lo, r.hi)(rng); };
  HeatingRecord r;
  r.zone_time_12 = U(cfg.zone_time);
  r.zone_time_34 = U(cfg.zone_time);
  r.zone_time_56 = U(cfg.zone_time);
  double a = U(cfg.zone_temp), b = U(cfg.zone_temp);
  if (a > b) std::swap(a, b);  // methodical furnace: later zones run hotter
  r.zone_temp_135 = a;
  r.zone_temp_246 = b;
  r.zone_press_12 = U(cfg.pressure);
  r.zone_press_34 = U(cfg.pressure);
  r.zone_press_56 = U(cfg.pressure);
  r.cooling_time = U(cfg.cooling_time);
  return r;
}

}  // namespace detail

/// Record i depends only on (seed, i), so the output is the same for any thread count.
inline GeneratedDataset generate_dataset(const GeneratorConfig& cfg) {
  cfg.validate();
  struct Slot {
    HeatingRecord record;
    std::string failure;
  };
  std::vector<Slot> slots(cfg.n_records);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto rng = detail::seeded(cfg.seed, detail::kGeneratorStream, i);
      HeatingRecord r = detail::draw_record(rng, cfg);
      const double noise = cfg.noise_sigma > 0.0 ? std::normal_distribution<double>(0.0, cfg.noise_sigma)(rng) : 0.0;
      try {
        r.target_temp = predict(r, cfg.material, cfg.setup) + noise;
        slots[i].record = r;
      } catch (const NumericalError& e) {
        slots[i].failure = "record " + std::to_string(i) + ": " + e.what();
      } catch (const DegenerateRecord& e) {
        slots[i].failure = "record " + std::to_string(i) + ": " + e.what();
      }
    }
  };
  const std::size_t nt = std::min<std::size_t>(cfg.threads, cfg.n_records);
  if (nt <= 1) {
    work(0, cfg.n_records);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nt);
    const std::size_t chunk = (cfg.n_records + nt - 1) / nt;
    for (std::size_t t = 0; t < nt; ++t)
      pool.emplace_back([&, t] {
        try {
          work(t * chunk, std::min(cfg.n_records, (t + 1) * chunk));
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  GeneratedDataset out;
  for (auto& s : slots) {
    if (s.failure.empty()) {
      out.records.push_back(s.record);
    } else {
      spdlog::warn("skipped {}", s.failure);
      out.skipped.push_back(std::move(s.failure));
    }
  }
  if (static_cast<double>(out.skipped.size()) > cfg.max_skip_fraction * static_cast<double>(cfg.n_records))
    throw NumericalError("dataset generation skipped " + std::to_string(out.skipped.size()) + " of " +
                         std::to_string(cfg.n_records) + " records");
  return out;
}

}  // namespace heatadapt
