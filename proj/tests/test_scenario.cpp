#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "fairaoi/random.hpp"
#include "fairaoi/scenario.hpp"

using namespace fairaoi;

TEST_CASE("dwell time is range over speed") {
  CHECK(dwell_time(200.0, 25.0) == Catch::Approx(8.0).epsilon(1e-12));
  CHECK(dwell_time(0.0, 10.0) == 0.0);
  CHECK_THROWS_AS(dwell_time(200.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(dwell_time(200.0, -5.0), std::domain_error);
  CHECK_THROWS_AS(dwell_time(-1.0, 5.0), std::domain_error);
}

TEST_CASE("slot duration and reservation period follow the numerology") {
  ScenarioConfig cfg;
  CHECK(cfg.slot_seconds() == Catch::Approx(0.001).epsilon(1e-15));
  CHECK(cfg.period_slots() == 100);

  cfg.scs_exp = 2;  // 0.25 ms slots
  CHECK(cfg.slot_seconds() == Catch::Approx(0.00025).epsilon(1e-15));
  CHECK(cfg.period_slots() == 400);

  cfg.scs_exp = 0;
  cfg.rri_s = 0.0015123;  // 1.5123 slots: not a whole number
  CHECK_THROWS_AS(cfg.period_slots(), config_error);
}

TEST_CASE("snr follows the power-law link budget") {
  ScenarioConfig cfg;
  Vehicle v;
  v.tx_power = 2e8;
  v.channel_gain = 1.0;
  v.distance_m = 200.0;
  // 2e8 * 200^-3 / 7.943282... = 25 / 7.943282...
  double expect = 25.0 / 7.943282347242815;
  CHECK(snr_linear(v, cfg) == Catch::Approx(expect).epsilon(1e-12));

  v.channel_gain = 0.25;
  CHECK(snr_linear(v, cfg) == Catch::Approx(expect * 0.25).epsilon(1e-12));

  v.distance_m = 0.0;
  CHECK_THROWS_AS(snr_linear(v, cfg), std::domain_error);
}

TEST_CASE("per-image transmission time") {
  // 8000 bits / (20 MHz * log2(1+15) * 1) = 8000 / 8e7 = 1e-4 s
  CHECK(per_image_tx_time(8000.0, 20e6, 15.0, 1.0) == Catch::Approx(1e-4).epsilon(1e-12));
  // Halving the reception probability doubles the air time.
  CHECK(per_image_tx_time(8000.0, 20e6, 15.0, 0.5) == Catch::Approx(2e-4).epsilon(1e-12));
  CHECK(per_image_tx_time(0.0, 20e6, 15.0, 1.0) == 0.0);
  CHECK_THROWS_AS(per_image_tx_time(8000.0, 20e6, 15.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(per_image_tx_time(8000.0, 20e6, 15.0, 1.5), std::domain_error);
  CHECK_THROWS_AS(per_image_tx_time(8000.0, 0.0, 15.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(per_image_tx_time(-1.0, 20e6, 15.0, 1.0), std::domain_error);
}

TEST_CASE("autoregressive proxy keeps unit variance and lag-1 correlation rho") {
  const double rho = 0.9;
  Rng rng(77);
  double x = rng.gaussian();
  const std::size_t n = 1000000;
  double sum = 0, sum2 = 0, lag = 0, prev = x;
  for (std::size_t i = 0; i < n; ++i) {
    x = ar_step(x, rho, rng);
    sum += x;
    sum2 += x * x;
    lag += x * prev;
    prev = x;
  }
  double mean = sum / n;
  double var = sum2 / n - mean * mean;
  double corr = (lag / n - mean * mean) / var;
  CHECK(std::fabs(mean) < 0.01);
  CHECK(var == Catch::Approx(1.0).margin(0.02));
  CHECK(corr == Catch::Approx(rho).margin(0.01));

  SECTION("rho = 1 keeps the proxy constant") {
    double y = 1.37;
    for (int i = 0; i < 10; ++i) y = ar_step(y, 1.0, rng);
    CHECK(y == Catch::Approx(1.37).epsilon(1e-12));
  }
  CHECK_THROWS_AS(ar_step(0.0, 1.5, rng), std::domain_error);
}

TEST_CASE("channel gain is the squared proxy with a positive floor") {
  CHECK(gain_from_proxy(2.0) == Catch::Approx(4.0));
  CHECK(gain_from_proxy(-3.0) == Catch::Approx(9.0));
  CHECK(gain_from_proxy(0.0) == 1e-9);
  CHECK(gain_from_proxy(1e-6) == Catch::Approx(1e-9).margin(1e-12));
}

TEST_CASE("window vector rounds half up and clamps") {
  WindowVector w(std::vector<double>{20.5, 20.49, 149.5, 150.2, 19.0});
  auto s = w.slots();
  CHECK(s == std::vector<int>{21, 20, 150, 150, 19});
  w.clamp(20, 150);
  CHECK(w[3] == 150.0);
  CHECK(w[4] == 20.0);

  ScenarioConfig cfg;
  WindowVector bad(std::vector<double>{10.0, 30.0});
  CHECK_THROWS_AS(check_windows(bad, cfg), config_error);
  WindowVector ok(std::vector<double>{20.0, 150.0});
  CHECK_NOTHROW(check_windows(ok, cfg));
}

TEST_CASE("config validation rejects broken setups") {
  ScenarioConfig cfg;
  CHECK_NOTHROW(cfg.validate());

  SECTION("window box inverted") {
    cfg.w_min_slots = 200;
    CHECK_THROWS_AS(cfg.validate(), config_error);
  }
  SECTION("lane speed outside the envelope") {
    cfg.lane_speeds = {21.4, 25.0, 35.0};
    CHECK_THROWS_AS(cfg.validate(), config_error);
  }
  SECTION("lane speeds too close") {
    cfg.lane_speeds = {21.4, 22.0, 28.6};
    CHECK_THROWS_AS(cfg.validate(), config_error);
  }
  SECTION("re-evaluation faster than the slowest service rate") {
    cfg.t_reeval_s = 0.05;  // E = 20 >= H(w_max) ~ 6.6
    CHECK_THROWS_AS(cfg.validate(), config_error);
  }
  SECTION("baseline window outside the box") {
    cfg.baseline_window_slots = 10;
    CHECK_THROWS_AS(cfg.validate(), config_error);
  }
  SECTION("nonpositive density is allowed at zero only") {
    cfg.vehicle_density_per_m = 0.0;
    CHECK_NOTHROW(cfg.validate());
    cfg.vehicle_density_per_m = -0.1;
    CHECK_THROWS_AS(cfg.validate(), config_error);
  }
}

TEST_CASE("vehicle placement is Poisson per lane with uniform positions") {
  ScenarioConfig cfg;
  // Expected count per lane = density * range = 0.015 * 200 = 3.
  const int runs = 20000;
  long long total = 0;
  double max_d = 0.0, min_d = 1e18;
  for (int s = 0; s < runs; ++s) {
    auto veh = place_vehicles(cfg, 1000 + static_cast<std::uint64_t>(s));
    total += static_cast<long long>(veh.size());
    for (const auto& v : veh) {
      max_d = std::max(max_d, v.distance_m);
      min_d = std::min(min_d, v.distance_m);
      CHECK(v.distance_m > 0.0);
      CHECK(v.distance_m <= cfg.rsu_range_m);
      CHECK(v.speed_mps == cfg.lane_speeds[static_cast<std::size_t>(v.lane)]);
    }
  }
  double mean = static_cast<double>(total) / runs;
  CHECK(mean == Catch::Approx(9.0).margin(0.09));  // 3 lanes * 3, 1%
  CHECK(max_d > 0.99 * cfg.rsu_range_m);
  CHECK(min_d < 0.01 * cfg.rsu_range_m);

  SECTION("same seed reproduces the same fleet") {
    auto a = place_vehicles(cfg, 42);
    auto b = place_vehicles(cfg, 42);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].distance_m == b[i].distance_m);
      CHECK(a[i].lane == b[i].lane);
    }
  }
}

TEST_CASE("snapshot instance cycles lanes at the midpoint distance") {
  ScenarioConfig cfg;
  auto veh = snapshot_vehicles(cfg, 5);
  REQUIRE(veh.size() == 5);
  for (std::size_t i = 0; i < veh.size(); ++i) {
    CHECK(veh[i].lane == static_cast<int>(i % 3));
    CHECK(veh[i].distance_m == Catch::Approx(100.0));
    CHECK(veh[i].speed_mps == cfg.lane_speeds[i % 3]);
  }
  cfg.distance_snapshot_m = 55.0;
  CHECK(snapshot_vehicles(cfg, 1)[0].distance_m == Catch::Approx(55.0));
  CHECK_THROWS_AS(snapshot_vehicles(cfg, 0), config_error);
}

TEST_CASE("rng transforms match their distributions") {
  SECTION("exponential mean within 0.5%") {
    Rng rng(9001);
    const std::size_t n = 1000000;
    const double rate = 2.0;
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) sum += rng.exponential(rate);
    CHECK(sum / n == Catch::Approx(1.0 / rate).epsilon(0.005));
  }
  SECTION("poisson mean within 1%") {
    Rng rng(123);
    const std::size_t n = 100000;
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) sum += static_cast<double>(rng.poisson(3.0));
    CHECK(sum / n == Catch::Approx(3.0).epsilon(0.01));
  }
  SECTION("gaussian moments") {
    Rng rng(5);
    const std::size_t n = 500000;
    double sum = 0, sum2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double g = rng.gaussian();
      sum += g;
      sum2 += g * g;
    }
    CHECK(std::fabs(sum / n) < 0.005);
    CHECK(sum2 / n == Catch::Approx(1.0).margin(0.01));
  }
  SECTION("below() covers the range") {
    Rng rng(31337);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) seen.insert(rng.below(7));
    CHECK(seen.size() == 7);
    CHECK(*seen.rbegin() == 6);
  }
  SECTION("uniform01 stays in [0,1)") {
    Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
      double u = rng.uniform01();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
    }
  }
}
