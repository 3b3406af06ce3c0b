#include <doctest.h>

#include <cmath>

#include "chemvise/error.hpp"
#include "chemvise/signals.hpp"

using namespace chemvise;

namespace {

AffinityModel two_sensor_model(double gamma, double noise) {
  AffinityModel m;
  m.analytes = {"A", "B"};
  m.affinities.resize(2, 2);
  m.affinities << 1.0, 0.5, -0.4, 0.8;
  m.baselines = Vector::Constant(2, 1.0);
  m.tau_rise_s = (Vector(2) << 0.5, 1.0).finished();
  m.tau_decay_s = (Vector(2) << 0.8, 1.5).finished();
  m.interference_gamma = gamma;
  m.noise_sigma = noise;
  return m;
}

SensorTrace trace_of(std::initializer_list<double> column) {
  SensorTrace t;
  t.values.resize(static_cast<Eigen::Index>(column.size()), 1);
  Eigen::Index i = 0;
  for (double v : column) t.values(i++, 0) = v;
  t.channel_names = {"s0"};
  return t;
}

}  // namespace

TEST_CASE("baseline before onset without noise") {
  const auto model = two_sensor_model(0.25, 0.0);
  const ExposureSchedule schedule;
  const auto trace = simulate_trial(AnalyteMix::single("A", 0.2), model, schedule, 50.0, 3);
  CHECK(trace.samples() == 500);
  CHECK(trace.channels() == 2);
  for (Eigen::Index i = 0; trace.time_at(i) < schedule.onset_s(); ++i) {
    CHECK(trace.values(i, 0) == 1.0);
    CHECK(trace.values(i, 1) == 1.0);
  }
}

TEST_CASE("rise and decay follow first-order kinetics") {
  const auto model = two_sensor_model(0.0, 0.0);
  const ExposureSchedule schedule;
  const double t_mid = 2.5;
  CHECK(adsorption_fraction(model, 0, schedule, t_mid) ==
        doctest::Approx(1.0 - std::exp(-(t_mid - 1.0) / 0.5)).epsilon(1e-14));
  const double r_end = 1.0 - std::exp(-5.0 / 0.5);
  CHECK(adsorption_fraction(model, 0, schedule, 7.0) ==
        doctest::Approx(r_end * std::exp(-1.0 / 0.8)).epsilon(1e-14));
  CHECK(adsorption_fraction(model, 0, schedule, 0.5) == 0.0);
}

TEST_CASE("monotone adsorption during exposure for positive gains") {
  const auto model = two_sensor_model(0.0, 0.0);
  const ExposureSchedule schedule;
  const auto trace = simulate_trial(AnalyteMix::single("A", 0.25), model, schedule, 50.0, 1);
  for (Eigen::Index i = 1; i < trace.samples(); ++i) {
    const double t = trace.time_at(i);
    if (t > schedule.onset_s() && t <= schedule.exposure_end_s()) {
      CHECK(trace.values(i, 0) >= trace.values(i - 1, 0));
    }
  }
}

TEST_CASE("long desorption returns to baseline") {
  auto model = two_sensor_model(0.0, 0.0);
  ExposureSchedule schedule;
  schedule.desorption_s = 20.0;
  const auto trace = simulate_trial(AnalyteMix::single("A", 0.25), model, schedule, 50.0, 1);
  const double tol = 0.25 * std::exp(-(20.0 - 0.02) / 0.8) + 1e-15;
  CHECK(std::abs(trace.values(trace.samples() - 1, 0) - 1.0) <= tol);
}

TEST_CASE("simulation is deterministic in the seed") {
  const auto model = two_sensor_model(0.25, 0.05);
  const ExposureSchedule schedule;
  const auto mix = AnalyteMix::pair("A", 0.15, "B", 0.2);
  const auto a = simulate_trial(mix, model, schedule, 50.0, 99);
  const auto b = simulate_trial(mix, model, schedule, 50.0, 99);
  const auto c = simulate_trial(mix, model, schedule, 50.0, 100);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
}

TEST_CASE("doubles superpose when interference and noise are off") {
  const auto model = two_sensor_model(0.0, 0.0);
  const ExposureSchedule schedule;
  const auto a = simulate_trial(AnalyteMix::single("A", 0.125), model, schedule, 50.0, 1);
  const auto b = simulate_trial(AnalyteMix::single("B", 0.125), model, schedule, 50.0, 2);
  const auto ab = simulate_trial(AnalyteMix::pair("A", 0.125, "B", 0.125), model, schedule, 50.0, 3);
  CHECK((superpose(a, b).values - ab.values).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((superpose(a, b).values - superpose(b, a).values).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("interference only affects doubles") {
  const auto model = two_sensor_model(0.5, 0.0);
  const ExposureSchedule schedule;
  const auto a = simulate_trial(AnalyteMix::single("A", 0.2), model, schedule, 50.0, 1);
  const auto b = simulate_trial(AnalyteMix::single("B", 0.2), model, schedule, 50.0, 1);
  const auto ab = simulate_trial(AnalyteMix::pair("A", 0.2, "B", 0.2), model, schedule, 50.0, 1);
  const Matrix extra = ab.values - superpose(a, b).values;
  const Eigen::Index i = 150;  // t = 3 s, inside exposure
  const double ra = adsorption_fraction(model, 0, schedule, ab.time_at(i));
  const double rb = adsorption_fraction(model, 1, schedule, ab.time_at(i));
  CHECK(extra(i, 0) == doctest::Approx(0.5 * (0.2 * 1.0 * ra) * (0.2 * 0.5 * rb)).epsilon(1e-12));
}

TEST_CASE("superpose with a zero trace is the identity") {
  const auto x = trace_of({1.0, 2.0, 4.0});
  const auto zero = trace_of({0.0, 0.0, 0.0});
  CHECK(superpose(x, zero).values == x.values);
  CHECK_THROWS_AS(superpose(x, trace_of({0.0, 0.0})), Error);
}

TEST_CASE("zscore of [1, 2, 3]") {
  const auto z = zscore(trace_of({1.0, 2.0, 3.0}));
  // population sd is sqrt(2/3)
  CHECK(z.values(0, 0) == doctest::Approx(-1.0 / std::sqrt(2.0 / 3.0)).epsilon(1e-12));
  CHECK(z.values(0, 0) == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(z.values(1, 0) == 0.0);
  CHECK(z.values(2, 0) == doctest::Approx(1.2247).epsilon(1e-4));
}

TEST_CASE("constant channel maps to zeros with a warning") {
  Diagnostics diag;
  const auto z = zscore(trace_of({5.0, 5.0, 5.0}), &diag);
  CHECK(z.values.isZero(0.0));
  CHECK(diag.warnings.size() == 1);
}

TEST_CASE("zscore is idempotent and normalises every channel") {
  const auto model = two_sensor_model(0.25, 0.05);
  const auto trace = simulate_trial(AnalyteMix::single("B", 0.15), model, ExposureSchedule{}, 50.0, 8);
  const auto z = zscore(trace);
  for (Eigen::Index c = 0; c < z.channels(); ++c) {
    const auto col = z.values.col(c);
    const double mean = col.mean();
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt((col.array() - mean).square().mean()) - 1.0) < 1e-9);
  }
  CHECK((zscore(z).values - z.values).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("window lengths and time-major flattening") {
  auto model = two_sensor_model(0.0, 0.0);
  model.affinities = Matrix::Random(8, 2);
  model.baselines = Vector::Constant(8, 1.0);
  const auto trace = simulate_trial(AnalyteMix::single("A", 0.2), model, ExposureSchedule{}, 50.0, 1);
  CHECK(extract_window(trace, 1.0, 0.4, 2.4).values.size() == 960);
  CHECK(extract_window(trace, 1.0, 0.4, 4.0).values.size() == 1600);
  const auto w = extract_window(trace, 1.0, 0.4, 2.4);
  const Eigen::Index start = 30;  // (1.0 - 0.4) s at 50 Hz
  CHECK(w.values[0] == trace.values(start, 0));
  CHECK(w.values[7] == trace.values(start, 7));
  CHECK(w.values[8] == trace.values(start + 1, 0));
  CHECK(extract_window(trace, 1.0, 0.4, 2.4).values == w.values);
}

TEST_CASE("full-length window is the whole trace") {
  const auto model = two_sensor_model(0.0, 0.0);
  const auto trace = simulate_trial(AnalyteMix::single("A", 0.2), model, ExposureSchedule{}, 50.0, 1);
  const auto w = extract_window(trace, 1.0, 1.0, 10.0);
  CHECK(w.values.size() == trace.values.size());
  CHECK(w.values == Eigen::Map<const Vector>(trace.values.data(), trace.values.size()));
}

TEST_CASE("window errors") {
  const auto model = two_sensor_model(0.0, 0.0);
  const auto trace = simulate_trial(AnalyteMix::single("A", 0.2), model, ExposureSchedule{}, 50.0, 1);
  try {
    extract_window(trace, 1.0, 0.4, 12.0);
    FAIL("expected a range error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kRange);
  }
  CHECK_THROWS_AS(extract_window(trace, 1.0, 2.0, 3.0), Error);
  CHECK_THROWS_AS(extract_window(trace, 1.0, 0.4, 0.3), Error);
}

TEST_CASE("mix validation and labels") {
  const auto mix = AnalyteMix::pair("B", 0.2, "A", 0.125);
  CHECK(mix.label_positive("A"));
  CHECK_FALSE(AnalyteMix::pair("B", 0.2, "C", 0.1).label_positive("A"));
  CHECK(mix.describe() == "B:0.2+A:0.125");
  CHECK_THROWS_AS(AnalyteMix::pair("A", 0.2, "A", 0.1).validate(), Error);
  CHECK_THROWS_AS(AnalyteMix::single("A", 1.5).validate(), Error);
  CHECK_THROWS_AS(AnalyteMix::single("A", 0.0).validate(), Error);
}

TEST_CASE("unknown analyte and bad schedule") {
  const auto model = two_sensor_model(0.0, 0.0);
  try {
    simulate_trial(AnalyteMix::single("Z", 0.2), model, ExposureSchedule{}, 50.0, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK((e.kind() == ErrorKind::kConfig || e.kind() == ErrorKind::kLookup));
  }
  ExposureSchedule bad;
  bad.exposure_s = 0.0;
  try {
    simulate_trial(AnalyteMix::single("A", 0.2), model, bad, 50.0, 1);
    FAIL("expected a schedule error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kSchedule);
  }
}
