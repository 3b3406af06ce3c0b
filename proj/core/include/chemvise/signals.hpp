#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "chemvise/common.hpp"

namespace chemvise {

// Sensor resistances over time: values is [T x S], one row per sample.
struct SensorTrace {
  double sample_rate_hz = 50.0;
  double t0_s = 0.0;
  Matrix values;
  std::vector<std::string> channel_names;

  Eigen::Index samples() const { return values.rows(); }
  Eigen::Index channels() const { return values.cols(); }
  double duration_s() const { return static_cast<double>(values.rows()) / sample_rate_hz; }
  double time_at(Eigen::Index i) const { return t0_s + static_cast<double>(i) / sample_rate_hz; }

  void validate() const;
};

std::vector<std::string> default_channel_names(int n_sensors);

struct MixComponent {
  std::string analyte;
  double concentration = 0.0;  // in (0, 1]

  bool operator==(const MixComponent&) const = default;
};

// One exposure: a single analyte or a pair.
struct AnalyteMix {
  std::vector<MixComponent> components;

  static AnalyteMix single(std::string analyte, double concentration);
  static AnalyteMix pair(std::string a, double conc_a, std::string b, double conc_b);

  bool contains(std::string_view analyte) const;
  bool is_single() const { return components.size() == 1; }
  // True iff any component is the target analyte.
  bool label_positive(std::string_view target_analyte) const { return contains(target_analyte); }
  std::string describe() const;

  void validate() const;

  bool operator==(const AnalyteMix&) const = default;
};

struct ExposureSchedule {
  double baseline_s = 1.0;
  double exposure_s = 5.0;
  double desorption_s = 4.0;

  double onset_s() const { return baseline_s; }
  double exposure_end_s() const { return baseline_s + exposure_s; }
  double total_s() const { return baseline_s + exposure_s + desorption_s; }

  void validate() const;
};

// First-order adsorption/desorption response of each sensor coating to each
// analyte. Column a of `affinities` is the per-sensor gain for analytes[a].
struct AffinityModel {
  std::vector<std::string> analytes;
  Matrix affinities;  // [S x n_analytes]
  Vector baselines;   // [S]
  Vector tau_rise_s;  // [n_analytes]
  Vector tau_decay_s; // [n_analytes]
  double interference_gamma = 0.25;
  double noise_sigma = 0.05;
  // When set, the summed adsorption term passes through scale*tanh(x/scale).
  bool soft_clip = false;
  double soft_clip_scale = 1.0;
  std::uint64_t seed = 0;

  int n_sensors() const { return static_cast<int>(affinities.rows()); }
  int index_of(std::string_view analyte) const;  // raises kLookup

  void validate() const;
};

// Random coatings for arbitrary analyte lists: gains drawn from N(0, 1),
// kinetics log-uniform in [0.4, 2.5] s.
AffinityModel random_affinity_model(const std::vector<std::string>& analytes, int n_sensors,
                                    std::uint64_t seed);

struct FeatureVector {
  Vector values;
  double window_length_s = 0.0;
  std::string provenance;
};

// Fraction of the saturated response reached by analyte `a` at time t.
double adsorption_fraction(const AffinityModel& model, int analyte_index,
                           const ExposureSchedule& schedule, double t);

SensorTrace simulate_trial(const AnalyteMix& mix, const AffinityModel& model,
                           const ExposureSchedule& schedule, double sample_rate_hz,
                           std::uint64_t rng_seed);

// Per-channel standardisation with the population standard deviation.
// Channels with sd < 1e-12 become zeros and a warning is recorded.
SensorTrace zscore(const SensorTrace& trace, Diagnostics* diagnostics = nullptr);

// Sub-trace covering [onset - pre_onset, onset - pre_onset + length).
SensorTrace crop_window(const SensorTrace& trace, double onset_s, double pre_onset_s,
                        double length_s);

// Number of samples a window of `length_s` holds at `sample_rate_hz`.
Eigen::Index window_samples(double length_s, double sample_rate_hz);

// Flattened time-major crop: all channels at step 0, then step 1, ...
FeatureVector extract_window(const SensorTrace& trace, double onset_s, double pre_onset_s,
                             double length_s);

// crop -> zscore -> flatten, the preprocessing every learner consumes.
FeatureVector featurize(const SensorTrace& trace, double onset_s, double pre_onset_s,
                        double length_s, Diagnostics* diagnostics = nullptr);

// a + b - baseline(b), where baseline(b) is b's first sample.
SensorTrace superpose(const SensorTrace& a, const SensorTrace& b);

}  // namespace chemvise
