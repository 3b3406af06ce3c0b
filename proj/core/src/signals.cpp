#include "chemvise/signals.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "chemvise/csv.hpp"
#include "chemvise/error.hpp"

namespace chemvise {

namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

void SensorTrace::validate() const {
  require(sample_rate_hz > 0.0 && std::isfinite(sample_rate_hz), ErrorKind::kConfig,
          "sample rate must be positive");
  require(values.rows() >= 1 && values.cols() >= 1, ErrorKind::kDimension,
          "trace must have at least one sample and one channel");
  require(channel_names.size() == static_cast<std::size_t>(values.cols()), ErrorKind::kDimension,
          "channel name count does not match trace width");
  require(all_finite(values), ErrorKind::kNumeric, "trace contains non-finite values");
}

std::vector<std::string> default_channel_names(int n_sensors) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(n_sensors));
  for (int s = 0; s < n_sensors; ++s) names.push_back("s" + std::to_string(s));
  return names;
}

AnalyteMix AnalyteMix::single(std::string analyte, double concentration) {
  return AnalyteMix{{MixComponent{std::move(analyte), concentration}}};
}

AnalyteMix AnalyteMix::pair(std::string a, double conc_a, std::string b, double conc_b) {
  return AnalyteMix{{MixComponent{std::move(a), conc_a}, MixComponent{std::move(b), conc_b}}};
}

bool AnalyteMix::contains(std::string_view analyte) const {
  return std::any_of(components.begin(), components.end(),
                     [&](const MixComponent& c) { return c.analyte == analyte; });
}

std::string AnalyteMix::describe() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (i) out << '+';
    out << components[i].analyte << ':' << csv::format_double(components[i].concentration);
  }
  return out.str();
}

void AnalyteMix::validate() const {
  require(!components.empty() && components.size() <= 2, ErrorKind::kConfig,
          "an exposure holds one or two analytes, got " + std::to_string(components.size()));
  for (const auto& c : components) {
    require(!c.analyte.empty(), ErrorKind::kConfig, "empty analyte id");
    require(c.concentration > 0.0 && c.concentration <= 1.0, ErrorKind::kConfig,
            "concentration of " + c.analyte + " must lie in (0, 1]");
  }
  if (components.size() == 2) {
    require(components[0].analyte != components[1].analyte, ErrorKind::kConfig,
            "duplicate analyte " + components[0].analyte + " in mix");
  }
}

void ExposureSchedule::validate() const {
  require(std::isfinite(baseline_s) && baseline_s >= 0.0, ErrorKind::kSchedule,
          "baseline duration must be non-negative");
  require(std::isfinite(exposure_s) && exposure_s > 0.0, ErrorKind::kSchedule,
          "exposure duration must be positive");
  require(std::isfinite(desorption_s) && desorption_s >= 0.0, ErrorKind::kSchedule,
          "desorption duration must be non-negative");
}

int AffinityModel::index_of(std::string_view analyte) const {
  for (std::size_t i = 0; i < analytes.size(); ++i) {
    if (analytes[i] == analyte) return static_cast<int>(i);
  }
  raise(ErrorKind::kLookup, "unknown analyte '" + std::string(analyte) + "'");
}

void AffinityModel::validate() const {
  const auto n = static_cast<Eigen::Index>(analytes.size());
  require(n >= 1, ErrorKind::kConfig, "affinity model needs at least one analyte");
  require(affinities.rows() >= 1, ErrorKind::kConfig, "affinity model needs at least one sensor");
  require(affinities.cols() == n, ErrorKind::kConfig,
          "affinity matrix has " + std::to_string(affinities.cols()) + " columns for " +
              std::to_string(n) + " analytes");
  require(baselines.size() == affinities.rows(), ErrorKind::kConfig,
          "baseline count does not match sensor count");
  require(tau_rise_s.size() == n && tau_decay_s.size() == n, ErrorKind::kConfig,
          "kinetics constants must be given per analyte");
  require((tau_rise_s.array() > 0.0).all() && (tau_decay_s.array() > 0.0).all(),
          ErrorKind::kConfig, "kinetics constants must be positive");
  require(affinities.allFinite() && baselines.allFinite() && tau_rise_s.allFinite() &&
              tau_decay_s.allFinite(),
          ErrorKind::kConfig, "affinity model contains non-finite values");
  require(interference_gamma >= 0.0 && std::isfinite(interference_gamma), ErrorKind::kConfig,
          "interference gamma must be non-negative");
  require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), ErrorKind::kConfig,
          "noise sigma must be non-negative");
  require(soft_clip_scale > 0.0, ErrorKind::kConfig, "soft clip scale must be positive");
  for (std::size_t i = 0; i < analytes.size(); ++i) {
    for (std::size_t j = i + 1; j < analytes.size(); ++j) {
      require(analytes[i] != analytes[j], ErrorKind::kConfig, "duplicate analyte " + analytes[i]);
    }
  }
}

AffinityModel random_affinity_model(const std::vector<std::string>& analytes, int n_sensors,
                                    std::uint64_t seed) {
  require(n_sensors >= 1, ErrorKind::kConfig, "need at least one sensor");
  Rng rng(seed);
  std::normal_distribution<double> gain(0.0, 1.0);
  std::uniform_real_distribution<double> log_tau(std::log(0.4), std::log(2.5));
  const auto n = static_cast<Eigen::Index>(analytes.size());
  AffinityModel model;
  model.analytes = analytes;
  model.affinities.resize(n_sensors, n);
  for (Eigen::Index s = 0; s < n_sensors; ++s) {
    for (Eigen::Index a = 0; a < n; ++a) model.affinities(s, a) = gain(rng);
  }
  model.baselines = Vector::Constant(n_sensors, 1.0);
  model.tau_rise_s.resize(n);
  model.tau_decay_s.resize(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    model.tau_rise_s[a] = std::exp(log_tau(rng));
    model.tau_decay_s[a] = 1.5 * std::exp(log_tau(rng));
  }
  model.seed = seed;
  model.validate();
  return model;
}

double adsorption_fraction(const AffinityModel& model, int analyte_index,
                           const ExposureSchedule& schedule, double t) {
  const double onset = schedule.onset_s();
  if (t < onset) return 0.0;
  const double rise_tau = model.tau_rise_s[analyte_index];
  const double end = schedule.exposure_end_s();
  if (t < end) return 1.0 - std::exp(-(t - onset) / rise_tau);
  const double at_end = 1.0 - std::exp(-schedule.exposure_s / rise_tau);
  return at_end * std::exp(-(t - end) / model.tau_decay_s[analyte_index]);
}

SensorTrace simulate_trial(const AnalyteMix& mix, const AffinityModel& model,
                           const ExposureSchedule& schedule, double sample_rate_hz,
                           std::uint64_t rng_seed) {
  mix.validate();
  schedule.validate();
  model.validate();
  require(sample_rate_hz > 0.0 && std::isfinite(sample_rate_hz), ErrorKind::kConfig,
          "sample rate must be positive");

  std::vector<int> index;
  std::vector<double> conc;
  for (const auto& c : mix.components) {
    index.push_back(model.index_of(c.analyte));
    conc.push_back(c.concentration);
  }

  const auto n_samples = static_cast<Eigen::Index>(std::llround(schedule.total_s() * sample_rate_hz));
  require(n_samples >= 1, ErrorKind::kSchedule, "schedule shorter than one sample");
  require(schedule.onset_s() * sample_rate_hz < static_cast<double>(n_samples), ErrorKind::kSchedule,
          "onset falls outside the trace");
  const int n_sensors = model.n_sensors();

  SensorTrace trace;
  trace.sample_rate_hz = sample_rate_hz;
  trace.t0_s = 0.0;
  trace.channel_names = default_channel_names(n_sensors);
  trace.values.resize(n_samples, n_sensors);

  Rng rng(rng_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> rise(index.size());

  for (Eigen::Index i = 0; i < n_samples; ++i) {
    const double t = trace.time_at(i);
    for (std::size_t k = 0; k < index.size(); ++k) {
      rise[k] = adsorption_fraction(model, index[k], schedule, t);
    }
    for (int s = 0; s < n_sensors; ++s) {
      double adsorbed = 0.0;
      double product = 1.0;
      for (std::size_t k = 0; k < index.size(); ++k) {
        const double term = conc[k] * model.affinities(s, index[k]) * rise[k];
        adsorbed += term;
        product *= term;
      }
      if (model.soft_clip) {
        adsorbed = model.soft_clip_scale * std::tanh(adsorbed / model.soft_clip_scale);
      }
      const double interference = index.size() == 2 ? model.interference_gamma * product : 0.0;
      double value = model.baselines[s] + adsorbed + interference;
      if (model.noise_sigma > 0.0) value += model.noise_sigma * noise(rng);
      trace.values(i, s) = value;
    }
  }
  return trace;
}

SensorTrace zscore(const SensorTrace& trace, Diagnostics* diagnostics) {
  require(trace.samples() >= 2, ErrorKind::kDimension, "z-scoring needs at least two samples");
  SensorTrace out = trace;
  const double n = static_cast<double>(trace.samples());
  for (Eigen::Index s = 0; s < trace.channels(); ++s) {
    const auto column = trace.values.col(s);
    const double mean = column.sum() / n;
    const double var = (column.array() - mean).square().sum() / n;
    const double sd = std::sqrt(var);
    if (sd < 1e-12) {
      out.values.col(s).setZero();
      if (diagnostics) {
        diagnostics->warn("channel " + trace.channel_names[static_cast<std::size_t>(s)] +
                          " is constant; z-scored to zeros");
      }
      continue;
    }
    out.values.col(s) = (column.array() - mean) / sd;
  }
  return out;
}

Eigen::Index window_samples(double length_s, double sample_rate_hz) {
  return static_cast<Eigen::Index>(std::llround(length_s * sample_rate_hz));
}

SensorTrace crop_window(const SensorTrace& trace, double onset_s, double pre_onset_s,
                        double length_s) {
  require(pre_onset_s >= 0.0 && length_s > pre_onset_s, ErrorKind::kRange,
          "window must satisfy length > pre_onset >= 0");
  const double start_s = onset_s - pre_onset_s;
  const double start_pos = (start_s - trace.t0_s) * trace.sample_rate_hz;
  const auto start = static_cast<Eigen::Index>(std::llround(start_pos));
  const Eigen::Index count = window_samples(length_s, trace.sample_rate_hz);
  if (start_pos < -1e-9 || start < 0 || count < 1 || start + count > trace.samples()) {
    raise(ErrorKind::kRange, "window [" + csv::format_double(start_s) + ", " +
                                 csv::format_double(start_s + length_s) +
                                 ") s lies outside the trace of " +
                                 csv::format_double(trace.duration_s()) + " s");
  }
  SensorTrace out;
  out.sample_rate_hz = trace.sample_rate_hz;
  out.t0_s = trace.time_at(start);
  out.channel_names = trace.channel_names;
  out.values = trace.values.middleRows(start, count);
  return out;
}

namespace {

FeatureVector flatten(const SensorTrace& window, double length_s) {
  FeatureVector fv;
  fv.values = Eigen::Map<const Vector>(window.values.data(), window.values.size());
  fv.window_length_s = length_s;
  return fv;
}

}  // namespace

FeatureVector extract_window(const SensorTrace& trace, double onset_s, double pre_onset_s,
                             double length_s) {
  return flatten(crop_window(trace, onset_s, pre_onset_s, length_s), length_s);
}

FeatureVector featurize(const SensorTrace& trace, double onset_s, double pre_onset_s,
                        double length_s, Diagnostics* diagnostics) {
  return flatten(zscore(crop_window(trace, onset_s, pre_onset_s, length_s), diagnostics),
                 length_s);
}

SensorTrace superpose(const SensorTrace& a, const SensorTrace& b) {
  require(a.values.rows() == b.values.rows() && a.values.cols() == b.values.cols(),
          ErrorKind::kDimension, "superpose needs traces of identical shape");
  require(a.sample_rate_hz == b.sample_rate_hz, ErrorKind::kDimension,
          "superpose needs identical sample rates");
  SensorTrace out = a;
  const Eigen::RowVectorXd baseline_b = b.values.row(0);
  out.values = a.values + b.values;
  out.values.rowwise() -= baseline_b;
  return out;
}

}  // namespace chemvise
