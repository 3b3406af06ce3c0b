#include "chemvise/dataset.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "chemvise/csv.hpp"
#include "chemvise/error.hpp"

namespace chemvise {

namespace fs = std::filesystem;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "unknown";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  raise(ErrorKind::kParse, "unknown split tag '" + std::string(text) + "'");
}

namespace {

std::string three_digits(std::size_t i) {
  std::string s = std::to_string(i);
  return std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

std::uint64_t fingerprint(std::string_view bytes) { return std::hash<std::string_view>{}(bytes); }

std::uint64_t fingerprint(const Trial& trial) {
  const auto& v = trial.trace.values;
  std::string bytes(reinterpret_cast<const char*>(v.data()), sizeof(double) * static_cast<std::size_t>(v.size()));
  bytes += trial.mix.describe();
  return fingerprint(bytes);
}

}  // namespace

std::vector<Trial> simulate_trials(const SimulatorConfig& config, std::uint64_t seed) {
  config.validate();
  const AffinityModel model = config.affinity_model();
  std::vector<Trial> trials;

  const std::size_t n_singles =
      config.analytes.size() * config.concentrations.size() * static_cast<std::size_t>(config.replicates);
  const auto n_val = static_cast<std::size_t>(std::floor(config.val_fraction * static_cast<double>(n_singles)));
  // Every k-th single goes to val so all analytes stay represented in train.
  const std::size_t val_stride = n_val > 0 ? n_singles / n_val : 0;

  std::size_t index = 0;
  for (const auto& analyte : config.analytes) {
    for (double conc : config.concentrations) {
      for (int rep = 0; rep < config.replicates; ++rep, ++index) {
        Trial t;
        t.id = "S" + three_digits(index);
        t.mix = AnalyteMix::single(analyte, conc);
        t.split = (val_stride > 0 && index % val_stride == val_stride - 1 &&
                   index / val_stride < n_val)
                      ? Split::kVal
                      : Split::kTrain;
        trials.push_back(std::move(t));
      }
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < config.analytes.size(); ++i) {
    for (std::size_t j = i + 1; j < config.analytes.size(); ++j) pairs.emplace_back(i, j);
  }
  Rng conc_rng(derive_seed(seed, "holdout-concentrations"));
  std::uniform_int_distribution<std::size_t> pick(0, config.concentrations.size() - 1);
  for (int d = 0; d < config.holdout_doubles; ++d) {
    const auto [i, j] = pairs[static_cast<std::size_t>(d) % pairs.size()];
    Trial t;
    t.id = "D" + three_digits(static_cast<std::size_t>(d));
    const double ci = config.concentrations[pick(conc_rng)];
    const double cj = config.concentrations[pick(conc_rng)];
    t.mix = AnalyteMix::pair(config.analytes[i], ci, config.analytes[j], cj);
    t.split = Split::kTest;
    trials.push_back(std::move(t));
  }

  for (auto& t : trials) {
    t.trace = simulate_trial(t.mix, model, config.schedule, config.sample_rate_hz,
                             derive_seed(seed, t.id));
    t.onset_s = config.schedule.onset_s();
    t.duration_s = t.trace.duration_s();
  }
  return trials;
}

std::string format_signal_csv(const SensorTrace& trace) {
  std::ostringstream out;
  out << "time_s";
  for (const auto& name : trace.channel_names) out << ',' << name;
  out << '\n';
  for (Eigen::Index i = 0; i < trace.samples(); ++i) {
    out << csv::format_double(trace.time_at(i));
    for (Eigen::Index s = 0; s < trace.channels(); ++s) out << ',' << csv::format_double(trace.values(i, s));
    out << '\n';
  }
  return out.str();
}

namespace {

SensorTrace parse_signal_csv(const csv::Table& table, const fs::path& path) {
  require(table.header.size() >= 2 && table.header[0] == "time_s", ErrorKind::kParse,
          path.string() + " line 1: header must be time_s followed by channel names");
  require(table.rows.size() >= 1, ErrorKind::kParse, path.string() + ": no samples");
  SensorTrace trace;
  trace.channel_names.assign(table.header.begin() + 1, table.header.end());
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto s = static_cast<Eigen::Index>(trace.channel_names.size());
  trace.values.resize(n, s);
  std::vector<double> times(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    const std::size_t line = table.line_numbers[static_cast<std::size_t>(i)];
    times[static_cast<std::size_t>(i)] = csv::parse_double(row[0], line, "time_s");
    for (Eigen::Index c = 0; c < s; ++c) {
      trace.values(i, c) = csv::parse_double(row[static_cast<std::size_t>(c) + 1], line,
                                             trace.channel_names[static_cast<std::size_t>(c)]);
    }
  }
  trace.t0_s = times[0];
  if (n >= 2) {
    const double dt = (times.back() - times.front()) / static_cast<double>(n - 1);
    require(dt > 0.0, ErrorKind::kParse, path.string() + ": time_s must increase");
    trace.sample_rate_hz = 1.0 / dt;
    // Snap to the nearest millihertz so 1/dt round-off does not leak into window maths.
    trace.sample_rate_hz = std::round(trace.sample_rate_hz * 1000.0) / 1000.0;
  }
  trace.validate();
  return trace;
}

// Concatenated cells of every row tagged test.
std::string test_rows(const csv::Table& table) {
  const std::size_t c_split = table.column("split");
  std::string joined;
  for (const auto& row : table.rows) {
    if (row[c_split] != "test") continue;
    for (const auto& cell : row) joined += cell + ',';
    joined += '\n';
  }
  return joined;
}

}  // namespace

SensorTrace read_signal_csv(const fs::path& path) { return parse_signal_csv(csv::read_table(path), path); }

void write_dataset(const fs::path& dir, const std::vector<Trial>& trials) {
  std::error_code ec;
  fs::create_directories(dir / "signals", ec);
  if (ec) raise(ErrorKind::kIo, "cannot create " + (dir / "signals").string() + ": " + ec.message());
  std::ostringstream index;
  index << "trial_id,analyte_1,conc_1,analyte_2,conc_2,onset_s,duration_s,split\n";
  for (const auto& t : trials) {
    t.mix.validate();
    const auto& c = t.mix.components;
    index << t.id << ',' << c[0].analyte << ',' << csv::format_double(c[0].concentration) << ',';
    if (c.size() == 2) index << c[1].analyte << ',' << csv::format_double(c[1].concentration);
    else index << ',';
    index << ',' << csv::format_double(t.onset_s) << ',' << csv::format_double(t.duration_s) << ','
          << to_string(t.split) << '\n';
    csv::write_file(dir / "signals" / (t.id + ".csv"), format_signal_csv(t.trace));
  }
  csv::write_file(dir / "trials.csv", index.str());
}

Dataset Dataset::open(const fs::path& dir) {
  const csv::Table table = csv::read_table(dir / "trials.csv");
  const std::size_t c_id = table.column("trial_id");
  const std::size_t c_a1 = table.column("analyte_1");
  const std::size_t c_c1 = table.column("conc_1");
  const std::size_t c_a2 = table.column("analyte_2");
  const std::size_t c_c2 = table.column("conc_2");
  const std::size_t c_onset = table.column("onset_s");
  const std::size_t c_dur = table.column("duration_s");
  const std::size_t c_split = table.column("split");

  Dataset ds;
  ds.dir_ = dir;
  ds.fingerprints_["trials.csv"] = fingerprint(test_rows(table));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    Trial t;
    t.id = row[c_id];
    require(!t.id.empty(), ErrorKind::kParse, "trials.csv line " + std::to_string(line) + ": empty trial_id");
    t.mix.components.push_back({row[c_a1], csv::parse_double(row[c_c1], line, "conc_1")});
    if (!row[c_a2].empty()) {
      t.mix.components.push_back({row[c_a2], csv::parse_double(row[c_c2], line, "conc_2")});
    }
    try {
      t.mix.validate();
    } catch (const Error& e) {
      raise(ErrorKind::kParse, "trials.csv line " + std::to_string(line) + ": " + e.what());
    }
    t.onset_s = csv::parse_double(row[c_onset], line, "onset_s");
    t.duration_s = csv::parse_double(row[c_dur], line, "duration_s");
    t.split = parse_split(row[c_split]);
    const fs::path signal = dir / "signals" / (t.id + ".csv");
    if (t.split == Split::kTest) {
      ds.holdout_ids_.push_back(t.id);
      ds.fingerprints_[t.id] = fingerprint(csv::read_file(signal));
      continue;
    }
    require(t.mix.is_single(), ErrorKind::kHygiene,
            "trial " + t.id + " mixes two analytes but is tagged " + std::string(to_string(t.split)) +
                "; learners train on single-analyte exposures only");
    t.trace = read_signal_csv(signal);
    (t.split == Split::kTrain ? ds.train_ : ds.val_).push_back(std::move(t));
  }
  return ds;
}

Dataset Dataset::from_trials(std::vector<Trial> trials) {
  Dataset ds;
  for (auto& t : trials) {
    t.mix.validate();
    if (t.split == Split::kTest) {
      ds.holdout_ids_.push_back(t.id);
      ds.fingerprints_[t.id] = fingerprint(t);
      ds.sealed_.push_back(std::move(t));
      continue;
    }
    require(t.mix.is_single(), ErrorKind::kHygiene,
            "trial " + t.id + " mixes two analytes but is tagged " + std::string(to_string(t.split)));
    (t.split == Split::kTrain ? ds.train_ : ds.val_).push_back(std::move(t));
  }
  return ds;
}

const std::vector<Trial>& Dataset::holdout() {
  require(frozen_, ErrorKind::kHygiene,
          "holdout trials requested before hyperparameters were frozen");
  if (holdout_) return *holdout_;

  std::vector<Trial> loaded;
  if (!dir_) {
    for (const auto& t : sealed_) {
      require(fingerprint(t) == fingerprints_.at(t.id), ErrorKind::kHygiene,
              "holdout trial " + t.id + " changed while sealed");
    }
    loaded = sealed_;
  } else {
    const csv::Table table = csv::read_table(*dir_ / "trials.csv");
    const std::size_t c_id = table.column("trial_id");
    const std::size_t c_split = table.column("split");
    std::vector<std::string> still_test;
    for (const auto& row : table.rows) {
      if (row[c_split] == "test") still_test.push_back(row[c_id]);
    }
    require(still_test == holdout_ids_, ErrorKind::kHygiene,
            "split tags in trials.csv changed while the holdout was sealed");
    require(fingerprint(test_rows(table)) == fingerprints_.at("trials.csv"), ErrorKind::kHygiene,
            "holdout rows of trials.csv changed while sealed");
    for (const auto& id : holdout_ids_) {
      const auto bytes = csv::read_file(*dir_ / "signals" / (id + ".csv"));
      require(fingerprint(bytes) == fingerprints_.at(id), ErrorKind::kHygiene,
              "holdout file signals/" + id + ".csv changed while sealed");
    }
    // Parse only after every seal checks out.
    const csv::Table& index = table;
    for (std::size_t r = 0; r < index.rows.size(); ++r) {
      const auto& row = index.rows[r];
      if (row[c_split] != "test") continue;
      const std::size_t line = index.line_numbers[r];
      Trial t;
      t.id = row[c_id];
      t.mix.components.push_back({row[index.column("analyte_1")],
                                  csv::parse_double(row[index.column("conc_1")], line, "conc_1")});
      if (!row[index.column("analyte_2")].empty()) {
        t.mix.components.push_back({row[index.column("analyte_2")],
                                    csv::parse_double(row[index.column("conc_2")], line, "conc_2")});
      }
      t.onset_s = csv::parse_double(row[index.column("onset_s")], line, "onset_s");
      t.duration_s = csv::parse_double(row[index.column("duration_s")], line, "duration_s");
      t.split = Split::kTest;
      t.trace = read_signal_csv(*dir_ / "signals" / (t.id + ".csv"));
      loaded.push_back(std::move(t));
    }
  }
  holdout_ = std::move(loaded);
  return *holdout_;
}

std::vector<Trial> Dataset::split(Split which) {
  switch (which) {
    case Split::kTrain: return train_;
    case Split::kVal: return val_;
    case Split::kTest: return holdout();
  }
  return {};
}

}  // namespace chemvise
