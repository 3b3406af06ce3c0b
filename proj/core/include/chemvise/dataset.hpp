#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chemvise/config.hpp"
#include "chemvise/signals.hpp"

namespace chemvise {

enum class Split { kTrain, kVal, kTest };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct Trial {
  std::string id;
  AnalyteMix mix;
  double onset_s = 0.0;
  double duration_s = 0.0;
  Split split = Split::kTrain;
  SensorTrace trace;
};

// Singles (analytes x concentrations x replicates, tagged train or val) and
// `holdout_doubles` pairs cycling over every analyte pair, tagged test.
std::vector<Trial> simulate_trials(const SimulatorConfig& config, std::uint64_t seed);

// trials.csv plus signals/<trial_id>.csv, numbers in round-trip form.
void write_dataset(const std::filesystem::path& dir, const std::vector<Trial>& trials);

// Train/val trials are readable at once. Test trials stay sealed until
// freeze() marks hyperparameters as fixed; their content is fingerprinted
// when the dataset is opened and re-checked when first read, so any change in
// between is a hard error.
class Dataset {
 public:
  static Dataset open(const std::filesystem::path& dir);
  static Dataset from_trials(std::vector<Trial> trials);

  const std::vector<Trial>& training() const { return train_; }
  const std::vector<Trial>& validation() const { return val_; }
  std::size_t holdout_size() const { return holdout_ids_.size(); }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  // Raises kHygiene before freeze() or when sealed content changed.
  const std::vector<Trial>& holdout();

  // Every trial of the given split; test requires freeze().
  std::vector<Trial> split(Split which);

 private:
  Dataset() = default;

  std::optional<std::filesystem::path> dir_;
  std::vector<Trial> train_;
  std::vector<Trial> val_;
  std::vector<std::string> holdout_ids_;
  std::map<std::string, std::uint64_t> fingerprints_;
  std::vector<Trial> sealed_;  // in-memory datasets only
  std::optional<std::vector<Trial>> holdout_;
  bool frozen_ = false;
};

SensorTrace read_signal_csv(const std::filesystem::path& path);
std::string format_signal_csv(const SensorTrace& trace);

}  // namespace chemvise
