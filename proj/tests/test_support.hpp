#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "chemvise/config.hpp"

namespace chemvise::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("chemvise-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// A configuration small enough for a full protocol run in a few seconds.
inline Config tiny_config() {
  Config c;
  c.simulator.concentrations = {0.15, 0.25};
  c.simulator.replicates = 2;
  c.simulator.holdout_doubles = 12;
  c.targets.dimension = 16;
  c.embedder.width = 8;
  c.embedder.epochs = 5;
  c.embedder.n_hidden_layers = 1;
  c.harness.n_repeats = 2;
  c.harness.window_lengths_s = {2.4, 4.0};
  c.harness.grid.widths = {8};
  c.harness.grid.epochs = {3, 5};
  c.harness.grid.batch_sizes = {4};
  c.harness.grid.budget = 2;
  c.harness.grid.n_folds = 2;
  c.classify.svc_iterations = 2000;
  return c;
}

}  // namespace chemvise::testing
