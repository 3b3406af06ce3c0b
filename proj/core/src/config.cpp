#include "chemvise/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include "chemvise/csv.hpp"
#include "chemvise/error.hpp"

namespace chemvise {

using nlohmann::json;

namespace {

// Reference coatings for the default four-analyte, eight-sensor array. A is
// chemically distinct; B, C and D belong to one family and share a response
// profile up to small per-coating differences.
Matrix reference_affinities() {
  Matrix m(8, 4);
  // clang-format off
  // A stands apart; B, C and D are one family with near-identical coatings.
  m <<  4.00,  1.1748, 1.2042, 1.1875,
        3.60,  1.6133, 1.6161, 1.5444,
        1.20,  3.8442, 4.1080, 3.9230,
        0.80,  3.1320, 3.3269, 3.1924,
        2.40,  2.4646, 2.3955, 2.4267,
        3.20,  0.7776, 0.8086, 0.8236,
        1.60,  3.6067, 3.6695, 3.6494,
        2.00,  1.9302, 2.0413, 2.0146;
  // clang-format on
  return m;
}

bool is_reference_layout(const SimulatorConfig& sim) {
  return sim.n_sensors == 8 && sim.analytes == std::vector<std::string>{"A", "B", "C", "D"};
}

class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    require(object_.is_object(), ErrorKind::kConfig, path_ + " must be a JSON object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    used_.insert(key);
    auto it = object_.find(key);
    if (it == object_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      raise(ErrorKind::kConfig, path_ + "." + key + ": " + e.what());
    }
  }

  template <typename T>
  void read(const char* key, std::optional<T>& out) {
    used_.insert(key);
    auto it = object_.find(key);
    if (it == object_.end() || it->is_null()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      raise(ErrorKind::kConfig, path_ + "." + key + ": " + e.what());
    }
  }

  const json* sub(const char* key) {
    used_.insert(key);
    auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = object_.begin(); it != object_.end(); ++it) {
      if (!used_.count(it.key())) raise(ErrorKind::kConfig, "unknown key " + path_ + "." + it.key());
    }
  }

 private:
  const json& object_;
  std::string path_;
  std::set<std::string> used_;
};

Vector to_vector(const std::vector<double>& values) {
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::vector<double> from_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Matrix to_matrix(const std::vector<std::vector<double>>& rows, const std::string& what) {
  require(!rows.empty(), ErrorKind::kConfig, what + " must not be empty");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == rows[0].size(), ErrorKind::kConfig, what + " has ragged rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

std::vector<std::vector<double>> from_matrix(const Matrix& m) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows[static_cast<std::size_t>(i)].push_back(m(i, j));
  }
  return rows;
}

}  // namespace

AffinityModel SimulatorConfig::affinity_model() const {
  AffinityModel model = random_affinity_model(analytes, n_sensors, model_seed);
  if (is_reference_layout(*this)) {
    model.affinities = reference_affinities();
    model.baselines = Vector::Constant(8, 1.0);
    model.tau_rise_s = (Vector(4) << 0.45, 1.10, 1.15, 1.05).finished();
    model.tau_decay_s = (Vector(4) << 1.20, 2.00, 2.10, 1.90).finished();
  }
  if (affinities) model.affinities = *affinities;
  if (baselines) model.baselines = *baselines;
  if (tau_rise_s) model.tau_rise_s = *tau_rise_s;
  if (tau_decay_s) model.tau_decay_s = *tau_decay_s;
  model.interference_gamma = interference_gamma;
  model.noise_sigma = noise_sigma;
  model.soft_clip = soft_clip;
  model.soft_clip_scale = soft_clip_scale;
  model.seed = model_seed;
  require(model.affinities.rows() == n_sensors, ErrorKind::kConfig,
          "affinity matrix rows must equal n_sensors");
  model.validate();
  return model;
}

void SimulatorConfig::validate() const {
  require(analytes.size() >= 2, ErrorKind::kConfig, "simulator needs at least two analytes");
  require(std::find(analytes.begin(), analytes.end(), target_analyte) != analytes.end(),
          ErrorKind::kConfig, "target analyte '" + target_analyte + "' is not simulated");
  require(!concentrations.empty(), ErrorKind::kConfig, "concentration list is empty");
  for (double c : concentrations) {
    require(c > 0.0 && c <= 1.0, ErrorKind::kConfig, "concentrations must lie in (0, 1]");
  }
  require(replicates >= 1, ErrorKind::kConfig, "replicates must be positive");
  require(n_sensors >= 1, ErrorKind::kConfig, "n_sensors must be positive");
  require(sample_rate_hz > 0.0, ErrorKind::kConfig, "sample rate must be positive");
  require(pre_onset_s >= 0.0, ErrorKind::kConfig, "pre_onset_s must be non-negative");
  require(holdout_doubles >= 0, ErrorKind::kConfig, "holdout_doubles must be non-negative");
  require(val_fraction >= 0.0 && val_fraction < 1.0, ErrorKind::kConfig,
          "val_fraction must lie in [0, 1)");
  schedule.validate();
  affinity_model();
}

void GridSpec::validate() const {
  require(budget >= 1, ErrorKind::kConfig, "grid search budget must be at least 1");
  require(n_folds >= 2, ErrorKind::kConfig, "grid search needs at least two folds");
  require(!widths.empty() && !learning_rates.empty() && !epochs.empty() && !batch_sizes.empty() &&
              !class_weights.empty(),
          ErrorKind::kConfig, "grid lists must not be empty");
  require(c_min > 0.0 && c_min <= c_max, ErrorKind::kConfig, "C range must satisfy 0 < min <= max");
  for (int w : widths) require(w >= 1, ErrorKind::kConfig, "grid widths must be positive");
  for (double lr : learning_rates) require(lr > 0.0, ErrorKind::kConfig, "grid learning rates must be positive");
  for (int e : epochs) require(e >= 0, ErrorKind::kConfig, "grid epochs must be non-negative");
  for (int b : batch_sizes) require(b >= 1, ErrorKind::kConfig, "grid batch sizes must be positive");
  for (double cw : class_weights) require(cw >= 1.0, ErrorKind::kConfig, "class weights must be >= 1");
}

std::vector<double> default_window_lengths() {
  std::vector<double> lengths;
  for (int i = 0; i < 7; ++i) lengths.push_back(2.4 + (4.0 - 2.4) * i / 6.0);
  return lengths;
}

void Config::validate() const {
  simulator.validate();
  require(targets.dimension >= 1, ErrorKind::kConfig, "target dimension must be positive");
  require(targets.cluster_spread > 0.0, ErrorKind::kConfig, "cluster spread must be positive");
  augment.policy.validate();
  embedder.validate();
  require(classify.knn_k >= 1 && classify.knn_k % 2 == 1, ErrorKind::kConfig,
          "knn_k must be a positive odd integer");
  require(classify.svc_iterations >= 1, ErrorKind::kConfig, "svc_iterations must be positive");
  require(classify.c_penalty > 0.0, ErrorKind::kConfig, "c_penalty must be positive");
  require(classify.class_weight_ratio >= 1.0, ErrorKind::kConfig, "class_weight must be >= 1");
  require(classify.head_mix_ratio >= 0.0, ErrorKind::kConfig, "head_mix_ratio must be >= 0");
  harness.grid.validate();
  require(harness.n_repeats >= 1, ErrorKind::kConfig, "n_repeats must be positive");
  require(harness.threads >= 1, ErrorKind::kConfig, "threads must be positive");
  const double trace_end = simulator.schedule.total_s();
  std::vector<double> windows = harness.window_lengths_s;
  windows.push_back(harness.representation_window_s);
  for (double w : windows) {
    require(w > simulator.pre_onset_s, ErrorKind::kRange, "window length must exceed pre_onset_s");
    require(simulator.schedule.onset_s() - simulator.pre_onset_s + w <= trace_end + 1e-9,
            ErrorKind::kRange, "window of " + csv::format_double(w) + " s exceeds the trace");
  }
}

Config config_from_json(const json& doc) {
  Config config;
  ObjectReader root(doc, "config");

  if (const json* node = root.sub("simulator")) {
    auto& sim = config.simulator;
    ObjectReader r(*node, "simulator");
    r.read("analytes", sim.analytes);
    r.read("target_analyte", sim.target_analyte);
    r.read("concentrations", sim.concentrations);
    r.read("replicates", sim.replicates);
    r.read("n_sensors", sim.n_sensors);
    r.read("sample_rate_hz", sim.sample_rate_hz);
    r.read("baseline_s", sim.schedule.baseline_s);
    r.read("exposure_s", sim.schedule.exposure_s);
    r.read("desorption_s", sim.schedule.desorption_s);
    r.read("pre_onset_s", sim.pre_onset_s);
    r.read("interference_gamma", sim.interference_gamma);
    r.read("noise_sigma", sim.noise_sigma);
    r.read("soft_clip", sim.soft_clip);
    r.read("soft_clip_scale", sim.soft_clip_scale);
    r.read("holdout_doubles", sim.holdout_doubles);
    r.read("val_fraction", sim.val_fraction);
    r.read("model_seed", sim.model_seed);
    std::optional<std::vector<std::vector<double>>> aff;
    std::optional<std::vector<double>> base, rise, decay;
    r.read("affinities", aff);
    r.read("baselines", base);
    r.read("tau_rise_s", rise);
    r.read("tau_decay_s", decay);
    if (aff) sim.affinities = to_matrix(*aff, "simulator.affinities");
    if (base) sim.baselines = to_vector(*base);
    if (rise) sim.tau_rise_s = to_vector(*rise);
    if (decay) sim.tau_decay_s = to_vector(*decay);
    r.finish();
  }

  if (const json* node = root.sub("targets")) {
    auto& t = config.targets;
    ObjectReader r(*node, "targets");
    r.read("dimension", t.dimension);
    r.read("embeddings_path", t.embeddings_path);
    r.read("n_clusters", t.n_clusters);
    r.read("cluster_spread", t.cluster_spread);
    r.read("cluster_of", t.cluster_of);
    r.read("seed", t.seed);
    r.finish();
  }

  if (const json* node = root.sub("augment")) {
    auto& a = config.augment;
    ObjectReader r(*node, "augment");
    r.read("lambda_min", a.policy.lambda_min);
    r.read("lambda_max", a.policy.lambda_max);
    r.read("mix_probability", a.policy.mix_probability);
    r.read("seed", a.policy.seed);
    r.read("augment_baselines", a.augment_baselines);
    r.finish();
  }

  if (const json* node = root.sub("embedder")) {
    auto& e = config.embedder;
    ObjectReader r(*node, "embedder");
    r.read("width", e.width);
    r.read("learning_rate", e.learning_rate);
    r.read("epochs", e.epochs);
    r.read("batch_size", e.batch_size);
    r.read("n_hidden_layers", e.n_hidden_layers);
    r.read("seed", e.seed);
    std::string optimizer(to_string(e.optimizer));
    r.read("optimizer", optimizer);
    e.optimizer = parse_optimizer(optimizer);
    r.finish();
  }

  if (const json* node = root.sub("classify")) {
    auto& c = config.classify;
    ObjectReader r(*node, "classify");
    r.read("knn_k", c.knn_k);
    r.read("svc_iterations", c.svc_iterations);
    r.read("c_penalty", c.c_penalty);
    r.read("class_weight", c.class_weight_ratio);
    r.read("head_mix_ratio", c.head_mix_ratio);
    r.finish();
  }

  if (const json* node = root.sub("harness")) {
    auto& h = config.harness;
    ObjectReader r(*node, "harness");
    r.read("n_repeats", h.n_repeats);
    r.read("master_seed", h.master_seed);
    r.read("window_lengths_s", h.window_lengths_s);
    r.read("representation_window_s", h.representation_window_s);
    r.read("search", h.search);
    r.read("threads", h.threads);
    if (const json* grid_node = r.sub("grid")) {
      auto& g = h.grid;
      ObjectReader gr(*grid_node, "harness.grid");
      gr.read("widths", g.widths);
      gr.read("learning_rates", g.learning_rates);
      gr.read("epochs", g.epochs);
      gr.read("batch_sizes", g.batch_sizes);
      gr.read("c_min", g.c_min);
      gr.read("c_max", g.c_max);
      gr.read("class_weights", g.class_weights);
      gr.read("budget", g.budget);
      gr.read("n_folds", g.n_folds);
      gr.finish();
    }
    r.finish();
  }
  root.finish();
  config.validate();
  return config;
}

json config_to_json(const Config& config) {
  const auto& sim = config.simulator;
  const AffinityModel model = sim.affinity_model();
  json doc;
  doc["simulator"] = {
      {"analytes", sim.analytes},
      {"target_analyte", sim.target_analyte},
      {"concentrations", sim.concentrations},
      {"replicates", sim.replicates},
      {"n_sensors", sim.n_sensors},
      {"sample_rate_hz", sim.sample_rate_hz},
      {"baseline_s", sim.schedule.baseline_s},
      {"exposure_s", sim.schedule.exposure_s},
      {"desorption_s", sim.schedule.desorption_s},
      {"pre_onset_s", sim.pre_onset_s},
      {"interference_gamma", sim.interference_gamma},
      {"noise_sigma", sim.noise_sigma},
      {"soft_clip", sim.soft_clip},
      {"soft_clip_scale", sim.soft_clip_scale},
      {"holdout_doubles", sim.holdout_doubles},
      {"val_fraction", sim.val_fraction},
      {"model_seed", sim.model_seed},
      {"affinities", from_matrix(model.affinities)},
      {"baselines", from_vector(model.baselines)},
      {"tau_rise_s", from_vector(model.tau_rise_s)},
      {"tau_decay_s", from_vector(model.tau_decay_s)},
  };
  const auto& t = config.targets;
  doc["targets"] = {{"dimension", t.dimension},
                    {"embeddings_path", t.embeddings_path},
                    {"n_clusters", t.n_clusters},
                    {"cluster_spread", t.cluster_spread},
                    {"seed", t.seed}};
  if (t.cluster_of) doc["targets"]["cluster_of"] = *t.cluster_of;
  const auto& a = config.augment;
  doc["augment"] = {{"lambda_min", a.policy.lambda_min},
                    {"lambda_max", a.policy.lambda_max},
                    {"mix_probability", a.policy.mix_probability},
                    {"seed", a.policy.seed},
                    {"augment_baselines", a.augment_baselines}};
  const auto& e = config.embedder;
  doc["embedder"] = {{"width", e.width},
                     {"learning_rate", e.learning_rate},
                     {"epochs", e.epochs},
                     {"batch_size", e.batch_size},
                     {"n_hidden_layers", e.n_hidden_layers},
                     {"seed", e.seed},
                     {"optimizer", std::string(to_string(e.optimizer))}};
  const auto& c = config.classify;
  doc["classify"] = {{"knn_k", c.knn_k},
                     {"svc_iterations", c.svc_iterations},
                     {"c_penalty", c.c_penalty},
                     {"class_weight", c.class_weight_ratio},
                     {"head_mix_ratio", c.head_mix_ratio}};
  const auto& h = config.harness;
  doc["harness"] = {{"n_repeats", h.n_repeats},
                    {"master_seed", h.master_seed},
                    {"window_lengths_s", h.window_lengths_s},
                    {"representation_window_s", h.representation_window_s},
                    {"search", h.search},
                    {"threads", h.threads},
                    {"grid",
                     {{"widths", h.grid.widths},
                      {"learning_rates", h.grid.learning_rates},
                      {"epochs", h.grid.epochs},
                      {"batch_sizes", h.grid.batch_sizes},
                      {"c_min", h.grid.c_min},
                      {"c_max", h.grid.c_max},
                      {"class_weights", h.grid.class_weights},
                      {"budget", h.grid.budget},
                      {"n_folds", h.grid.n_folds}}}};
  return doc;
}

Config load_config(const std::filesystem::path& path) {
  const std::string text = csv::read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    raise(ErrorKind::kConfig, path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

void apply_environment(Config& config) {
  if (const char* seed = std::getenv("CHEMVISE_SEED"); seed && *seed) {
    config.harness.master_seed = static_cast<std::uint64_t>(
        csv::parse_int(seed, 0, "CHEMVISE_SEED"));
  }
}

}  // namespace chemvise
