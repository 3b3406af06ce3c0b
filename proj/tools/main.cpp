#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "chemvise/config.hpp"
#include "chemvise/csv.hpp"
#include "chemvise/dataset.hpp"
#include "chemvise/error.hpp"
#include "chemvise/harness.hpp"
#include "chemvise/pipeline.hpp"
#include "chemvise/report.hpp"

namespace fs = std::filesystem;
using namespace chemvise;

namespace {

Config config_or_default(const std::string& path) {
  Config config = path.empty() ? Config{} : load_config(path);
  apply_environment(config);
  config.validate();
  return config;
}

int cmd_simulate(const std::string& config_path, const fs::path& out) {
  const Config config = config_or_default(config_path);
  const auto trials = simulate_trials(config.simulator, derive_seed(config.harness.master_seed, "data"));
  write_dataset(out, trials);
  save_semantic(build_target_space(config, TargetKind::kSemantic), out / "embeddings.csv");
  std::cout << "wrote " << trials.size() << " trials to " << out.string() << '\n';
  return 0;
}

int cmd_train(const std::string& config_path, const fs::path& dataset_dir, const std::string& kind_text,
              const std::string& embeddings, double window_s, const std::string& head_text,
              const fs::path& out) {
  Config config = config_or_default(config_path);
  if (!embeddings.empty()) config.targets.embeddings_path = embeddings;
  const TargetKind kind = parse_target_kind(kind_text);
  const TargetSpace space = build_target_space(config, kind);
  Dataset ds = Dataset::open(dataset_dir);
  std::vector<Trial> singles = ds.training();
  singles.insert(singles.end(), ds.validation().begin(), ds.validation().end());
  const auto train = make_examples(singles, config.simulator.pre_onset_s, window_s,
                                   config.simulator.target_analyte);

  FitContext ctx;
  ctx.space = &space;
  ctx.policy = config.augment.policy;
  ctx.augment_baselines = config.augment.augment_baselines;
  ctx.classify = config.classify;
  HyperParams hyper;
  hyper.net = config.embedder;
  hyper.net.seed = derive_seed(config.harness.master_seed, "net");
  hyper.c_penalty = config.classify.c_penalty;
  hyper.class_weight_ratio = config.classify.class_weight_ratio;
  const PipelineSpec spec{ModelFamily::kChemVise, parse_head(head_text), kind};

  PipelineBundle bundle;
  bundle.pipeline = fit_pipeline(spec, hyper, train, ctx, hyper.net.seed);
  bundle.window_s = window_s;
  bundle.pre_onset_s = config.simulator.pre_onset_s;
  bundle.target_analyte = config.simulator.target_analyte;
  save_bundle(bundle, out);
  std::cout << "trained " << spec.name() << " (" << to_string(kind) << ") on " << train.size()
            << " singles -> " << out.string() << '\n';
  return 0;
}

int cmd_evaluate(const fs::path& model_path, const fs::path& dataset_dir, const std::string& split_text,
                 const fs::path& out) {
  const PipelineBundle bundle = load_bundle(model_path);
  Dataset ds = Dataset::open(dataset_dir);
  ds.freeze();  // the model file fixes every hyperparameter
  const auto trials = ds.split(parse_split(split_text));
  const auto examples = make_examples(trials, bundle.pre_onset_s, bundle.window_s, bundle.target_analyte);
  const auto predictions = bundle.pipeline.predict(examples);
  std::ostringstream csv_out;
  csv_out << "trial_id,mix,label,prediction\n";
  std::vector<bool> labels;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    labels.push_back(examples[i].positive);
    csv_out << examples[i].trial_id << ',' << examples[i].mix.describe() << ',' << examples[i].positive
            << ',' << predictions[i] << '\n';
  }
  csv::write_file(out, csv_out.str());
  const auto counts = confusion(predictions, labels);
  std::cout << "n=" << counts.total() << " mcc=" << csv::format_double(mcc(counts))
            << " accuracy=" << csv::format_double(accuracy(counts)) << " tp=" << counts.tp
            << " fp=" << counts.fp << " tn=" << counts.tn << " fn=" << counts.fn << '\n';
  return 0;
}

int cmd_pca_plot(const fs::path& model_path, const fs::path& dataset_dir, const fs::path& out) {
  const PipelineBundle bundle = load_bundle(model_path);
  const FittedPipeline& p = bundle.pipeline;
  require(p.spec.family == ModelFamily::kChemVise, ErrorKind::kConfig, "pca-plot needs a ChemVise model");
  Dataset ds = Dataset::open(dataset_dir);
  ds.freeze();
  std::vector<Trial> trials = ds.training();
  trials.insert(trials.end(), ds.validation().begin(), ds.validation().end());
  const std::size_t n_singles = trials.size();
  const auto& holdout = ds.holdout();
  trials.insert(trials.end(), holdout.begin(), holdout.end());
  const auto examples = make_examples(trials, bundle.pre_onset_s, bundle.window_s, bundle.target_analyte);

  Matrix embedded(static_cast<Eigen::Index>(examples.size()), p.net->output_dim());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    embedded.row(static_cast<Eigen::Index>(i)) = embed(*p.net, examples[i].features).transpose();
  }
  // Projection fitted on singles only, unless the model carries its own.
  const PCAModel pca = p.pca ? *p.pca : pca_fit(embedded.topRows(static_cast<Eigen::Index>(n_singles)), 2);
  const Matrix projected = pca_transform(pca, embedded);
  std::ostringstream csv_out;
  csv_out << "trial_id,pc1,pc2,label,split\n";
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    csv_out << examples[i].trial_id << ',' << csv::format_double(projected(r, 0)) << ','
            << csv::format_double(projected(r, 1)) << ',' << examples[i].mix.describe() << ','
            << to_string(trials[i].split) << '\n';
  }
  csv::write_file(out, csv_out.str());
  std::cout << "projected " << examples.size() << " trials -> " << out.string() << '\n';
  return 0;
}

int cmd_sweep(const std::string& protocol, const std::string& config_path, int seeds,
              const std::string& dataset_dir, const fs::path& out, bool verbose) {
  Config config = config_or_default(config_path);
  if (seeds > 0) config.harness.n_repeats = seeds;
  RunOptions options;
  if (!dataset_dir.empty()) options.dataset_dir = dataset_dir;
  if (verbose) options.progress = [](const std::string& msg) { std::cerr << msg << '\n'; };
  ExperimentReport report;
  if (protocol == "representation") {
    report = run_representation_protocol(config, options);
  } else if (protocol == "window") {
    report = run_window_sweep(config, options);
  } else {
    raise(ErrorKind::kConfig, "unknown protocol '" + protocol + "'");
  }
  emit_report(report, out);
  std::cout << format_summary_csv(summarize(report));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chemvise: sensor-to-embedding training and mixture evaluation"};
  app.require_subcommand(1);

  std::string config_path, dataset, embeddings, target_space = "semantic", head = "svc", split = "test";
  std::string protocol, out, model;
  double window_s = 4.0;
  int seeds = 0;
  std::uint64_t n_analytes = 0, n_concentrations = 0;
  bool verbose = false;

  auto* simulate = app.add_subcommand("simulate", "Write a synthetic dataset");
  simulate->add_option("--config", config_path, "JSON config");
  simulate->add_option("--out", out, "Output directory")->required();

  auto* count = app.add_subcommand("count-experiments", "Experiments needed for every mixture");
  count->add_option("--analytes", n_analytes)->required()->check(CLI::PositiveNumber);
  count->add_option("--concentrations", n_concentrations)->required()->check(CLI::PositiveNumber);

  auto* train = app.add_subcommand("train", "Train a ChemVise pipeline on the singles of a dataset");
  train->add_option("--config", config_path, "JSON config");
  train->add_option("--dataset", dataset)->required();
  train->add_option("--target-space", target_space)->check(CLI::IsMember({"semantic", "onehot", "simplex"}));
  train->add_option("--embeddings", embeddings, "Semantic embedding CSV");
  train->add_option("--window-s", window_s);
  train->add_option("--head", head)->check(CLI::IsMember({"svc", "knn", "pca-svc"}));
  train->add_option("--out", out, "Model file")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Score a model on one split");
  evaluate->add_option("--model", model)->required();
  evaluate->add_option("--dataset", dataset)->required();
  evaluate->add_option("--split", split)->check(CLI::IsMember({"train", "val", "test"}));
  evaluate->add_option("--out", out, "Prediction CSV")->required();

  auto* sweep = app.add_subcommand("sweep", "Run an evaluation protocol and write a report");
  sweep->add_option("--protocol", protocol)->required()->check(CLI::IsMember({"representation", "window"}));
  sweep->add_option("--config", config_path, "JSON config");
  sweep->add_option("--seeds", seeds, "Repeats (overrides harness.n_repeats)")->check(CLI::PositiveNumber);
  sweep->add_option("--dataset", dataset, "Use this dataset instead of simulating one per repeat");
  sweep->add_option("--out", out, "Report directory")->required();
  sweep->add_flag("-v,--verbose", verbose);

  auto* pca_plot = app.add_subcommand("pca-plot", "2-D PCA coordinates of embedded trials");
  pca_plot->add_option("--model", model)->required();
  pca_plot->add_option("--dataset", dataset)->required();
  pca_plot->add_option("--out", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*simulate) return cmd_simulate(config_path, out);
    if (*count) {
      std::cout << count_experiments(n_analytes, n_concentrations) << '\n';
      return 0;
    }
    if (*train) return cmd_train(config_path, dataset, target_space, embeddings, window_s, head, out);
    if (*evaluate) return cmd_evaluate(model, dataset, split, out);
    if (*sweep) return cmd_sweep(protocol, config_path, seeds, dataset, out, verbose);
    if (*pca_plot) return cmd_pca_plot(model, dataset, out);
  } catch (const Error& e) {
    std::cerr << "chemvise: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "chemvise: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
