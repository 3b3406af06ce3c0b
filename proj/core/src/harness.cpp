#include "chemvise/harness.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <numeric>
#include <thread>

#include "chemvise/dataset.hpp"
#include "chemvise/error.hpp"

namespace chemvise {

std::uint64_t count_experiments(std::uint64_t n, std::uint64_t k) {
  require(n >= 1 && k >= 1, ErrorKind::kRange, "count_experiments needs n >= 1 and k >= 1");
  auto mul = [](std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) raise(ErrorKind::kNumeric, "experiment count overflows 64 bits");
    return r;
  };
  std::uint64_t total = 0;
  std::uint64_t binom = 1;  // C(n, p)
  std::uint64_t power = 1;  // k^p
  for (std::uint64_t p = 1; p <= n; ++p) {
    // C(n, p) = C(n, p-1) * (n - p + 1) / p, exact at every step.
    const std::uint64_t g = std::gcd(binom, p);
    binom = mul(binom / g, (n - p + 1) / (p / g));
    power = mul(power, k);
    if (__builtin_add_overflow(total, mul(binom, power), &total)) {
      raise(ErrorKind::kNumeric, "experiment count overflows 64 bits");
    }
  }
  return total;
}

std::vector<Fold> kfold_split(const std::vector<bool>& labels, int n_folds, std::uint64_t seed) {
  require(n_folds >= 2, ErrorKind::kConfig, "need at least 2 folds");
  require(labels.size() >= static_cast<std::size_t>(n_folds), ErrorKind::kRange,
          "fewer samples (" + std::to_string(labels.size()) + ") than folds (" + std::to_string(n_folds) + ")");
  Rng rng(seed);
  std::vector<std::size_t> order;
  for (bool cls : {true, false}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    std::shuffle(members.begin(), members.end(), rng);
    order.insert(order.end(), members.begin(), members.end());
  }
  std::vector<Fold> folds(static_cast<std::size_t>(n_folds));
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t f = pos % folds.size();
    for (std::size_t g = 0; g < folds.size(); ++g) {
      (g == f ? folds[g].val : folds[g].train).push_back(order[pos]);
    }
  }
  for (auto& fold : folds) {
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.val.begin(), fold.val.end());
  }
  return folds;
}

std::vector<HyperParams> sample_configs(ModelFamily family, const GridSpec& grid,
                                        const HyperParams& base, std::uint64_t seed) {
  grid.validate();
  Rng rng(seed);
  auto pick = [&rng](const auto& list) {
    std::uniform_int_distribution<std::size_t> d(0, list.size() - 1);
    return list[d(rng)];
  };
  std::vector<HyperParams> out;
  for (int b = 0; b < grid.budget; ++b) {
    HyperParams h = base;
    if (family != ModelFamily::kRawSvc) {
      h.net.width = pick(grid.widths);
      h.net.learning_rate = pick(grid.learning_rates);
      h.net.epochs = pick(grid.epochs);
      h.net.batch_size = pick(grid.batch_sizes);
    }
    if (family != ModelFamily::kFfnn) {
      h.c_penalty = std::uniform_real_distribution<double>(grid.c_min, grid.c_max)(rng);
      h.class_weight_ratio = pick(grid.class_weights);
    }
    out.push_back(h);
  }
  return out;
}

namespace {

std::vector<Example> subset(std::span<const Example> all, const std::vector<std::size_t>& idx) {
  std::vector<Example> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(all[i]);
  return out;
}

std::vector<bool> labels_of(std::span<const Example> examples) {
  std::vector<bool> out;
  for (const auto& e : examples) out.push_back(e.positive);
  return out;
}

// Runs jobs on up to `threads` workers; each job writes only its own slot.
void run_jobs(std::size_t n, int threads, const std::function<void(std::size_t)>& job) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

GridResult grid_search(const PipelineSpec& spec, const GridSpec& grid, const HyperParams& base,
                       std::span<const Example> train_singles, const FitContext& ctx,
                       std::uint64_t seed) {
  for (const auto& e : train_singles) {
    require(e.mix.is_single(), ErrorKind::kHygiene,
            "grid search received non-single exposure '" + e.trial_id + "'");
  }
  GridResult result;
  result.sampled = sample_configs(spec.family, grid, base, derive_seed(seed, "sample"));
  const auto folds = kfold_split(labels_of(train_singles), grid.n_folds, derive_seed(seed, "folds"));
  result.mean_mcc.assign(result.sampled.size(), 0.0);
  for (std::size_t c = 0; c < result.sampled.size(); ++c) {
    HyperParams h = result.sampled[c];
    const std::string described = h.describe(spec.family);
    for (std::size_t f = 0; f < folds.size(); ++f) {
      h.net.seed = derive_seed(seed, c * 1000 + f);
      const auto train = subset(train_singles, folds[f].train);
      const auto val = subset(train_singles, folds[f].val);
      const auto fitted = fit_pipeline(spec, h, train, ctx, h.net.seed);
      const double score = mcc(confusion(fitted.predict(val), labels_of(val)));
      result.cv_table.push_back({static_cast<int>(c), static_cast<int>(f), score, described});
      result.mean_mcc[c] += score / static_cast<double>(folds.size());
    }
  }
  for (std::size_t c = 1; c < result.mean_mcc.size(); ++c) {
    if (result.mean_mcc[c] > result.mean_mcc[static_cast<std::size_t>(result.best_index)]) {
      result.best_index = static_cast<int>(c);
    }
  }
  result.best = result.sampled[static_cast<std::size_t>(result.best_index)];
  return result;
}

TargetSpace build_target_space(const Config& config, TargetKind kind) {
  const auto& analytes = config.simulator.analytes;
  const auto& t = config.targets;
  switch (kind) {
    case TargetKind::kOneHot: return build_one_hot(analytes, t.dimension);
    case TargetKind::kSimplex: return build_simplex(analytes, t.dimension, derive_seed(t.seed, "simplex"));
    case TargetKind::kSemantic:
      if (!t.embeddings_path.empty()) {
        TargetSpace loaded = load_semantic(t.embeddings_path);
        for (const auto& a : analytes) {
          require(loaded.contains(a), ErrorKind::kLookup, "embeddings lack analyte '" + a + "'");
        }
        return loaded;
      }
      return gen_synthetic_semantic(analytes, t.dimension, t.n_clusters, t.cluster_spread, t.seed,
                                    t.cluster_of);
  }
  raise(ErrorKind::kConfig, "unknown target kind");
}

namespace {

ExperimentReport new_report(const Config& config) {
  ExperimentReport report;
  report.config = config_to_json(config);
  report.master_seed = config.harness.master_seed;
  report.version = CHEMVISE_VERSION;
  return report;
}

// Source of trials for one repeat: a simulated world or a dataset on disk.
Dataset dataset_for_repeat(const Config& config, const RunOptions& options, int repeat) {
  if (options.dataset_dir) return Dataset::open(*options.dataset_dir);
  const std::uint64_t seed = derive_seed(derive_seed(config.harness.master_seed, repeat), "data");
  return Dataset::from_trials(simulate_trials(config.simulator, seed));
}

std::vector<Trial> singles_of(const Dataset& ds) {
  std::vector<Trial> out = ds.training();
  out.insert(out.end(), ds.validation().begin(), ds.validation().end());
  return out;
}

ReportRow evaluate_row(const FittedPipeline& fitted, std::span<const Example> holdout) {
  std::vector<bool> labels;
  for (const auto& e : holdout) labels.push_back(e.positive);
  ReportRow row;
  row.counts = confusion(fitted.predict(holdout), labels);
  row.mcc = mcc(row.counts);
  row.accuracy = accuracy(row.counts);
  row.hyperparameters = fitted.hyper.describe(fitted.spec.family);
  return row;
}

FitContext context_for(const Config& config, const TargetSpace* space, std::uint64_t seed) {
  FitContext ctx;
  ctx.space = space;
  ctx.policy = config.augment.policy;
  ctx.policy.seed = derive_seed(config.augment.policy.seed, seed);
  ctx.augment_baselines = config.augment.augment_baselines;
  ctx.classify = config.classify;
  return ctx;
}

HyperParams base_hyper(const Config& config) {
  HyperParams h;
  h.net = config.embedder;
  h.c_penalty = config.classify.c_penalty;
  h.class_weight_ratio = config.classify.class_weight_ratio;
  return h;
}

void say(const RunOptions& options, const std::string& text) {
  if (options.progress) options.progress(text);
}

}  // namespace

ExperimentReport run_representation_protocol(const Config& config, const RunOptions& options) {
  config.validate();
  require(config.simulator.analytes.size() >= 4, ErrorKind::kConfig,
          "the representation protocol needs at least 4 analytes");
  ExperimentReport report = new_report(config);
  const auto& h = config.harness;
  const double window = h.representation_window_s;
  const std::vector<TargetKind> kinds{TargetKind::kSemantic, TargetKind::kOneHot, TargetKind::kSimplex};
  std::vector<TargetSpace> spaces;
  for (auto kind : kinds) spaces.push_back(build_target_space(config, kind));
  const std::vector<Head> heads{Head::kSvc, Head::kKnn, Head::kPcaSvc};

  for (int repeat = 0; repeat < h.n_repeats; ++repeat) {
    const std::uint64_t rseed = derive_seed(h.master_seed, repeat);
    Dataset ds = dataset_for_repeat(config, options, repeat);
    const auto train = make_examples(singles_of(ds), config.simulator.pre_onset_s, window,
                                     config.simulator.target_analyte);

    // Hyperparameters for every kind are fixed before the holdout is opened.
    std::vector<HyperParams> chosen(kinds.size(), base_hyper(config));
    std::vector<MLPModel> nets(kinds.size());
    run_jobs(kinds.size(), h.threads, [&](std::size_t k) {
      const std::uint64_t kseed = derive_seed(rseed, to_string(kinds[k]));
      const FitContext ctx = context_for(config, &spaces[k], kseed);
      const PipelineSpec spec{ModelFamily::kChemVise, Head::kSvc, kinds[k]};
      if (h.search) {
        chosen[k] = grid_search(spec, h.grid, base_hyper(config), train, ctx, derive_seed(kseed, "grid")).best;
      }
      chosen[k].net.seed = derive_seed(kseed, "net");
      nets[k] = fit_embedder(chosen[k], train, ctx);
    });
    say(options, "representation repeat " + std::to_string(repeat) + ": embedders trained");

    ds.freeze();
    const auto holdout = make_examples(ds.holdout(), config.simulator.pre_onset_s, window,
                                       config.simulator.target_analyte);
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      const std::uint64_t kseed = derive_seed(rseed, to_string(kinds[k]));
      const FitContext ctx = context_for(config, &spaces[k], kseed);
      for (Head head : heads) {
        const PipelineSpec spec{ModelFamily::kChemVise, head, kinds[k]};
        const auto fitted = fit_head(spec, chosen[k], nets[k], train, ctx, derive_seed(kseed, to_string(head)));
        ReportRow row = evaluate_row(fitted, holdout);
        row.protocol = "representation";
        row.family = spec.name();
        row.kind = std::string(to_string(kinds[k]));
        row.window_s = window;
        row.seed = repeat;
        report.rows.push_back(std::move(row));
      }
    }
  }
  report.sort();
  return report;
}

ExperimentReport run_window_sweep(const Config& config, const RunOptions& options) {
  config.validate();
  const auto& h = config.harness;
  require(!h.window_lengths_s.empty(), ErrorKind::kConfig, "no window lengths");
  ExperimentReport report = new_report(config);
  const TargetSpace semantic = build_target_space(config, TargetKind::kSemantic);
  const std::vector<PipelineSpec> specs{{ModelFamily::kChemVise, Head::kSvc, TargetKind::kSemantic},
                                        {ModelFamily::kFfnn, Head::kSvc, TargetKind::kSemantic},
                                        {ModelFamily::kRawSvc, Head::kSvc, TargetKind::kSemantic}};
  const std::size_t n_windows = h.window_lengths_s.size();

  for (int repeat = 0; repeat < h.n_repeats; ++repeat) {
    const std::uint64_t rseed = derive_seed(h.master_seed, repeat);
    Dataset ds = dataset_for_repeat(config, options, repeat);
    const auto singles = singles_of(ds);
    std::vector<std::vector<Example>> train(n_windows);
    for (std::size_t w = 0; w < n_windows; ++w) {
      train[w] = make_examples(singles, config.simulator.pre_onset_s, h.window_lengths_s[w],
                               config.simulator.target_analyte);
    }

    // Search every (window, family) cell on singles, then open the holdout.
    const std::size_t n_cells = n_windows * specs.size();
    std::vector<HyperParams> chosen(n_cells, base_hyper(config));
    auto cell_seed = [&](std::size_t cell) {
      return derive_seed(derive_seed(rseed, specs[cell % specs.size()].name()), cell / specs.size());
    };
    run_jobs(n_cells, h.threads, [&](std::size_t cell) {
      const std::size_t w = cell / specs.size();
      if (h.search) {
        const FitContext ctx = context_for(config, &semantic, cell_seed(cell));
        chosen[cell] = grid_search(specs[cell % specs.size()], h.grid, base_hyper(config), train[w], ctx,
                                   derive_seed(cell_seed(cell), "grid"))
                           .best;
      }
      say(options, "window repeat " + std::to_string(repeat) + " cell " + std::to_string(cell) + " searched");
    });

    ds.freeze();
    const auto& holdout_trials = ds.holdout();
    std::vector<ReportRow> rows(n_cells);
    run_jobs(n_cells, h.threads, [&](std::size_t cell) {
      const std::size_t w = cell / specs.size();
      const PipelineSpec& spec = specs[cell % specs.size()];
      const FitContext ctx = context_for(config, &semantic, cell_seed(cell));
      HyperParams hp = chosen[cell];
      hp.net.seed = derive_seed(cell_seed(cell), "final");
      const auto fitted = fit_pipeline(spec, hp, train[w], ctx, hp.net.seed);
      const auto holdout = make_examples(holdout_trials, config.simulator.pre_onset_s, h.window_lengths_s[w],
                                         config.simulator.target_analyte);
      ReportRow row = evaluate_row(fitted, holdout);
      row.protocol = "window";
      row.family = spec.name();
      row.kind = spec.family == ModelFamily::kChemVise ? std::string(to_string(spec.target_kind)) : "none";
      row.window_s = h.window_lengths_s[w];
      row.seed = repeat;
      rows[cell] = std::move(row);
    });
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  report.sort();
  return report;
}

}  // namespace chemvise
