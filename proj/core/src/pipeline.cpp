#include "chemvise/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "chemvise/csv.hpp"
#include "chemvise/error.hpp"

namespace chemvise {

using nlohmann::json;

std::vector<Example> make_examples(const std::vector<Trial>& trials, double pre_onset_s,
                                   double window_s, std::string_view target_analyte) {
  std::vector<Example> out;
  out.reserve(trials.size());
  for (const auto& t : trials) {
    Example e;
    e.trial_id = t.id;
    e.features = featurize(t.trace, t.onset_s, pre_onset_s, window_s).values;
    e.mix = t.mix;
    e.positive = t.mix.label_positive(target_analyte);
    out.push_back(std::move(e));
  }
  return out;
}

std::string_view to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::kChemVise: return "chemvise";
    case ModelFamily::kFfnn: return "ffnn";
    case ModelFamily::kRawSvc: return "svc-raw";
  }
  return "unknown";
}

std::string_view to_string(Head head) {
  switch (head) {
    case Head::kSvc: return "svc";
    case Head::kKnn: return "knn";
    case Head::kPcaSvc: return "pca-svc";
  }
  return "unknown";
}

ModelFamily parse_family(std::string_view text) {
  if (text == "chemvise") return ModelFamily::kChemVise;
  if (text == "ffnn") return ModelFamily::kFfnn;
  if (text == "svc-raw") return ModelFamily::kRawSvc;
  raise(ErrorKind::kParse, "unknown model family '" + std::string(text) + "'");
}

Head parse_head(std::string_view text) {
  if (text == "svc") return Head::kSvc;
  if (text == "knn") return Head::kKnn;
  if (text == "pca-svc") return Head::kPcaSvc;
  raise(ErrorKind::kParse, "unknown head '" + std::string(text) + "'");
}

std::string PipelineSpec::name() const {
  if (family == ModelFamily::kChemVise) return "chemvise-" + std::string(to_string(head));
  return std::string(to_string(family));
}

std::string HyperParams::describe(ModelFamily family) const {
  std::ostringstream out;
  if (family != ModelFamily::kRawSvc) {
    out << "width=" << net.width << ";lr=" << csv::format_double(net.learning_rate)
        << ";epochs=" << net.epochs << ";batch=" << net.batch_size;
  }
  if (family != ModelFamily::kFfnn) {
    if (family != ModelFamily::kRawSvc) out << ';';
    out << "C=" << csv::format_double(c_penalty) << ";class_weight=" << csv::format_double(class_weight_ratio);
  }
  return out.str();
}

namespace {

MixPolicy baseline_policy(const FitContext& ctx) {
  MixPolicy policy = ctx.policy;
  if (!ctx.augment_baselines) policy.mix_probability = 0.0;
  return policy;
}

// Singles plus synthetic mixes of random distinct pairs, as head training data.
std::vector<TrainingSample> head_samples(std::span<const Example> train, const MixPolicy& policy,
                                         double mix_ratio, std::uint64_t seed) {
  std::vector<TrainingSample> samples;
  for (const auto& e : train) samples.push_back({e.features, Vector(), e.positive});
  const auto n_mix = static_cast<std::size_t>(std::llround(mix_ratio * static_cast<double>(train.size())));
  if (train.size() < 2 || n_mix == 0) return samples;
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> first(0, train.size() - 1);
  std::uniform_int_distribution<std::size_t> second(0, train.size() - 2);
  for (std::size_t m = 0; m < n_mix; ++m) {
    const std::size_t i = first(rng);
    std::size_t j = second(rng);
    if (j >= i) ++j;
    const double lambda = sample_lambda(policy, rng);
    samples.push_back(mix_samples(samples[i], samples[j], lambda));
  }
  return samples;
}

Matrix stack(const std::vector<Vector>& rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return m;
}

// Trains on (x - mean) / rms, where rms is the root mean square of the
// centred entries, and maps the solution back to the original coordinates.
// One scalar keeps the geometry while giving C the same meaning for raw
// features and for unit-scale embeddings.
LinearSVCModel fit_scaled_svc(const Matrix& points, const std::vector<bool>& labels,
                              const HyperParams& hyper, long iterations, std::uint64_t seed) {
  const Vector mean = points.colwise().mean().transpose();
  const Matrix centred = points.rowwise() - mean.transpose();
  const double rms = std::sqrt(centred.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, centred.size())));
  const double scale = rms > 1e-300 ? 1.0 / rms : 1.0;
  LinearSVCModel svc = train_linear_svc(centred * scale, labels, hyper.c_penalty, hyper.class_weight_ratio,
                                        seed, {iterations});
  svc.weight *= scale;
  svc.bias -= svc.weight.dot(mean);
  return svc;
}

}  // namespace

Vector FittedPipeline::represent(const Vector& features) const {
  switch (spec.family) {
    case ModelFamily::kChemVise: {
      Vector z = embed(*net, features);
      if (spec.head == Head::kPcaSvc) return pca_transform(*pca, z);
      return z;
    }
    case ModelFamily::kFfnn: return forward(*net, features);
    case ModelFamily::kRawSvc: return features;
  }
  return features;
}

bool FittedPipeline::predict(const Vector& features) const {
  if (spec.family == ModelFamily::kFfnn) return ffnn_predict(*net, features);
  const Vector z = represent(features);
  if (spec.family == ModelFamily::kChemVise && spec.head == Head::kKnn) {
    return knn_predict(knn_points, knn_labels, z, knn_k);
  }
  return svc_predict(*svc, z);
}

std::vector<bool> FittedPipeline::predict(std::span<const Example> examples) const {
  std::vector<bool> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(predict(e.features));
  return out;
}

MLPModel fit_embedder(const HyperParams& hyper, std::span<const Example> train,
                      const FitContext& ctx) {
  require(ctx.space != nullptr, ErrorKind::kConfig, "ChemVise needs a target space");
  std::vector<TrainingSample> samples;
  samples.reserve(train.size());
  for (const auto& e : train) samples.push_back({e.features, mixture_target(*ctx.space, e.mix), e.positive});
  return train_embedder(samples, {}, hyper.net, ctx.policy).model;
}

FittedPipeline fit_head(const PipelineSpec& spec, const HyperParams& hyper, const MLPModel& embedder,
                        std::span<const Example> train, const FitContext& ctx, std::uint64_t seed) {
  require(spec.family == ModelFamily::kChemVise, ErrorKind::kConfig, "fit_head needs a ChemVise spec");
  FittedPipeline fitted;
  fitted.spec = spec;
  fitted.hyper = hyper;
  fitted.net = embedder;
  fitted.knn_k = ctx.classify.knn_k;

  auto samples = head_samples(train, ctx.policy, ctx.classify.head_mix_ratio, derive_seed(seed, "head-mix"));
  std::vector<Vector> embedded;
  std::vector<bool> labels;
  for (const auto& s : samples) {
    embedded.push_back(embed(embedder, s.features));
    labels.push_back(s.positive);
  }
  Matrix points = stack(embedded);
  switch (spec.head) {
    case Head::kKnn:
      fitted.knn_points = std::move(points);
      fitted.knn_labels = std::move(labels);
      break;
    case Head::kPcaSvc:
      fitted.pca = pca_fit(points, 2);
      points = pca_transform(*fitted.pca, points);
      [[fallthrough]];
    case Head::kSvc:
      fitted.svc = fit_scaled_svc(points, labels, hyper, ctx.classify.svc_iterations, derive_seed(seed, "svc"));
      break;
  }
  return fitted;
}

FittedPipeline fit_pipeline(const PipelineSpec& spec, const HyperParams& hyper,
                            std::span<const Example> train, const FitContext& ctx,
                            std::uint64_t seed) {
  require(!train.empty(), ErrorKind::kDegenerate, "no training examples");
  switch (spec.family) {
    case ModelFamily::kChemVise:
      return fit_head(spec, hyper, fit_embedder(hyper, train, ctx), train, ctx, seed);
    case ModelFamily::kFfnn: {
      std::vector<TrainingSample> samples;
      for (const auto& e : train) samples.push_back({e.features, Vector(), e.positive});
      FittedPipeline fitted;
      fitted.spec = spec;
      fitted.hyper = hyper;
      fitted.net = train_ffnn_baseline(samples, hyper.net, baseline_policy(ctx)).model;
      return fitted;
    }
    case ModelFamily::kRawSvc: {
      const MixPolicy policy = baseline_policy(ctx);
      const double ratio = policy.mix_probability > 0.0 ? ctx.classify.head_mix_ratio : 0.0;
      auto samples = head_samples(train, policy, ratio, derive_seed(seed, "head-mix"));
      std::vector<Vector> rows;
      std::vector<bool> labels;
      for (const auto& s : samples) {
        rows.push_back(s.features);
        labels.push_back(s.positive);
      }
      FittedPipeline fitted;
      fitted.spec = spec;
      fitted.hyper = hyper;
      fitted.svc = fit_scaled_svc(stack(rows), labels, hyper, ctx.classify.svc_iterations, derive_seed(seed, "svc"));
      return fitted;
    }
  }
  raise(ErrorKind::kConfig, "unknown model family");
}

namespace {

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

void save_bundle(const PipelineBundle& bundle, const std::filesystem::path& path) {
  const FittedPipeline& p = bundle.pipeline;
  json meta;
  meta["family"] = std::string(to_string(p.spec.family));
  meta["head"] = std::string(to_string(p.spec.head));
  meta["target_kind"] = std::string(to_string(p.spec.target_kind));
  meta["window_s"] = bundle.window_s;
  meta["pre_onset_s"] = bundle.pre_onset_s;
  meta["target_analyte"] = bundle.target_analyte;
  meta["hyperparameters"] = p.hyper.describe(p.spec.family);
  meta["c_penalty"] = p.hyper.c_penalty;
  meta["class_weight"] = p.hyper.class_weight_ratio;
  if (p.svc) meta["svc"] = {{"weight", vector_json(p.svc->weight)}, {"bias", p.svc->bias}};
  if (p.pca) {
    json rows = json::array();
    for (Eigen::Index k = 0; k < p.pca->components.rows(); ++k) {
      rows.push_back(vector_json(p.pca->components.row(k).transpose()));
    }
    meta["pca"] = {{"mean", vector_json(p.pca->mean)},
                   {"components", rows},
                   {"explained_variance", vector_json(p.pca->explained_variance)},
                   {"total_variance", p.pca->total_variance}};
  }
  if (p.spec.head == Head::kKnn && p.spec.family == ModelFamily::kChemVise) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < p.knn_points.rows(); ++i) rows.push_back(vector_json(p.knn_points.row(i).transpose()));
    std::vector<int> labels;
    for (bool b : p.knn_labels) labels.push_back(b ? 1 : 0);
    meta["knn"] = {{"k", p.knn_k}, {"points", rows}, {"labels", labels}};
  }
  std::ostringstream out;
  out << "chemvise-pipeline 1\n" << meta.dump() << '\n';
  if (p.net) save_mlp(*p.net, out);
  csv::write_file(path, out.str());
}

PipelineBundle load_bundle(const std::filesystem::path& path) {
  std::istringstream in(csv::read_file(path));
  std::string line;
  std::getline(in, line);
  require(line == "chemvise-pipeline 1", ErrorKind::kParse, path.string() + ": not a chemvise pipeline file");
  std::getline(in, line);
  json meta;
  try {
    meta = json::parse(line);
  } catch (const json::exception& e) {
    raise(ErrorKind::kParse, path.string() + " line 2: " + e.what());
  }
  PipelineBundle bundle;
  FittedPipeline& p = bundle.pipeline;
  try {
    p.spec.family = parse_family(meta.at("family").get<std::string>());
    p.spec.head = parse_head(meta.at("head").get<std::string>());
    p.spec.target_kind = parse_target_kind(meta.at("target_kind").get<std::string>());
    bundle.window_s = meta.at("window_s").get<double>();
    bundle.pre_onset_s = meta.at("pre_onset_s").get<double>();
    bundle.target_analyte = meta.at("target_analyte").get<std::string>();
    p.hyper.c_penalty = meta.at("c_penalty").get<double>();
    p.hyper.class_weight_ratio = meta.at("class_weight").get<double>();
    if (meta.contains("svc")) {
      LinearSVCModel svc;
      svc.weight = vector_from(meta["svc"].at("weight"));
      svc.bias = meta["svc"].at("bias").get<double>();
      svc.c_penalty = p.hyper.c_penalty;
      svc.class_weight_ratio = p.hyper.class_weight_ratio;
      p.svc = std::move(svc);
    }
    if (meta.contains("pca")) {
      PCAModel pca;
      pca.mean = vector_from(meta["pca"].at("mean"));
      const auto& rows = meta["pca"].at("components");
      pca.components.resize(static_cast<Eigen::Index>(rows.size()), pca.mean.size());
      for (std::size_t k = 0; k < rows.size(); ++k) {
        pca.components.row(static_cast<Eigen::Index>(k)) = vector_from(rows[k]).transpose();
      }
      pca.explained_variance = vector_from(meta["pca"].at("explained_variance"));
      pca.total_variance = meta["pca"].at("total_variance").get<double>();
      p.pca = std::move(pca);
    }
    if (meta.contains("knn")) {
      p.knn_k = meta["knn"].at("k").get<int>();
      std::vector<Vector> rows;
      for (const auto& r : meta["knn"].at("points")) rows.push_back(vector_from(r));
      p.knn_points = stack(rows);
      for (int b : meta["knn"].at("labels").get<std::vector<int>>()) p.knn_labels.push_back(b != 0);
    }
  } catch (const json::exception& e) {
    raise(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  if (p.spec.family != ModelFamily::kRawSvc) {
    p.net = load_mlp(in);
    p.hyper.net.width = p.net->layer_dims.size() > 2 ? p.net->layer_dims[1] : p.hyper.net.width;
    p.hyper.net.n_hidden_layers = static_cast<int>(p.net->layer_dims.size()) - 2;
    p.hyper.net.seed = p.net->init_seed;
  }
  return bundle;
}

}  // namespace chemvise
