// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "chemvise/augment.hpp"
#include "chemvise/classify.hpp"
#include "chemvise/csv.hpp"
#include "chemvise/dataset.hpp"
#include "chemvise/embedder.hpp"
#include "chemvise/error.hpp"
#include "chemvise/harness.hpp"
#include "chemvise/report.hpp"
#include "chemvise/signals.hpp"
#include "chemvise/targets.hpp"

using namespace chemvise;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fmt_sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

// ---------------------------------------------------------------- 1

std::uint64_t enumerate_mixtures(int n, int k) {
  // every assignment of {absent, level 1..k} to n analytes, minus the empty one
  std::uint64_t states = 1;
  for (int i = 0; i < n; ++i) states *= static_cast<std::uint64_t>(k + 1);
  std::uint64_t count = 0;
  for (std::uint64_t s = 0; s < states; ++s) {
    std::uint64_t rest = s;
    bool any = false;
    for (int i = 0; i < n; ++i, rest /= static_cast<std::uint64_t>(k + 1)) {
      any = any || rest % static_cast<std::uint64_t>(k + 1) != 0;
    }
    count += any ? 1 : 0;
  }
  return count;
}

Outcome experiment_count() {
  int cases = 0, bad = 0;
  for (int n = 1; n <= 5; ++n) {
    for (int k = 1; k <= 4; ++k) {
      ++cases;
      if (count_experiments(static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(k)) !=
          enumerate_mixtures(n, k)) {
        ++bad;
      }
    }
  }
  const auto c44 = count_experiments(4, 4);
  return {bad == 0 && c44 == 624,
          std::to_string(cases - bad) + "/" + std::to_string(cases) + " match; (4,4) -> " + std::to_string(c44)};
}

// ---------------------------------------------------------------- 2

Outcome gradient_oracle() {
  Rng rng(99);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto random_matrix = [&](Eigen::Index r, Eigen::Index c) {
    return Eigen::MatrixXd::NullaryExpr(r, c, [&]() { return u(rng); }).eval();
  };
  const double h = 1e-5;
  double worst = 0.0;
  const int n_models = 100;
  for (int trial = 0; trial < n_models; ++trial) {
    std::vector<int> dims{dim(rng)};
    const int hidden = dim(rng) % 3 + 1;
    for (int l = 0; l < hidden; ++l) dims.push_back(dim(rng));
    dims.push_back(dim(rng));
    MLPModel model = init_mlp(dims, static_cast<std::uint64_t>(trial));
    for (auto& b : model.biases) b = random_matrix(b.size(), 1);
    const auto x = random_matrix(dims.front(), dim(rng));
    const auto y = random_matrix(dims.back(), x.cols());
    const Eigen::VectorXd analytic = flatten_gradients(loss_and_grad(model, x, y).grads);
    const Eigen::VectorXd theta = flatten_parameters(model);
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Eigen::VectorXd t = theta;
      t[i] = theta[i] + h;
      assign_parameters(model, t);
      const double up = loss_and_grad(model, x, y).loss;
      t[i] = theta[i] - h;
      assign_parameters(model, t);
      const double down = loss_and_grad(model, x, y).loss;
      const double numeric = (up - down) / (2 * h);
      const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
    }
    assign_parameters(model, theta);
  }
  return {worst < 1e-4, std::to_string(n_models) + " models, max relative error " + fmt_sci(worst)};
}

// ---------------------------------------------------------------- 3

Outcome simplex_geometry() {
  const auto space = build_simplex({"A", "B", "C", "D"}, 512, 0);
  double dmin = 1e300, dmax = 0.0, norm_err = 0.0;
  const auto& v = space.vectors();
  for (std::size_t i = 0; i < v.size(); ++i) {
    norm_err = std::max(norm_err, std::abs(v[i].norm() - 1.0));
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      const double d = (v[i] - v[j]).norm();
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
    }
  }
  const bool pass = dmax - dmin <= 1e-9 && norm_err <= 1e-9 && v[0].size() == 512;
  return {pass, "distance spread " + fmt_sci(dmax - dmin) + ", norm error " + fmt_sci(norm_err)};
}

// ---------------------------------------------------------------- 4

Outcome mixup_algebra() {
  Rng rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  auto vec = [&](int n) { return Vector::NullaryExpr(n, [&]() { return u(rng); }).eval(); };
  const auto space = gen_synthetic_semantic({"A", "B", "C", "D"}, 64, 2, 0.02, 5);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const Vector xi = vec(30), xj = vec(30), yi = vec(8), yj = vec(8);
    const double lambda = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto one = mix_pair(xi, yi, xj, yj, 1.0);
    worst = std::max({worst, (one.first - xi).cwiseAbs().maxCoeff(), (one.second - yi).cwiseAbs().maxCoeff()});
    const auto a = mix_pair(xi, yi, xj, yj, lambda);
    const auto b = mix_pair(xj, yj, xi, yi, 1.0 - lambda);
    worst = std::max({worst, (a.first - b.first).cwiseAbs().maxCoeff(), (a.second - b.second).cwiseAbs().maxCoeff()});

    // a two-analyte target lies on the segment between its components
    const std::vector<std::string> ids{"A", "B", "C", "D"};
    const auto& p = ids[static_cast<std::size_t>(t % 4)];
    const auto& q = ids[static_cast<std::size_t>((t / 4 + 1 + t % 4) % 4)];
    if (p == q) continue;
    const double ca = 0.1 + 0.2 * lambda, cb = 0.25 - 0.1 * lambda;
    const Vector target = mixture_target(space, AnalyteMix::pair(p, ca, q, cb));
    const Vector vp = space.at(p), vq = space.at(q);
    const double share = ca / (ca + cb);
    worst = std::max(worst, (target - (share * vp + (1.0 - share) * vq)).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-12, "max deviation " + fmt_sci(worst)};
}

// ---------------------------------------------------------------- 5

Outcome additivity() {
  SimulatorConfig sim;
  sim.interference_gamma = 0.0;
  sim.noise_sigma = 0.0;
  const AffinityModel model = sim.affinity_model();
  double worst = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < sim.analytes.size(); ++i) {
    for (std::size_t j = i + 1; j < sim.analytes.size(); ++j) {
      const auto& a = sim.analytes[i];
      const auto& b = sim.analytes[j];
      const auto ta = simulate_trial(AnalyteMix::single(a, 0.2), model, sim.schedule, sim.sample_rate_hz, 1);
      const auto tb = simulate_trial(AnalyteMix::single(b, 0.15), model, sim.schedule, sim.sample_rate_hz, 2);
      const auto tab =
          simulate_trial(AnalyteMix::pair(a, 0.2, b, 0.15), model, sim.schedule, sim.sample_rate_hz, 3);
      worst = std::max(worst, (superpose(ta, tb).values - tab.values).cwiseAbs().maxCoeff());
      ++pairs;
    }
  }
  return {pairs == 6 && worst <= 1e-12, std::to_string(pairs) + " pairs, max deviation " + fmt_sci(worst)};
}

// ---------------------------------------------------------------- 8

double formula_mcc(long tp, long fp, long tn, long fn) {
  const long double a = tp + fp, b = tp + fn, c = tn + fp, d = tn + fn;
  if (a == 0 || b == 0 || c == 0 || d == 0) return 0.0;
  return static_cast<double>((static_cast<long double>(tp) * tn - static_cast<long double>(fp) * fn) /
                             std::sqrt(a * b * c * d));
}

Outcome mcc_correctness() {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<long> count(0, 40);
  std::bernoulli_distribution zero(0.2);
  double worst = 0.0;
  int degenerate = 0;
  for (int t = 0; t < 1000; ++t) {
    long c[4];
    for (long& x : c) x = zero(rng) ? 0 : count(rng);
    const double expected = formula_mcc(c[0], c[1], c[2], c[3]);
    const double got = mcc(ConfusionCounts{c[0], c[1], c[2], c[3]});
    if ((c[0] + c[1]) * (c[0] + c[3]) * (c[2] + c[1]) * (c[2] + c[3]) == 0) {
      ++degenerate;
      worst = std::max(worst, std::abs(got));
    }
    worst = std::max(worst, std::abs(got - expected));
  }
  return {worst <= 1e-12, "1000 matrices (" + std::to_string(degenerate) + " zero-denominator), max error " +
                              fmt_sci(worst)};
}

// ---------------------------------------------------------------- 10

Outcome hygiene(const fs::path& scratch) {
  Config c;
  c.simulator.concentrations = {0.15, 0.25};
  c.simulator.replicates = 2;
  c.simulator.holdout_doubles = 6;
  c.targets.dimension = 8;
  c.embedder.width = 4;
  c.embedder.epochs = 1;
  c.embedder.n_hidden_layers = 1;
  c.harness.n_repeats = 1;
  c.harness.window_lengths_s = {2.4};
  c.harness.grid.widths = {4};
  c.harness.grid.epochs = {1};
  c.harness.grid.budget = 1;
  c.harness.grid.n_folds = 2;
  c.classify.svc_iterations = 500;

  const fs::path dir = scratch / "hygiene";
  const auto trials = simulate_trials(c.simulator, 10);
  std::vector<std::string> victims;
  for (const auto& t : trials) {
    if (t.split == Split::kTest) victims.push_back(t.id);
  }
  int caught = 0;
  std::string last;
  for (const auto& victim : victims) {
    fs::remove_all(dir);
    write_dataset(dir, trials);
    RunOptions options;
    options.dataset_dir = dir;
    bool touched = false;
    // Each search cell reports progress; the first report edits a sealed file.
    options.progress = [&](const std::string& msg) {
      if (!touched && msg.find("searched") != std::string::npos) {
        std::ofstream(dir / "signals" / (victim + ".csv"), std::ios::app) << "0\n";
        touched = true;
      }
    };
    try {
      run_window_sweep(c, options);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kHygiene) ++caught;
      last = e.what();
    }
  }
  const bool pass = caught == static_cast<int>(victims.size()) && !victims.empty();
  return {pass, std::to_string(caught) + "/" + std::to_string(victims.size()) + " edits raised: " + last};
}

// ---------------------------------------------------------------- 6, 9

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct SweepRun {
  bool ok = false;
  double seconds = 0.0;
};

SweepRun run_cli(const std::string& protocol, const fs::path& config, const fs::path& out) {
  const std::string cmd = "CHEMVISE_SEED=20240917 \"" + std::string(CHEMVISE_CLI) + "\" sweep --protocol " +
                          protocol + " --config \"" + config.string() + "\" --out \"" + out.string() +
                          "\" > \"" + (out.string() + ".log") + "\" 2>&1";
  const auto start = Clock::now();
  const int status = std::system(cmd.c_str());
  return {status == 0, seconds_since(start)};
}

double median_of(std::vector<double> v) { return quantile(std::move(v), 0.5); }

Outcome representation_ordering(const fs::path& report_dir, double seconds) {
  const auto report = read_report(report_dir);
  std::map<std::string, std::vector<double>> by_kind;
  for (const auto& r : report.rows) {
    if (r.family == "chemvise-svc") by_kind[r.kind].push_back(r.mcc);
  }
  if (by_kind["semantic"].size() != 5 || by_kind["onehot"].size() != 5 || by_kind["simplex"].size() != 5) {
    return {false, "expected 5 rows per target kind"};
  }
  const double sem = median_of(by_kind["semantic"]);
  const double one = median_of(by_kind["onehot"]);
  const double sim = median_of(by_kind["simplex"]);
  const bool pass = sem > one && sem > sim && seconds <= 600.0;
  return {pass, "median MCC semantic " + fmt(sem) + ", onehot " + fmt(one) + ", simplex " + fmt(sim) + "; " +
                    fmt(seconds, 0) + " s"};
}

Outcome determinism(const fs::path& a, const fs::path& b, const SweepRun& ra, const SweepRun& rb,
                    double budget_s) {
  if (!ra.ok || !rb.ok) return {false, "sweep exited with an error"};
  const bool same_report = slurp(a / "report.csv") == slurp(b / "report.csv");
  const bool same_summary = slurp(a / "summary.csv") == slurp(b / "summary.csv");
  const bool nonempty = !slurp(a / "report.csv").empty();
  const double total = ra.seconds + rb.seconds;
  return {same_report && same_summary && nonempty && total <= budget_s,
          std::string("report.csv ") + (same_report ? "identical" : "differs") + ", summary.csv " +
              (same_summary ? "identical" : "differs") + "; " + fmt(total, 0) + " s"};
}

// ---------------------------------------------------------------- 7

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // ties share the mean rank
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = (n + 1) / 2, my = mx;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxx == 0 || syy == 0 ? 0.0 : sxy / std::sqrt(sxx * syy);
}

Outcome window_trend(const fs::path& config_path) {
  Config config = load_config(config_path);
  apply_environment(config);
  RunOptions options;
  options.progress = [](const std::string& msg) { std::cerr << "  " << msg << '\n'; };
  const auto start = Clock::now();
  const auto report = run_window_sweep(config, options);
  const double seconds = seconds_since(start);

  std::map<std::pair<std::string, double>, std::vector<double>> cells;
  for (const auto& r : report.rows) cells[{r.family, r.window_s}].push_back(r.mcc);
  std::vector<double> windows, chemvise_medians;
  bool dominates = true;
  std::ostringstream table;
  for (double w : config.harness.window_lengths_s) {
    const double cv = median_of(cells[{"chemvise-svc", w}]);
    const double ff = median_of(cells[{"ffnn", w}]);
    const double sv = median_of(cells[{"svc-raw", w}]);
    dominates = dominates && cv >= ff && cv >= sv;
    windows.push_back(w);
    chemvise_medians.push_back(cv);
    table << ' ' << fmt(w, 2) << "s:" << fmt(cv, 2) << '/' << fmt(ff, 2) << '/' << fmt(sv, 2);
  }
  const double rho = spearman(windows, chemvise_medians);
  const bool in_budget = seconds <= 1200.0;
  return {dominates && rho > 0.0 && in_budget,
          std::string("(a) ") + (dominates ? "holds" : "fails") + ", chemvise/ffnn/svc-raw medians" + table.str() +
              "; (b) spearman " + fmt(rho) + "; " + fmt(seconds, 0) + " s"};
}

}  // namespace

int main() {
  const fs::path data_dir = CHEMVISE_TEST_DATA;
  const fs::path scratch = fs::temp_directory_path() / ("chemvise-acceptance-" + std::to_string(std::random_device{}()));
  fs::create_directories(scratch);

  std::map<std::string, Outcome> results;
  auto timed = [&](const std::string& id, double budget_s, const std::function<Outcome()>& run) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double s = seconds_since(start);
    if (s > budget_s) {
      o.pass = false;
      o.detail += " (over the " + fmt(budget_s, 0) + " s budget)";
    }
    std::cerr << "criterion " << id << " done in " << fmt(s, 1) << " s\n";
    results[id] = o;
  };

  timed("1", 1.0, experiment_count);
  timed("2", 30.0, gradient_oracle);
  timed("3", 1.0, simplex_geometry);
  timed("4", 1.0, mixup_algebra);
  timed("5", 5.0, additivity);
  timed("8", 1.0, mcc_correctness);
  timed("10", 1.0, [&] { return hygiene(scratch); });

  // The first of the two determinism runs doubles as the ordering experiment.
  const fs::path desk = data_dir / "desk.json";
  std::cerr << "criterion 9: two representation sweeps through the CLI\n";
  const SweepRun first = run_cli("representation", desk, scratch / "run1");
  const SweepRun second = run_cli("representation", desk, scratch / "run2");
  try {
    results["6"] = first.ok ? representation_ordering(scratch / "run1", first.seconds)
                            : Outcome{false, "sweep failed; see " + (scratch / "run1.log").string()};
  } catch (const std::exception& e) {
    results["6"] = {false, std::string("error: ") + e.what()};
  }
  results["9"] = determinism(scratch / "run1", scratch / "run2", first, second, 1200.0);

  std::cerr << "criterion 7: window sweep\n";
  try {
    results["7"] = window_trend(desk);
  } catch (const std::exception& e) {
    results["7"] = {false, std::string("error: ") + e.what()};
  }

  int failures = 0;
  for (const char* id : {"1", "2", "3", "4", "5", "6", "7", "8", "9", "10"}) {
    const auto& o = results[id];
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << o.detail << '\n';
  }
  std::error_code ec;
  fs::remove_all(scratch, ec);
  return failures == 0 ? 0 : 1;
}
