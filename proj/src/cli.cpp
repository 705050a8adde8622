#include "sd/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sd/datasets.hpp"
#include "sd/embeddings.hpp"
#include "sd/error.hpp"
#include "sd/features.hpp"
#include "sd/io.hpp"
#include "sd/kernel_descent.hpp"
#include "sd/neural.hpp"
#include "sd/sobolev.hpp"
#include "sd/trace.hpp"

#ifndef SD_VERSION
#define SD_VERSION "unknown"
#endif

namespace sd::cli {
namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string mode = "kernel";
  std::uint64_t seed = 1;
  std::string out = "out";
  long trace_every = 1;
  bool timing = false;
  bool raw_features = false;
  double stop_mmd = -1.0;  // negative: never stop early
  long eval_m = 300;
  double eval_sigma = 0.1;
};

struct KernelOpts {
  long m = 128;
  double sigma = 0.3;
  double lambda = 1e-2;
  double eps = 1e-2;
  long steps = 3000;
};

struct NeuralOpts {
  std::string hidden = "32,64,32";
  double slope = 0.2;
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double rho = 1e-6;
  double lambda_alm = 0.01;
  long nc = 10;
  long warmup = 50;
  double eps = 3e-3;
  long steps = 800;
  long batch = 512;
};

void configure_app(CLI::App& app) {
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "Flat key=value file (e.g. a manifest.ini); flags override it");
}

void add_common(CLI::App& app, CommonOpts& c) {
  app.add_option("--mode", c.mode, "Descent variant")->check(CLI::IsMember({"kernel", "neural"}));
  app.add_option("--seed", c.seed, "Master seed");
  app.add_option("--out", c.out, "Output directory");
  app.add_option("--trace-every", c.trace_every, "Trace every N-th step")
      ->check(CLI::PositiveNumber);
  app.add_flag("--timing", c.timing, "Record wall-clock milliseconds in the trace");
  app.add_flag("--raw-features", c.raw_features, "Random features without the sqrt(2/m) scale");
  app.add_option("--stop-mmd", c.stop_mmd, "Stop once mmd2 <= value (negative disables)");
  app.add_option("--eval-m", c.eval_m, "Features of the evaluation kernel")
      ->check(CLI::PositiveNumber);
  app.add_option("--eval-sigma", c.eval_sigma, "Bandwidth of the evaluation kernel");
}

void add_kernel(CLI::App& app, KernelOpts& k) {
  app.add_option("--m", k.m, "Random features of the descent kernel")->check(CLI::PositiveNumber);
  app.add_option("--sigma", k.sigma, "Bandwidth of the descent kernel");
  app.add_option("--lambda", k.lambda, "Tikhonov regularization of the critic (> 0)");
  app.add_option("--eps", k.eps, "Kernel descent step size");
  app.add_option("--steps", k.steps, "Kernel descent iterations");
}

void add_neural(CLI::App& app, NeuralOpts& n) {
  app.add_option("--hidden", n.hidden, "Comma-separated hidden layer widths");
  app.add_option("--slope", n.slope, "Leaky rectifier negative slope");
  app.add_option("--lr", n.lr, "ADAM learning rate");
  app.add_option("--beta1", n.beta1, "ADAM beta1");
  app.add_option("--beta2", n.beta2, "ADAM beta2");
  app.add_option("--adam-eps", n.adam_eps, "ADAM epsilon");
  app.add_option("--rho", n.rho, "Augmented Lagrangian penalty weight");
  app.add_option("--lambda-alm", n.lambda_alm, "Initial Lagrange multiplier");
  app.add_option("--nc", n.nc, "Critic updates per particle step");
  app.add_option("--warmup", n.warmup, "Critic updates before the first particle step");
  app.add_option("--neural-eps", n.eps, "Neural descent step size");
  app.add_option("--neural-steps", n.steps, "Neural descent particle steps");
  app.add_option("--batch", n.batch, "Minibatch size when particles exceed 4096");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_number(const std::string& token, const std::string& what) {
  try {
    return parse_double(token);
  } catch (const IoError&) {
    throw ParameterError(what + ": '" + token + "' is not a number");
  }
}

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& tok : split_list(text)) out.push_back(parse_number(tok, what));
  return out;
}

/// Steps listed in `text`; the token "final" asks for the last state.
struct SnapshotPlan {
  std::set<long> steps;
  bool final = false;
};

SnapshotPlan parse_snapshots(const std::string& text) {
  SnapshotPlan plan;
  for (const auto& tok : split_list(text)) {
    if (tok == "final") {
      plan.final = true;
      continue;
    }
    const double v = parse_number(tok, "--snapshots");
    if (v < 0 || v != static_cast<double>(static_cast<long>(v))) {
      throw ParameterError("--snapshots: steps must be non-negative integers");
    }
    plan.steps.insert(static_cast<long>(v));
  }
  return plan;
}

KernelDescentConfig kernel_config(const CommonOpts& c, const KernelOpts& k) {
  if (!(k.lambda > 0.0)) {
    throw ParameterError("--lambda must be > 0: the regularized critic solves (D + lambda I) u = delta, "
                         "which needs lambda > 0");
  }
  KernelDescentConfig cfg;
  cfg.epsilon = k.eps;
  cfg.steps = k.steps;
  cfg.lambda = k.lambda;
  cfg.features.features = k.m;
  cfg.features.bandwidth = k.sigma;
  cfg.features.seed = c.seed;
  cfg.features.scaling = c.raw_features ? FeatureScaling::kRaw : FeatureScaling::kUnitVariance;
  cfg.features.stream = Stream::kFeatures;
  if (c.stop_mmd >= 0.0) cfg.stop_mmd = c.stop_mmd;
  cfg.trace_every = c.trace_every;
  cfg.record_timing = c.timing;
  cfg.validate();
  return cfg;
}

FeatureSpec eval_spec(const CommonOpts& c) {
  return FeatureSpec{c.eval_m, c.eval_sigma, c.seed, FeatureScaling::kUnitVariance,
                     Stream::kEvalFeatures};
}

NeuralDescentConfig neural_config(const CommonOpts& c, const NeuralOpts& n) {
  NeuralDescentConfig cfg;
  cfg.epsilon = n.eps;
  cfg.critic_updates = n.nc;
  cfg.warmup_updates = n.warmup;
  cfg.steps = n.steps;
  cfg.hidden.clear();
  for (const auto& tok : split_list(n.hidden)) {
    const double w = parse_number(tok, "--hidden");
    if (w < 1 || w != static_cast<double>(static_cast<long>(w))) {
      throw ParameterError("--hidden: widths must be positive integers");
    }
    cfg.hidden.push_back(static_cast<Eigen::Index>(w));
  }
  cfg.negative_slope = n.slope;
  cfg.adam = AdamConfig{n.lr, n.beta1, n.beta2, n.adam_eps};
  cfg.rho = n.rho;
  cfg.lambda_alm_init = n.lambda_alm;
  cfg.seed = c.seed;
  cfg.eval_features = eval_spec(c);
  cfg.trace_every = c.trace_every;
  cfg.record_timing = c.timing;
  cfg.batch_size = n.batch;
  cfg.validate();
  return cfg;
}

void write_manifest(const CLI::App& app, const std::string& experiment, const fs::path& out,
                    const std::vector<std::string>& outputs,
                    const std::vector<std::pair<std::string, std::string>>& resolved) {
  auto f = open_output(out / "manifest.ini");
  f << "# experiment: " << experiment << "\n";
  f << "# version: " << SD_VERSION << "\n";
  f << "# outputs:";
  for (const auto& o : outputs) f << ' ' << o;
  f << "\n";
  for (const auto& [k, v] : resolved) f << "# " << k << ": " << v << "\n";
  const auto* mode = app.get_option_no_throw("--mode");
  if (mode != nullptr && mode->as<std::string>() == "neural") {
    f << "# critic_init: uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer, stream net_init\n";
  }
  f << "# rerun: sobolev-descent " << experiment << " --config manifest.ini [--out DIR]\n";
  f << app.config_to_str(true, false);
  if (!f) throw IoError("cannot write manifest in " + out.string());
}

void write_trace(const fs::path& path, const DescentTrace& trace) {
  auto f = open_output(path);
  write_trace_csv(f, trace);
  if (!f) throw IoError("cannot write " + path.string());
}

/// mmd2 under a kernel that is independent of the descent's own features.
class EvalTracker {
 public:
  EvalTracker(const FeatureSpec& spec, const ParticleSet& target)
      : fm_(spec.sample(target.dim())), target_mu_(kme(fm_, target)) {}

  double mmd2_of(const ParticleSet& particles) const { return mmd2(kme(fm_, particles), target_mu_); }

  void record(long step, double t, const ParticleSet& particles) {
    rows_.push_back({step, t, mmd2_of(particles)});
  }
  void record_value(long step, double t, double value) { rows_.push_back({step, t, value}); }
  bool has(long step) const {
    return std::any_of(rows_.begin(), rows_.end(), [&](const Row& r) { return r.step == step; });
  }

  void write(const fs::path& path) const {
    auto f = open_output(path);
    f << "step,t,eval_mmd2\n";
    for (const auto& r : rows_) {
      f << r.step << ',' << format_double(r.t) << ',' << format_double(r.value) << '\n';
    }
    if (!f) throw IoError("cannot write " + path.string());
  }

 private:
  struct Row {
    long step;
    double t;
    double value;
  };
  FeatureMap fm_;
  KmeVec target_mu_;
  std::vector<Row> rows_;
};

struct RunOutcome {
  ParticleSet particles;
  DescentTrace trace;
  long final_step = 0;
  double epsilon = 0.0;
};

using StateCallback = std::function<void(long step, const ParticleSet& particles)>;

/// Runs the chosen descent variant, feeding every state to `on_state` and
/// filling `eval` at traced steps plus the final one.
RunOutcome run_variant(const CommonOpts& c, const KernelOpts& k, const NeuralOpts& n,
                       const ParticleSet& source, const ParticleSet& target, EvalTracker& eval,
                       const StateCallback& on_state) {
  if (c.mode == "kernel") {
    const auto cfg = kernel_config(c, k);
    auto observer = [&](long step, const ParticleSet& p, const StepDiagnostics&) {
      if (step % cfg.trace_every == 0) eval.record(step, static_cast<double>(step) * cfg.epsilon, p);
      if (on_state) on_state(step, p);
    };
    auto res = run_descent(source, target, cfg, observer);
    if (!eval.has(res.steps_taken)) {
      eval.record(res.steps_taken, static_cast<double>(res.steps_taken) * cfg.epsilon, res.particles);
    }
    return {std::move(res.particles), std::move(res.trace), res.steps_taken, cfg.epsilon};
  }
  const auto cfg = neural_config(c, n);
  auto observer = [&](long step, const ParticleSet& p, const TraceRow&) {
    if (on_state) on_state(step, p);
  };
  auto res = run_neural_descent(source, target, cfg, observer);
  // The neural trace already reports mmd2 under the evaluation kernel.
  for (const auto& row : res.trace.rows) eval.record_value(row.step, row.t, row.mmd2);
  const long last = res.trace.rows.empty() ? cfg.steps : res.trace.rows.back().step;
  return {std::move(res.particles), std::move(res.trace), last, cfg.epsilon};
}

// ---------------------------------------------------------------- gauss1d

int cmd_gauss1d(int argc, char** argv) {
  CommonOpts c;
  c.out = "out/gauss1d";
  c.eval_sigma = 0.3;
  KernelOpts k;  // m=128, sigma=0.3, lambda=1e-2, eps=1e-2, 3000 steps
  NeuralOpts n;
  long count = 1000;
  double source_mean = 0.2, source_std = 0.005, target_mean = 1.6, target_std = 0.1;
  std::string snapshots = "0,250,500,1000,2000,final";
  std::string kde_bandwidth = "silverman";
  double kde_min = -0.5, kde_max = 2.5;
  long kde_points = 3001;

  CLI::App app{"Transport a 1-d Gaussian sample to another one", "gauss1d"};
  configure_app(app);
  add_common(app, c);
  add_kernel(app, k);
  add_neural(app, n);
  app.add_option("--n", count, "Particles in source and target")->check(CLI::PositiveNumber);
  app.add_option("--source-mean", source_mean);
  app.add_option("--source-std", source_std);
  app.add_option("--target-mean", target_mean);
  app.add_option("--target-std", target_std);
  app.add_option("--snapshots", snapshots, "Steps with KDE snapshots (\"final\" = last state)");
  app.add_option("--kde-bandwidth", kde_bandwidth, "KDE bandwidth or \"silverman\"");
  app.add_option("--kde-min", kde_min);
  app.add_option("--kde-max", kde_max);
  app.add_option("--kde-points", kde_points)->check(CLI::Range(2L, 10000000L));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (c.mode == "kernel") kernel_config(c, k); else neural_config(c, n);
  const auto plan = parse_snapshots(snapshots);
  std::optional<double> fixed_bw;
  if (kde_bandwidth != "silverman") {
    fixed_bw = parse_number(kde_bandwidth, "--kde-bandwidth");
    if (!(*fixed_bw > 0.0)) throw ParameterError("--kde-bandwidth must be > 0");
  }
  if (!(kde_max > kde_min)) throw ParameterError("--kde-max must exceed --kde-min");

  const fs::path out = c.out;
  write_manifest(app, "gauss1d", out,
                 {"trace.csv", "eval.csv", "kde_step<N>.csv", "kde_bandwidth.csv", "final.csv"},
                 {{"kde_bandwidth_rule", fixed_bw ? "fixed" : "silverman 0.9*min(sd,IQR/1.34)*n^(-1/5)"}});

  const auto source = sample_gauss1d(source_mean, source_std, count, c.seed, Stream::kSource);
  const auto target = sample_gauss1d(target_mean, target_std, count, c.seed, Stream::kTarget);
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(kde_points, kde_min, kde_max);
  const double target_bw = fixed_bw ? *fixed_bw : silverman_bandwidth(target.points().col(0));
  const Eigen::VectorXd target_density = kde1d(target.points().col(0), target_bw, grid);

  std::vector<std::pair<long, double>> bandwidths;
  auto snapshot = [&](long step, const ParticleSet& p) {
    const Eigen::VectorXd x = p.points().col(0);
    double bw = 0.0;
    if (fixed_bw) {
      bw = *fixed_bw;
    } else {
      try {
        bw = silverman_bandwidth(x);
      } catch (const ParameterError&) {
        bw = (kde_max - kde_min) / static_cast<double>(kde_points - 1);  // collapsed sample
      }
    }
    const Eigen::VectorXd density = kde1d(x, bw, grid);
    auto f = open_output(out / ("kde_step" + std::to_string(step) + ".csv"));
    f << "x,density,target_density\n";
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      f << format_double(grid(i)) << ',' << format_double(density(i)) << ','
        << format_double(target_density(i)) << '\n';
    }
    if (!f) throw IoError("cannot write KDE snapshot");
    bandwidths.emplace_back(step, bw);
  };

  EvalTracker eval(eval_spec(c), target);
  auto on_state = [&](long step, const ParticleSet& p) {
    if (plan.steps.count(step)) snapshot(step, p);
  };
  auto res = run_variant(c, k, n, source, target, eval, on_state);
  if (plan.final && !plan.steps.count(res.final_step)) snapshot(res.final_step, res.particles);

  write_trace(out / "trace.csv", res.trace);
  eval.write(out / "eval.csv");
  write_points_csv(out / "final.csv", res.particles.points());
  auto f = open_output(out / "kde_bandwidth.csv");
  f << "step,bandwidth\n";
  f << "target," << format_double(target_bw) << '\n';
  for (const auto& [s, bw] : bandwidths) f << s << ',' << format_double(bw) << '\n';
  if (!f) throw IoError("cannot write kde_bandwidth.csv");
  return 0;
}

// ---------------------------------------------------------------- color

ImageBuffer load_image(const std::string& spec, int size) {
  const std::string prefix = "builtin:";
  if (spec.rfind(prefix, 0) == 0) return builtin_image(spec.substr(prefix.size()), size, size);
  return read_png(spec);
}

int cmd_color(int argc, char** argv) {
  CommonOpts c;
  c.out = "out/color";
  KernelOpts k;
  k.m = 300;
  k.sigma = 0.1;
  k.lambda = 1e-2;
  k.eps = 0.05;
  k.steps = 200;
  NeuralOpts n;
  n.steps = 300;
  std::string source_spec = "builtin:sunset", target_spec = "builtin:ocean";
  int size = 64;
  std::string sweep = "0.01,0.02,0.05,0.1,0.2,0.5,1";

  CLI::App app{"Color transfer: move the pixels of one image towards another's palette", "color"};
  configure_app(app);
  add_common(app, c);
  add_kernel(app, k);
  add_neural(app, n);
  app.add_option("--source", source_spec, "PNG path or builtin:NAME");
  app.add_option("--target", target_spec, "PNG path or builtin:NAME");
  app.add_option("--size", size, "Side of builtin images")->check(CLI::Range(1, 4096));
  app.add_option("--sweep-sigmas", sweep, "Bandwidths of the evaluation MMD sweep");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  if (c.mode == "kernel") kernel_config(c, k); else neural_config(c, n);
  const auto sigmas = parse_numbers(sweep, "--sweep-sigmas");
  for (double s : sigmas) {
    if (!(s > 0.0)) throw ParameterError("--sweep-sigmas: bandwidths must be > 0");
  }

  const auto source_img = load_image(source_spec, size);
  const auto target_img = load_image(target_spec, size);
  const fs::path out = c.out;
  write_manifest(app, "color", out, {"trace.csv", "eval.csv", "recolored.png", "bandwidth_sweep.csv"},
                 {{"source_resolution", std::to_string(source_img.width()) + "x" +
                                            std::to_string(source_img.height())},
                  {"target_resolution", std::to_string(target_img.width()) + "x" +
                                            std::to_string(target_img.height())}});

  const auto source = image_to_particles(source_img);
  const auto target = image_to_particles(target_img);
  EvalTracker eval(eval_spec(c), target);
  auto res = run_variant(c, k, n, source, target, eval, {});

  write_trace(out / "trace.csv", res.trace);
  eval.write(out / "eval.csv");
  write_png(out / "recolored.png",
            particles_to_image(res.particles, source_img.width(), source_img.height()));

  auto f = open_output(out / "bandwidth_sweep.csv");
  f << "sigma,initial_mmd2,final_mmd2\n";
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    FeatureSpec spec{c.eval_m, sigmas[i], c.seed + i, FeatureScaling::kUnitVariance, Stream::kSweep};
    const EvalTracker sweep_eval(spec, target);
    f << format_double(sigmas[i]) << ',' << format_double(sweep_eval.mmd2_of(source)) << ','
      << format_double(sweep_eval.mmd2_of(res.particles)) << '\n';
  }
  if (!f) throw IoError("cannot write bandwidth_sweep.csv");
  return 0;
}

// ---------------------------------------------------------------- morph

ParticleSet load_shape(const std::string& spec, int resolution, Eigen::Index count,
                       std::uint64_t seed, Stream stream) {
  const std::string prefix = "builtin:";
  if (spec.rfind(prefix, 0) == 0) {
    return shape_to_particles(builtin_shape(spec.substr(prefix.size()), resolution), count, seed, stream);
  }
  const fs::path path = spec;
  if (path.extension() == ".csv") {
    ParticleSet points(read_points_csv(path));
    if (points.dim() != 2) throw ParameterError("shape CSV " + spec + " must hold 2-d points");
    return points;
  }
  return shape_to_particles(mask_from_image(read_png(path)), count, seed, stream);
}

struct ShapeOpts {
  std::string source = "builtin:heart";
  std::string target = "builtin:star";
  long count = 1000;
  int resolution = 128;
};

void add_shapes(CLI::App& app, ShapeOpts& s) {
  app.add_option("--source", s.source, "builtin:NAME, PNG (dark = occupied) or x,y CSV");
  app.add_option("--target", s.target, "builtin:NAME, PNG (dark = occupied) or x,y CSV");
  app.add_option("--n", s.count, "Points sampled per shape")->check(CLI::PositiveNumber);
  app.add_option("--resolution", s.resolution, "Grid side of builtin shapes")->check(CLI::Range(2, 4096));
}

KernelOpts morph_kernel_defaults() {
  KernelOpts k;
  k.m = 100;
  k.sigma = 0.2;
  k.lambda = 0.01;
  k.eps = 0.01;
  k.steps = 600;
  return k;
}

int cmd_morph(int argc, char** argv) {
  CommonOpts c;
  c.out = "out/morph";
  c.eval_sigma = 0.2;
  KernelOpts k = morph_kernel_defaults();
  NeuralOpts n;
  ShapeOpts s;
  std::string snapshots = "0,100,200,400,final";
  std::string lambda_sweep_list;
  double threshold = 0.1;
  int jobs = 1;

  CLI::App app{"Morph one 2-d shape into another", "morph"};
  configure_app(app);
  add_common(app, c);
  add_kernel(app, k);
  add_neural(app, n);
  add_shapes(app, s);
  app.add_option("--snapshots", snapshots, "Steps with point-cloud snapshots (\"final\" = last state)");
  app.add_option("--lambda-sweep", lambda_sweep_list,
                 "Comma-separated lambdas; runs a kernel sweep instead of a single descent");
  app.add_option("--threshold", threshold, "Sweep threshold as a fraction of the initial mmd2");
  app.add_option("--jobs", jobs, "Threads for sweep members")->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  if (c.mode == "kernel") kernel_config(c, k); else neural_config(c, n);
  const auto plan = parse_snapshots(snapshots);
  const auto lambdas = parse_numbers(lambda_sweep_list, "--lambda-sweep");
  if (!lambdas.empty() && c.mode != "kernel") {
    throw ParameterError("--lambda-sweep needs --mode kernel");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) throw ParameterError("--threshold must be in (0, 1)");

  const auto source = load_shape(s.source, s.resolution, s.count, c.seed, Stream::kSource);
  const auto target = load_shape(s.target, s.resolution, s.count, c.seed, Stream::kTarget);
  const fs::path out = c.out;

  if (!lambdas.empty()) {
    write_manifest(app, "morph", out, {"sweep.csv", "sweep/lambda_<value>/trace.csv"}, {});
    write_points_csv(out / "source.csv", source.points());
    write_points_csv(out / "target.csv", target.points());
    auto members = lambda_sweep(source, target, kernel_config(c, k), lambdas, threshold, jobs);
    std::sort(members.begin(), members.end(),
              [](const SweepMember& a, const SweepMember& b) { return a.lambda < b.lambda; });
    auto f = open_output(out / "sweep.csv");
    f << "lambda,initial_mmd2,final_mmd2,steps_to_threshold\n";
    for (const auto& m : members) {
      f << format_double(m.lambda) << ',' << format_double(m.initial_mmd2) << ','
        << format_double(m.final_mmd2) << ','
        << (m.steps_to_threshold ? std::to_string(*m.steps_to_threshold) : std::string("inf")) << '\n';
      write_trace(out / "sweep" / ("lambda_" + format_double(m.lambda)) / "trace.csv", m.trace);
    }
    if (!f) throw IoError("cannot write sweep.csv");
    return 0;
  }

  write_manifest(app, "morph", out,
                 {"trace.csv", "eval.csv", "source.csv", "target.csv", "points_step<N>.csv"}, {});
  write_points_csv(out / "source.csv", source.points());
  write_points_csv(out / "target.csv", target.points());
  EvalTracker eval(eval_spec(c), target);
  auto on_state = [&](long step, const ParticleSet& p) {
    if (plan.steps.count(step)) {
      write_points_csv(out / ("points_step" + std::to_string(step) + ".csv"), p.points());
    }
  };
  auto res = run_variant(c, k, n, source, target, eval, on_state);
  if (plan.final && !plan.steps.count(res.final_step)) {
    write_points_csv(out / ("points_step" + std::to_string(res.final_step) + ".csv"),
                     res.particles.points());
  }
  write_trace(out / "trace.csv", res.trace);
  eval.write(out / "eval.csv");
  return 0;
}

// ---------------------------------------------------------------- principal-dirs

int cmd_principal_dirs(int argc, char** argv) {
  CommonOpts c;
  c.out = "out/principal-dirs";
  c.eval_sigma = 0.2;
  KernelOpts k = morph_kernel_defaults();
  NeuralOpts n;
  ShapeOpts s;
  long at_step = 50;
  double analysis_lambda = 0.3;
  long grid = 21;
  long directions = 6;

  CLI::App app{"Spectral report of the critic and principal transport directions at a descent step", "principal-dirs"};
  configure_app(app);
  add_common(app, c);
  add_kernel(app, k);
  add_shapes(app, s);
  app.add_option("--at-step", at_step, "Kernel descent steps before the analysis")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--analysis-lambda", analysis_lambda, "Regularization used for the report");
  app.add_option("--grid", grid, "Grid points per axis over [-1, 1]^2")->check(CLI::Range(2L, 10000L));
  app.add_option("--directions", directions, "Leading directions sampled as vector fields")
      ->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  if (c.mode != "kernel") throw ParameterError("principal-dirs supports --mode kernel only");
  if (!(analysis_lambda > 0.0)) throw ParameterError("--analysis-lambda must be > 0");
  KernelOpts run_k = k;
  run_k.steps = std::max<long>(at_step, 1);
  const auto cfg = kernel_config(c, run_k);

  const auto source = load_shape(s.source, s.resolution, s.count, c.seed, Stream::kSource);
  const auto target = load_shape(s.target, s.resolution, s.count, c.seed, Stream::kTarget);
  const fs::path out = c.out;
  write_manifest(app, "principal-dirs", out,
                 {"trace.csv", "particles.csv", "target.csv", "spectral.csv", "fields.csv"}, {});

  ParticleSet state = source;
  DescentTrace trace;
  if (at_step > 0) {
    auto res = run_descent(source, target, cfg);
    state = res.particles;
    trace = std::move(res.trace);
  } else {
    const auto fm0 = cfg.features.sample(source.dim());
    const auto d0 = diagnose(fm0, kme(fm0, target), source, cfg.lambda);
    trace.rows.push_back({0, 0.0, d0.mmd2, d0.rksd2, d0.first_variation});
  }
  write_trace(out / "trace.csv", trace);
  write_points_csv(out / "particles.csv", state.points());
  write_points_csv(out / "target.csv", target.points());

  const auto fm = cfg.features.sample(state.dim());
  const KdgeMat d = kdge(fm, state);
  const Eigen::VectorXd delta = kme(fm, target).mu - kme(fm, state).mu;
  const auto report = principal_directions(d, delta, analysis_lambda);
  {
    auto f = open_output(out / "spectral.csv");
    write_spectral_csv(f, report);
    if (!f) throw IoError("cannot write spectral.csv");
  }

  const Eigen::Index count = std::min<Eigen::Index>(directions, report.eigvals.size());
  const Eigen::VectorXd axis = Eigen::VectorXd::LinSpaced(grid, -1.0, 1.0);
  auto f = open_output(out / "fields.csv");
  f << "j,x,y,dx,dy,ux,uy\n";
  for (Eigen::Index j = 0; j < count; ++j) {
    for (Eigen::Index iy = 0; iy < grid; ++iy) {
      for (Eigen::Index ix = 0; ix < grid; ++ix) {
        const Eigen::Vector2d x(axis(ix), axis(iy));
        const Eigen::VectorXd v = jacobian(fm, x) * report.directions.col(j);
        const Eigen::VectorXd contribution = report.coefficients(j) * v;
        f << (j + 1) << ',' << format_double(x(0)) << ',' << format_double(x(1)) << ','
          << format_double(v(0)) << ',' << format_double(v(1)) << ','
          << format_double(contribution(0)) << ',' << format_double(contribution(1)) << '\n';
      }
    }
  }
  if (!f) throw IoError("cannot write fields.csv");
  return 0;
}

void usage(std::ostream& os) {
  os << "usage: sobolev-descent <gauss1d|color|morph|principal-dirs> [options]\n"
        "       sobolev-descent <subcommand> --help\n"
        "       sobolev-descent --version\n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    usage(std::cerr);
    return 2;
  }
  const std::string sub = argv[1];
  if (sub == "-h" || sub == "--help") {
    usage(std::cout);
    return 0;
  }
  if (sub == "--version") {
    std::cout << "sobolev-descent " << SD_VERSION << "\n";
    return 0;
  }
  const std::map<std::string, int (*)(int, char**)> commands{
      {"gauss1d", cmd_gauss1d},
      {"color", cmd_color},
      {"morph", cmd_morph},
      {"principal-dirs", cmd_principal_dirs},
  };
  const auto it = commands.find(sub);
  if (it == commands.end()) {
    std::cerr << "unknown subcommand '" << sub << "'\n";
    usage(std::cerr);
    return 2;
  }
  try {
    return it->second(argc - 1, argv + 1);
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace sd::cli
