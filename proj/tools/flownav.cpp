// flownav: command-line front end for the obstacle detection pipeline.

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <cmath>

#include "flownav/eval.hpp"
#include "flownav/nav.hpp"
#include "flownav/sim.hpp"

namespace fs = std::filesystem;
using namespace flownav;

namespace {

// Ordered key=value list echoed into every produced file.
class Provenance {
 public:
  Provenance(std::uint64_t seed, std::string command) : seed_(seed) { add("cmd", std::move(command)); }

  void add(const std::string& key, const std::string& value) { items_.emplace_back(key, value); }
  void add(const std::string& key, double value) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, value);
    add(key, std::string(buf, r.ptr));
  }
  void add(const std::string& key, long long value) { add(key, std::to_string(value)); }
  void add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }

  std::string line() const {
    std::string params;
    for (const auto& [k, v] : items_) {
      if (!params.empty()) params += ';';
      params += k + "=" + v;
    }
    return "# flownav v1 seed=" + std::to_string(seed_) + " params=" + params;
  }

 private:
  std::uint64_t seed_;
  std::vector<std::pair<std::string, std::string>> items_;
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

Dataset read_dataset(const fs::path& path) {
  auto in = open_in(path);
  return load_dataset(in);
}

AnyModel read_model(const fs::path& path) {
  auto in = open_in(path);
  return load_model(in);
}

World read_world(const fs::path& path) {
  auto in = open_in(path);
  return load_world(in);
}

struct LkOptions {
  int window_half = LKParams{}.window_half;
  int levels = LKParams{}.pyramid_levels;
  int iters = LKParams{}.max_iters;
  double epsilon = LKParams{}.epsilon;
  double min_eig = LKParams{}.min_eig;

  void attach(CLI::App* cmd) {
    cmd->add_option("--window-half", window_half, "LK window half-width (px)")->capture_default_str();
    cmd->add_option("--levels", levels, "pyramid levels")->capture_default_str();
    cmd->add_option("--iters", iters, "LK iterations per level")->capture_default_str();
    cmd->add_option("--lk-epsilon", epsilon, "LK convergence step (px)")->capture_default_str();
    cmd->add_option("--min-eig", min_eig, "minimum structure-tensor eigenvalue")->capture_default_str();
  }

  LKParams params() const {
    LKParams p;
    p.window_half = window_half;
    p.pyramid_levels = levels;
    p.max_iters = iters;
    p.epsilon = epsilon;
    p.min_eig = min_eig;
    p.validate();
    return p;
  }

  void record(Provenance& prov) const {
    prov.add("window_half", static_cast<long long>(window_half));
    prov.add("levels", static_cast<long long>(levels));
    prov.add("iters", static_cast<long long>(iters));
    prov.add("lk_epsilon", epsilon);
    prov.add("min_eig", min_eig);
  }
};

struct SimOptions {
  double step_cm = SimConfig{}.step_cm;
  double turn_rad = SimConfig{}.turn_rad;
  double noise_amp = SimConfig{}.noise_amp;
  double cone_deg = std::round(SimConfig{}.sensor_cone * 180.0 / std::numbers::pi * 1e9) / 1e9;

  void attach(CLI::App* cmd) {
    cmd->add_option("--step-cm", step_cm, "forward travel per frame (cm)")->capture_default_str();
    cmd->add_option("--turn-rad", turn_rad, "heading change per deflection (rad)")->capture_default_str();
    cmd->add_option("--noise", noise_amp, "per-pixel noise amplitude")->capture_default_str();
    cmd->add_option("--cone-deg", cone_deg, "range sensor half-angle (deg)")->capture_default_str();
  }

  SimConfig config() const {
    SimConfig c;
    c.step_cm = step_cm;
    c.turn_rad = turn_rad;
    c.noise_amp = noise_amp;
    c.sensor_cone = cone_deg * std::numbers::pi / 180.0;
    c.validate();
    return c;
  }

  void record(Provenance& prov) const {
    prov.add("step_cm", step_cm);
    prov.add("turn_rad", turn_rad);
    prov.add("noise", noise_amp);
    prov.add("cone_deg", cone_deg);
  }
};

struct TrainOptions {
  std::string model = "svm";
  double C = SvmParams{}.C;
  double gamma = SvmParams{}.gamma;
  double epsilon = SvrParams{}.epsilon;
  int epochs = PerceptronParams{}.max_epochs;
  std::size_t max_iter = 0;
  bool balanced = true;
  bool grid = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--model", model, "svm | perceptron | svr")
        ->check(CLI::IsMember({"svm", "perceptron", "svr"}))
        ->capture_default_str();
    cmd->add_option("--C", C, "SVM/SVR box constraint")->capture_default_str();
    cmd->add_option("--gamma", gamma, "RBF kernel width")->capture_default_str();
    cmd->add_option("--epsilon", epsilon, "SVR tube half-width (cm)")->capture_default_str();
    cmd->add_option("--epochs", epochs, "perceptron epoch limit")->capture_default_str();
    cmd->add_option("--max-iter", max_iter, "SMO iteration limit, 0 for the solver default")->capture_default_str();
    cmd->add_flag("--balanced,!--no-balanced", balanced, "class-balanced weights (default on)");
    cmd->add_flag("--grid-search", grid, "choose SVM C and gamma by inner CV on training folds");
  }

  TrainerSpec spec() const {
    TrainerSpec s;
    s.kind = model == "svm" ? TrainerKind::Svm : model == "perceptron" ? TrainerKind::Perceptron : TrainerKind::Svr;
    s.svm.C = C;
    s.svm.gamma = gamma;
    s.svm.balanced = balanced;
    s.svr.C = C;
    s.svr.gamma = gamma;
    s.svr.epsilon = epsilon;
    s.svm.max_iterations = max_iter;
    s.svr.max_iterations = max_iter;
    s.perceptron.max_epochs = epochs;
    s.perceptron.balanced = balanced;
    if (grid) {
      if (s.kind != TrainerKind::Svm) throw Error(ErrorKind::InvalidArgument, "--grid-search applies to --model svm only");
      s.grid = SvmGrid{};
    }
    return s;
  }

  void record(Provenance& prov) const {
    prov.add("model", model);
    if (model != "perceptron") {
      prov.add("C", C);
      prov.add("gamma", gamma);
    }
    if (model == "svr") prov.add("epsilon", epsilon);
    if (model != "perceptron" && max_iter > 0) prov.add("max_iter", static_cast<long long>(max_iter));
    if (model == "perceptron") prov.add("epochs", static_cast<long long>(epochs));
    if (model != "svr") prov.add("balanced", balanced);
    if (model == "svm") prov.add("grid_search", grid);
  }
};

SamplePattern default_pattern(const SimConfig& cfg) { return generate_pattern(cfg.width, cfg.height); }

// ---------------------------------------------------------------------------

int cmd_gen_world(std::uint64_t seed, const std::string& kind, int obstacles, int frames, const fs::path& out_path) {
  const World w = kind == "dataset" ? dataset_world(seed, frames) : navigation_world(seed, obstacles);
  Provenance prov(seed, "gen-world");
  prov.add("kind", kind);
  if (kind == "dataset") prov.add("frames", static_cast<long long>(frames));
  else prov.add("obstacles", static_cast<long long>(obstacles));
  auto out = open_out(out_path);
  save_world(out, w, prov.line());
  std::cout << "wrote " << w.obstacles.size() << " obstacles to " << out_path.string() << '\n';
  return 0;
}

int cmd_gen_dataset(std::uint64_t seed, int worlds, int frames, double threshold, const std::vector<std::string>& world_files,
                    const std::string& frames_dir, const LkOptions& lko, const SimOptions& simo, const fs::path& out_path) {
  const SimConfig cfg = simo.config();
  const LKParams lk = lko.params();
  std::vector<RunSpec> script;
  if (world_files.empty()) {
    script = default_world_script(seed, worlds, frames, cfg);
  } else {
    for (const auto& f : world_files) script.push_back({read_world(f), frames});
  }
  Provenance prov(seed, "gen-dataset");
  prov.add("worlds", world_files.empty() ? static_cast<long long>(worlds) : static_cast<long long>(world_files.size()));
  for (const auto& f : world_files) prov.add("world", f);
  prov.add("frames", static_cast<long long>(frames));
  prov.add("threshold_cm", threshold);
  simo.record(prov);
  lko.record(prov);
  const std::string line = prov.line();

  FrameSink sink;
  if (!frames_dir.empty()) {
    sink = [&](std::size_t run, std::size_t frame, const GrayImage& img) {
      char sub[32];
      std::snprintf(sub, sizeof sub, "run_%02zu", run);
      const fs::path dir = fs::path(frames_dir) / sub;
      fs::create_directories(dir);
      write_pgm_file(dir / frame_filename(frame), img, line);
    };
  }
  const Dataset ds = generate_dataset(script, cfg, lk, default_pattern(cfg), threshold, seed, sink);
  auto out = open_out(out_path);
  save_dataset(out, ds, line);
  std::cout << "wrote " << ds.size() << " samples (" << ds.count_label(+1) << " positive) to " << out_path.string()
            << '\n';
  return 0;
}

int cmd_flow(std::uint64_t seed, const fs::path& prev, const fs::path& next, const LkOptions& lko, const fs::path& out_path) {
  const GrayImage a = read_pgm_file(prev);
  const GrayImage b = read_pgm_file(next);
  const auto pattern = generate_pattern(a.width(), a.height());
  const FlowField field = lucas_kanade(a, b, pattern, lko.params());
  Provenance prov(seed, "flow");
  prov.add("prev", prev.string());
  prov.add("next", next.string());
  lko.record(prov);
  auto out = open_out(out_path);
  out << prov.line() << '\n';
  write_flow_dump(out, field, pattern);
  return 0;
}

int cmd_train(std::uint64_t seed, const fs::path& data, const TrainOptions& to, std::size_t inner_k, const fs::path& out_path) {
  const Dataset ds = read_dataset(data);
  const TrainerSpec spec = to.spec();
  GridChoice choice;
  const AnyModel model = train_model(ds, spec, seed, inner_k, &choice);
  Provenance prov(seed, "train");
  prov.add("data", data.string());
  to.record(prov);
  if (spec.grid) {
    prov.add("inner_k", static_cast<long long>(inner_k));
    prov.add("chosen_C", choice.params.C);
    prov.add("chosen_gamma", choice.params.gamma);
  }
  auto out = open_out(out_path);
  save_model(out, model, prov.line());
  std::cout << "trained " << to.model << " on " << ds.size() << " samples";
  if (spec.grid) std::cout << " (C=" << choice.params.C << ", gamma=" << choice.params.gamma << ")";
  std::cout << '\n';
  return 0;
}

int cmd_cv(std::uint64_t seed, const fs::path& data, const TrainOptions& to, std::size_t k, unsigned jobs,
           bool stratified, const fs::path& out_path) {
  const Dataset ds = read_dataset(data);
  CvOptions opt;
  opt.k = k;
  opt.seed = seed;
  opt.jobs = jobs;
  opt.stratified = stratified;
  const CvReport report = cross_validate(ds, to.spec(), opt);
  Provenance prov(seed, "cv");
  prov.add("data", data.string());
  to.record(prov);
  prov.add("k", static_cast<long long>(k));
  prov.add("stratified", stratified);
  std::cout << prov.line() << '\n';
  write_report_table(std::cout, report);
  auto out = open_out(out_path);
  out << prov.line() << '\n';
  write_report_csv(out, report);
  return 0;
}

int cmd_predict(std::uint64_t seed, const fs::path& model_path, const fs::path& data, const fs::path& prev, const fs::path& next,
                const LkOptions& lko, const fs::path& out_path) {
  const AnyModel model = read_model(model_path);
  Provenance prov(seed, "predict");
  prov.add("model", model_path.string());
  auto value = [&](const FeatureVector& x) {
    return std::visit(
        [&](const auto& m) -> double {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, SvmModel>) return predict_svm(m, x).decision_value;
          else if constexpr (std::is_same_v<M, PerceptronModel>) return predict_perceptron(m, x).decision_value;
          else return predict_svr(m, x);
        },
        model);
  };
  const std::size_t dim = std::visit([](const auto& m) { return m.scaler.dimension(); }, model);

  if (!data.empty()) {
    const Dataset ds = read_dataset(data);
    if (ds.dimension() != dim) throw Error(ErrorKind::LengthMismatch, "dataset and model feature lengths differ");
    prov.add("data", data.string());
    auto out = open_out(out_path);
    out << prov.line() << '\n' << "index,label,value,true_label\n";
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto& s = ds.samples[i];
      const int label = predict_label(model, s.features, ds.threshold_cm);
      cm.add(s.label, label);
      out << i << ',' << (label > 0 ? "+1" : "-1") << ',' << detail::format_sig(value(s.features), 9) << ','
          << (s.label > 0 ? "+1" : "-1") << '\n';
    }
    const Metrics m = metrics_from_cm(cm);
    std::cout << "samples " << ds.size() << ", accuracy " << format_percent(m.accuracy) << ", precision "
              << format_percent(m.precision) << ", recall " << format_percent(m.recall) << '\n';
    return 0;
  }

  const GrayImage a = read_pgm_file(prev);
  const GrayImage b = read_pgm_file(next);
  const auto pattern = generate_pattern(a.width(), a.height());
  const FeatureVector x = extract_features(lucas_kanade(a, b, pattern, lko.params()));
  if (x.size() != dim) throw Error(ErrorKind::LengthMismatch, "frame pattern and model feature lengths differ");
  prov.add("prev", prev.string());
  prov.add("next", next.string());
  lko.record(prov);
  const int label = predict_label(model, x, kDefaultThresholdCm);
  auto out = open_out(out_path);
  out << prov.line() << '\n' << "label,value\n" << (label > 0 ? "+1" : "-1") << ',' << detail::format_sig(value(x), 9) << '\n';
  std::cout << (label > 0 ? "obstacle" : "clear") << '\n';
  return 0;
}

int cmd_navigate(std::uint64_t seed, const std::string& world_path, int obstacles, const std::string& model_path,
                 bool oracle, double threshold, int steps, double collision, double arena, const std::string& frames_dir,
                 const LkOptions& lko, const SimOptions& simo, const fs::path& out_path) {
  const SimConfig cfg = simo.config();
  const LKParams lk = lko.params();
  const World world = world_path.empty() ? navigation_world(seed, obstacles) : read_world(world_path);
  const auto pattern = default_pattern(cfg);

  NavOptions opt;
  opt.max_steps = steps;
  opt.collision_cm = collision;
  opt.arena_half_extent = arena;
  opt.seed = seed;

  Provenance prov(seed, "navigate");
  if (world_path.empty()) prov.add("world_seed_obstacles", static_cast<long long>(obstacles));
  else prov.add("world", world_path);
  prov.add("classifier", oracle ? std::string("oracle") : model_path);
  if (oracle) prov.add("threshold_cm", threshold);
  prov.add("steps", static_cast<long long>(steps));
  prov.add("collision_cm", collision);
  prov.add("arena_cm", arena);
  simo.record(prov);
  lko.record(prov);
  const std::string line = prov.line();

  NavFrameSink sink;
  if (!frames_dir.empty()) {
    fs::create_directories(frames_dir);
    sink = [&](int s, const GrayImage& img) {
      write_pgm_file(fs::path(frames_dir) / frame_filename(static_cast<std::size_t>(s)), img, line);
    };
  }

  NavResult result;
  if (oracle) {
    result = run_navigation(world, cfg, lk, pattern, oracle_labeller(world, cfg, threshold), opt, sink);
  } else {
    const AnyModel model = read_model(model_path);
    const auto* svm = std::get_if<SvmModel>(&model);
    if (!svm) throw Error(ErrorKind::InvalidArgument, "navigate needs an svm model");
    result = run_navigation(world, cfg, lk, pattern, *svm, opt, sink);
  }
  auto out = open_out(out_path);
  write_nav_trace_csv(out, result, line);
  std::cout << "steps " << result.summary.steps << ", deflections " << result.summary.deflections << ", collisions "
            << result.summary.collisions << (result.summary.left_arena ? ", left arena" : "") << '\n';
  return 0;
}

int cmd_bench(std::uint64_t seed, const std::string& model_path, const std::string& frames_dir, int frames, int reps,
              const LkOptions& lko, const SimOptions& simo, const fs::path& out_path) {
  const LKParams lk = lko.params();
  const AnyModel model = read_model(model_path);
  const auto* svm = std::get_if<SvmModel>(&model);
  if (!svm) throw Error(ErrorKind::InvalidArgument, "bench needs an svm model");

  std::vector<GrayImage> seq;
  if (!frames_dir.empty()) {
    seq = read_frame_sequence(frames_dir);
  } else {
    const SimConfig cfg = simo.config();
    const World w = dataset_world(seed, frames, cfg);
    CameraPose pose;
    for (int i = 0; i < frames; ++i) {
      seq.push_back(render(w, pose, cfg, frame_noise_seed(seed, 0, static_cast<std::size_t>(i))));
      pose = step(pose, NavDecision::forward(), cfg);
    }
  }
  if (seq.empty()) throw Error(ErrorKind::TooFewFrames, "no frames found");
  const auto pattern = generate_pattern(seq.front().width(), seq.front().height());
  if (svm->dimension() != 2 * pattern.size()) throw Error(ErrorKind::LengthMismatch, "model and pattern differ in length");
  const BenchReport r = bench_throughput(seq, pattern, lk, *svm, static_cast<std::size_t>(reps));

  Provenance prov(seed, "bench");
  prov.add("model", model_path);
  if (frames_dir.empty()) prov.add("frames", static_cast<long long>(frames));
  else prov.add("frames_dir", frames_dir);
  prov.add("reps", static_cast<long long>(reps));
  lko.record(prov);
  auto out = open_out(out_path);
  out << prov.line() << '\n';
  write_bench_csv(out, r);
  std::cout << prov.line() << '\n';
  write_bench_csv(std::cout, r);
  return 0;
}

int exit_code(const Error& e) {
  switch (error_category(e.kind())) {
    case ErrorCategory::Usage: return 1;
    case ErrorCategory::Data: return 2;
    case ErrorCategory::Numeric: return 3;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flownav: optical-flow obstacle detection, training, evaluation and simulation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  std::uint64_t seed = 42;
  app.add_option("--seed", seed, "seed for every random choice")->capture_default_str();

  std::string out;
  LkOptions lko;
  SimOptions simo;
  TrainOptions to;

  auto* gw = app.add_subcommand("gen-world", "write a seeded world description");
  std::string world_kind = "navigation";
  int obstacles = 3;
  int frames = 60;
  gw->add_option("--kind", world_kind, "navigation | dataset")
      ->check(CLI::IsMember({"navigation", "dataset"}))
      ->capture_default_str();
  gw->add_option("--obstacles", obstacles, "obstacles on the path (navigation worlds)")->capture_default_str()->check(CLI::PositiveNumber);
  gw->add_option("--frames", frames, "straight-run length the world is laid out for (dataset worlds)")->capture_default_str();
  gw->add_option("--out", out, "world file")->required();
  gw->add_option("--seed", seed, "seed")->capture_default_str();

  auto* gd = app.add_subcommand("gen-dataset", "render straight runs and write the labelled feature CSV");
  int worlds = 8;
  double threshold = kDefaultThresholdCm;
  std::vector<std::string> world_files;
  std::string frames_dir;
  gd->add_option("--worlds", worlds, "number of seeded worlds")->capture_default_str()->check(CLI::PositiveNumber);
  gd->add_option("--frames", frames, "frames per run")->capture_default_str()->check(CLI::Range(2, 100000));
  gd->add_option("--threshold", threshold, "obstacle distance threshold (cm)")->capture_default_str();
  gd->add_option("--world", world_files, "world file(s) to use instead of seeded worlds")->check(CLI::ExistingFile);
  gd->add_option("--frames-dir", frames_dir, "also write every rendered frame as PGM");
  gd->add_option("--out", out, "dataset CSV")->required();
  gd->add_option("--seed", seed, "seed")->capture_default_str();
  lko.attach(gd);
  simo.attach(gd);

  auto* fl = app.add_subcommand("flow", "sparse LK flow between two PGM frames");
  std::string prev, next;
  fl->add_option("--prev", prev, "earlier frame")->required()->check(CLI::ExistingFile);
  fl->add_option("--next", next, "later frame")->required()->check(CLI::ExistingFile);
  fl->add_option("--out", out, "flow dump")->required();
  lko.attach(fl);

  auto* tr = app.add_subcommand("train", "train a classifier on a dataset CSV");
  std::string data;
  std::size_t k = 8;
  tr->add_option("--data", data, "dataset CSV")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", out, "model file")->required();
  tr->add_option("--k", k, "inner folds for --grid-search")->capture_default_str();
  tr->add_option("--seed", seed, "seed")->capture_default_str();
  to.attach(tr);

  auto* cv = app.add_subcommand("cv", "k-fold cross-validation report");
  unsigned jobs = 1;
  bool stratified = true;
  std::string cv_out = "cv_report.csv";
  cv->add_option("--data", data, "dataset CSV")->required()->check(CLI::ExistingFile);
  cv->add_option("--k", k, "folds")->capture_default_str();
  cv->add_option("--jobs", jobs, "folds trained in parallel")->capture_default_str()->check(CLI::PositiveNumber);
  cv->add_flag("--stratified,!--no-stratified", stratified, "stratify folds by class (default on)");
  cv->add_option("--out", cv_out, "report CSV")->capture_default_str();
  cv->add_option("--seed", seed, "seed")->capture_default_str();
  to.attach(cv);

  auto* pr = app.add_subcommand("predict", "classify dataset rows or one frame pair");
  std::string model_path;
  pr->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
  auto* pr_data = pr->add_option("--data", data, "dataset CSV")->check(CLI::ExistingFile);
  auto* pr_prev = pr->add_option("--prev", prev, "earlier frame")->check(CLI::ExistingFile);
  auto* pr_next = pr->add_option("--next", next, "later frame")->check(CLI::ExistingFile);
  pr_data->excludes(pr_prev)->excludes(pr_next);
  pr_prev->needs(pr_next);
  pr_next->needs(pr_prev);
  pr->add_option("--out", out, "predictions CSV")->required();
  lko.attach(pr);

  auto* nv = app.add_subcommand("navigate", "closed-loop run in a simulated world");
  std::string world_path;
  bool oracle = false;
  int steps = 200;
  double collision = 10.0, arena = 500.0;
  nv->add_option("--world", world_path, "world file (default: seeded navigation world)")->check(CLI::ExistingFile);
  nv->add_option("--obstacles", obstacles, "obstacles in the seeded world")->capture_default_str()->check(CLI::PositiveNumber);
  auto* nv_model = nv->add_option("--model", model_path, "svm model file")->check(CLI::ExistingFile);
  auto* nv_oracle = nv->add_flag("--oracle", oracle, "label from the simulated range sensor instead of a model");
  nv_model->excludes(nv_oracle);
  nv->add_option("--threshold", threshold, "oracle distance threshold (cm)")->capture_default_str();
  nv->add_option("--steps", steps, "maximum cycles")->capture_default_str()->check(CLI::Range(2, 1000000));
  nv->add_option("--collision-cm", collision, "collision distance")->capture_default_str();
  nv->add_option("--arena-cm", arena, "half-width of the square arena")->capture_default_str();
  nv->add_option("--frames-dir", frames_dir, "write every rendered frame as PGM");
  nv->add_option("--out", out, "trace CSV")->required();
  nv->add_option("--seed", seed, "seed")->capture_default_str();
  lko.attach(nv);
  simo.attach(nv);

  auto* bn = app.add_subcommand("bench", "per-stage throughput of flow + features + predict");
  int reps = 3;
  bn->add_option("--model", model_path, "svm model file")->required()->check(CLI::ExistingFile);
  bn->add_option("--frames-dir", frames_dir, "directory of frame_NNNNNN.pgm (default: render a seeded run)")
      ->check(CLI::ExistingDirectory);
  bn->add_option("--frames", frames, "frames to render when no directory is given")->capture_default_str()->check(CLI::Range(2, 100000));
  bn->add_option("--reps", reps, "passes over the sequence")->capture_default_str()->check(CLI::PositiveNumber);
  bn->add_option("--out", out, "benchmark CSV")->required();
  bn->add_option("--seed", seed, "seed")->capture_default_str();
  lko.attach(bn);
  simo.attach(bn);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*gw) return cmd_gen_world(seed, world_kind, obstacles, frames, out);
    if (*gd) return cmd_gen_dataset(seed, worlds, frames, threshold, world_files, frames_dir, lko, simo, out);
    if (*fl) return cmd_flow(seed, prev, next, lko, out);
    if (*tr) return cmd_train(seed, data, to, k, out);
    if (*cv) return cmd_cv(seed, data, to, k, jobs, stratified, cv_out);
    if (*pr) {
      if (data.empty() && prev.empty()) {
        std::cerr << "predict: give --data or --prev/--next\n";
        return 1;
      }
      return cmd_predict(seed, model_path, data, prev, next, lko, out);
    }
    if (*nv) {
      if (!oracle && model_path.empty()) {
        std::cerr << "navigate: give --model or --oracle\n";
        return 1;
      }
      return cmd_navigate(seed, world_path, obstacles, model_path, oracle, threshold, steps, collision, arena, frames_dir,
                          lko, simo, out);
    }
    if (*bn) return cmd_bench(seed, model_path, frames_dir, frames, reps, lko, simo, out);
  } catch (const Error& e) {
    std::cerr << "flownav: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "flownav: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
