#include "rnmrf/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "rnmrf/dataio.hpp"
#include "rnmrf/harness.hpp"
#include "rnmrf/inference.hpp"
#include "rnmrf/metrics.hpp"
#include "rnmrf/model_parser.hpp"
#include "rnmrf/synth.hpp"
#include "rnmrf/trainer.hpp"

namespace rnmrf {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dir_of(const std::string& path) {
  const std::string d = std::filesystem::path(path).parent_path().string();
  return d.empty() ? "." : d;
}

double cell_value(const DomainSpec& dom, const std::string& cell, const std::string& what) {
  if (dom.is_discrete()) {
    const int li = dom.label_index(cell);
    if (li < 0) throw DataError(what + ": label '" + cell + "' is not in the domain");
    return static_cast<double>(li);
  }
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() || *end != '\0')
    throw DataError(what + ": '" + cell + "' is not a number");
  return v;
}

std::string value_text(const DomainSpec& dom, double v) {
  if (dom.is_discrete()) return dom.label_of(static_cast<int>(std::lround(v)));
  return fmt(v);
}

struct LoadedProblem {
  RelationalModel model;
  RelationStore relations;
  GroundGraph graph;
  std::vector<Vec> frames;
};

LoadedProblem load_problem(const std::string& model_path, const std::string& data_path,
                           const std::vector<std::string>& fact_files) {
  LoadedProblem p;
  p.model = parse_model(read_text_file(model_path));
  p.relations = load_model_relations(p.model, dir_of(model_path));
  for (const std::string& f : fact_files) append_facts(p.relations, f);
  const FrameTable table = load_csv(data_path);
  const Universe universe = universe_from_columns(p.model, table.columns);
  p.graph = ground(p.model, universe, p.relations);
  p.frames = frames_from_table(p.graph, table, data_path);
  return p;
}

struct TrainArgs {
  std::string model, data, out, trace, params_in, estimator = "importance";
  std::vector<std::string> facts, evidence;
  int iters = 1000, samples = 20, vars_per_iter = 100, batch_frames = 1, trace_every = 100;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

int cmd_train(const TrainArgs& a) {
  LoadedProblem p = load_problem(a.model, a.data, a.facts);
  if (a.params_in.empty())
    p.model.init_params(a.seed);
  else
    load_params(p.model, a.params_in);

  TrainConfig cfg;
  cfg.iterations = a.iters;
  cfg.samples = a.samples;
  cfg.vars_per_iter = a.vars_per_iter;
  cfg.batch_frames = a.batch_frames;
  cfg.lr = a.lr;
  cfg.seed = a.seed;
  cfg.evidence_predicates = a.evidence;
  cfg.trace_every = a.trace.empty() ? 0 : a.trace_every;
  if (a.estimator == "riemann")
    cfg.estimator = TrainConfig::Estimator::Riemann;
  else if (a.estimator != "importance")
    throw UsageError("--estimator must be importance or riemann");

  const TrainResult res = train(p.model, p.graph, p.frames, cfg);
  save_params(p.model, a.out);
  if (!a.trace.empty()) {
    std::string csv = "iteration,estimated_log_pl,seconds\n";
    for (const TraceRow& row : res.trace)
      csv += std::to_string(row.iteration) + "," + fmt(row.log_pl) + "," + fmt(row.seconds) + "\n";
    write_text_file(a.trace, csv);
  }
  std::cerr << "trained " << res.iterations_run << " iterations, wrote " << a.out << "\n";
  return 0;
}

struct MapArgs {
  std::string model, params, evidence, out, image_out, image_pred = "val";
  std::vector<std::string> facts;
  int sweeps = 10, candidates = 20, anneal_sweeps = 0;
  double anneal_t0 = 5.0;
  std::uint64_t seed = 1;
};

int cmd_map(const MapArgs& a) {
  RelationalModel model = parse_model(read_text_file(a.model));
  if (!a.params.empty()) load_params(model, a.params);
  RelationStore relations = load_model_relations(model, dir_of(a.model));
  for (const std::string& f : a.facts) append_facts(relations, f);

  const FrameTable ev = load_csv(a.evidence);
  if (ev.rows.size() != 1)
    throw DataError("'" + a.evidence + "': evidence file must hold exactly one row");
  const Universe universe = universe_from_columns(model, ev.columns);
  GroundGraph g = ground(model, universe, relations);
  for (std::size_t j = 0; j < ev.columns.size(); ++j) {
    const int vi = g.var_index(ev.columns[j]);
    if (vi < 0)
      throw DataError("'" + a.evidence + "': column '" + ev.columns[j] +
                      "' matches no ground variable");
    g.set_evidence(ev.columns[j], cell_value(g.variables[vi].domain, ev.rows[0][j],
                                             "'" + a.evidence + "' column '" + ev.columns[j] + "'"));
  }

  Rng rng(substream_seed(a.seed, 0x6d6170));
  MapConfig mc;
  mc.sweeps = a.sweeps;
  mc.candidates = a.candidates;
  mc.anneal = a.anneal_sweeps > 0;
  mc.anneal_t0 = a.anneal_t0;
  mc.anneal_sweeps = a.anneal_sweeps;
  const Vec init = default_init(g, rng);
  const MapResult res = map_estimate(g, init, mc, rng);

  FrameTable out;
  for (std::size_t i = 0; i < g.variables.size(); ++i) out.columns.push_back(g.variables[i].name);
  std::vector<std::string> row;
  for (std::size_t i = 0; i < g.variables.size(); ++i)
    row.push_back(value_text(g.variables[i].domain, res.assignment[static_cast<Eigen::Index>(i)]));
  out.rows.push_back(std::move(row));
  save_csv(out, a.out);

  if (!a.image_out.empty()) {
    int rows = 0, cols = 0;
    for (const GroundVariable& v : g.variables) {
      if (model.predicates[v.predicate].name != a.image_pred) continue;
      const std::size_t us = v.args[0].find('_');
      rows = std::max(rows, std::atoi(v.args[0].c_str() + 1) + 1);
      cols = std::max(cols, std::atoi(v.args[0].c_str() + us + 1) + 1);
    }
    if (rows == 0) throw DataError("no '" + a.image_pred + "' pixel variables to write");
    Image img;
    img.rows = rows;
    img.cols = cols;
    img.pixels.setZero(rows, cols);
    for (std::size_t i = 0; i < g.variables.size(); ++i) {
      const GroundVariable& v = g.variables[i];
      if (model.predicates[v.predicate].name != a.image_pred) continue;
      const std::size_t us = v.args[0].find('_');
      img.pixels(std::atoi(v.args[0].c_str() + 1), std::atoi(v.args[0].c_str() + us + 1)) =
          res.assignment[static_cast<Eigen::Index>(i)];
    }
    save_pgm(img, a.image_out);
  }
  std::cerr << "map log-score " << fmt(res.log_score) << ", wrote " << a.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string task, models_dir = "models", data = "data/iris.csv", pred, truth;
  int iters = 0;
  std::uint64_t seed = 1;
};

int eval_direct_images(const EvalArgs& a) {
  const Image p = load_pgm(a.pred), t = load_pgm(a.truth);
  std::cout << "l1,l2\n" << fmt(image_l1(p.pixels, t.pixels)) << ","
            << fmt(image_l2(p.pixels, t.pixels)) << "\n";
  return 0;
}

int eval_direct_labels(const EvalArgs& a) {
  const FrameTable p = load_csv(a.pred), t = load_csv(a.truth);
  if (p.rows.size() != t.rows.size() || p.columns.size() != 1 || t.columns.size() != 1)
    throw DataError("label files must be single-column CSVs of equal length");
  std::vector<std::string> labels;
  auto id_of = [&](const std::string& s) {
    for (std::size_t j = 0; j < labels.size(); ++j)
      if (labels[j] == s) return static_cast<int>(j);
    labels.push_back(s);
    return static_cast<int>(labels.size()) - 1;
  };
  std::vector<int> pi, ti;
  for (const auto& row : t.rows) ti.push_back(id_of(row[0]));
  for (const auto& row : p.rows) pi.push_back(id_of(row[0]));
  std::cout << "metric,value\naccuracy," << fmt(accuracy(pi, ti)) << "\n";
  for (std::size_t c = 0; c < labels.size(); ++c)
    std::cout << "f1_" << labels[c] << "," << fmt(f1_score(pi, ti, static_cast<int>(c))) << "\n";
  std::cout << "macro_f1," << fmt(macro_f1(pi, ti, static_cast<int>(labels.size()))) << "\n";
  return 0;
}

int cmd_eval(const EvalArgs& a) {
  if (!a.pred.empty() || !a.truth.empty()) {
    if (a.pred.empty() || a.truth.empty())
      throw UsageError("--pred and --truth must be given together");
    return a.task == "denoise" ? eval_direct_images(a) : eval_direct_labels(a);
  }
  if (a.task == "denoise") {
    DenoiseOptions opt;
    if (a.iters > 0) opt.train_iters = a.iters;
    const DenoiseReport r = run_denoise(a.models_dir, opt, a.seed);
    std::cout << "l1_rnmrf,l2_rnmrf,l1_gauss,l2_gauss,l1_noisy,l2_noisy\n"
              << fmt(r.l1_rnmrf) << "," << fmt(r.l2_rnmrf) << "," << fmt(r.l1_gauss) << ","
              << fmt(r.l2_gauss) << "," << fmt(r.l1_noisy) << "," << fmt(r.l2_noisy) << "\n";
    return 0;
  }
  if (a.task == "tabular") {
    IrisOptions opt;
    if (a.iters > 0) opt.train_iters = a.iters;
    const IrisReport r = run_iris_cv(a.models_dir, a.data, opt, a.seed);
    std::cout << "accuracy,macro_f1,pw_mse\n"
              << fmt(r.accuracy) << "," << fmt(r.macro_f1) << "," << fmt(r.pw_mse) << "\n";
    return 0;
  }
  if (a.task == "segments") {
    SegmentsOptions opt;
    if (a.iters > 0) opt.train_iters = a.iters;
    const SegmentsReport r = run_segments(a.models_dir, opt, a.seed);
    std::cout << "accuracy_with_rules,accuracy_without_rules\n"
              << fmt(r.acc_with_rules) << "," << fmt(r.acc_without_rules) << "\n";
    return 0;
  }
  throw UsageError("--task must be denoise, tabular or segments");
}

// Seeded hybrid testbed: two discrete variables and one bounded continuous
// variable per item, two-layer nets on both cliques.
const char* kGradcheckModel = R"(
domain c3 discrete {a, b, c}
domain unit continuous [0, 1]
predicate u(X:item) -> c3
predicate v(X:item) -> c3
predicate w(X:item) -> unit
parfactor p1: helper=Categorical potential=NN(layers=[4, 3], clamp=[-6, 6], fm=identity) atoms=[u(X), v(X)] constraint=none
parfactor p2: helper=CG potential=NN(layers=[4, 3], clamp=[-6, 6], fm=identity) atoms=[v(X), w(X)] constraint=none
)";

struct GradcheckArgs {
  std::string model, data;
  std::vector<std::string> facts;
  double eps = 1e-5, tol = 1e-3;
  int samples = 20;
  std::uint64_t seed = 1;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  RelationalModel model;
  GroundGraph g;
  std::vector<Vec> frames;
  if (!a.model.empty()) {
    if (a.data.empty()) throw UsageError("gradcheck --model also needs --data");
    LoadedProblem p = load_problem(a.model, a.data, a.facts);
    model = std::move(p.model);
    g = std::move(p.graph);
    g.model = &model;
    frames = std::move(p.frames);
  } else {
    model = parse_model(kGradcheckModel);
    Universe u;
    u["item"] = {"i0", "i1"};
    g = ground(model, u, RelationStore{});
    Rng rng(substream_seed(a.seed, 0x6763));
    for (int m = 0; m < 3; ++m) {
      Vec f(static_cast<Eigen::Index>(g.variables.size()));
      for (std::size_t i = 0; i < g.variables.size(); ++i)
        f[static_cast<Eigen::Index>(i)] =
            g.variables[i].domain.is_discrete()
                ? static_cast<double>(rng.uniform_index(g.variables[i].domain.cardinality()))
                : rng.uniform01();
      frames.push_back(std::move(f));
    }
  }
  model.init_params(a.seed);
  // Zero-init biases leave rectifier kinks exactly at the evaluation point
  // whenever a row deactivates a whole layer; check at a generic nearby point.
  Rng jitter(substream_seed(a.seed, 0x6a6974));
  for (NeuralPotential& np : model.neural) {
    for (auto& b : np.mlp.biases)
      for (Eigen::Index i = 0; i < b.size(); ++i)
        b[i] += (jitter.uniform01() < 0.5 ? -1.0 : 1.0) * jitter.uniform(0.02, 0.1);
    ++np.mlp.version;
  }
  fit_helpers(model, g, frames);

  TrainConfig cfg;
  cfg.samples = a.samples;
  cfg.seed = a.seed;
  const GradCheckReport rep = gradient_check(model, g, frames, cfg, a.eps);
  std::cout << "params_checked,max_rel_err,worst_param,analytic,fd\n"
            << rep.params_checked << "," << fmt(rep.max_rel_err) << "," << rep.worst.param << ","
            << fmt(rep.worst.analytic) << "," << fmt(rep.worst.fd) << "\n";
  if (!rep.ok(a.tol)) {
    std::cerr << "gradient check failed: max relative error " << fmt(rep.max_rel_err)
              << " exceeds " << fmt(a.tol) << "\n";
    return 1;
  }
  return 0;
}

struct SynthArgs {
  std::string out = ".";
  int size = 16, images = 6, segments = 150;
  double noise_var = 0.3;
  std::uint64_t seed = 1;
};

int cmd_synth_denoise(const SynthArgs& a) {
  std::filesystem::create_directories(a.out);
  const auto data = synth_denoise(a.size, a.images, a.noise_var, a.seed);
  for (std::size_t m = 0; m < data.size(); ++m) {
    const std::string stem = a.out + "/img" + std::to_string(m);
    Image img;
    img.rows = a.size;
    img.cols = a.size;
    img.pixels = data[m].clean;
    save_pgm(img, stem + ".clean.pgm");
    img.pixels = data[m].noisy;
    save_pgm(img, stem + ".noisy.pgm");
  }
  std::cerr << "wrote " << data.size() << " image pairs under " << a.out << "\n";
  return 0;
}

int cmd_synth_segments(const SynthArgs& a) {
  std::filesystem::create_directories(a.out);
  const SegmentData d = synth_segments(a.segments, a.seed);
  const char* kTypeLabel[3] = {"W", "D", "O"};
  FrameTable t;
  std::vector<std::string> row;
  for (std::size_t i = 0; i < d.type.size(); ++i) {
    const std::string s = segment_name(static_cast<int>(i));
    t.columns.push_back("type(" + s + ")");
    t.columns.push_back("len(" + s + ")");
    t.columns.push_back("dep(" + s + ")");
    t.columns.push_back("ang(" + s + ")");
    row.push_back(kTypeLabel[d.type[i]]);
    row.push_back(fmt(d.length[i]));
    row.push_back(fmt(d.depth[i]));
    row.push_back(fmt(d.angle[i]));
  }
  t.rows.push_back(std::move(row));
  save_csv(t, a.out + "/segments.csv");
  save_facts(d.nb, a.out + "/nb.facts");
  std::cerr << "wrote " << d.type.size() << " segments under " << a.out << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"hybrid relational MRF toolkit"};
  app.require_subcommand(1);

  TrainArgs ta;
  CLI::App* train_cmd = app.add_subcommand("train", "fit parameters by pseudo-likelihood");
  train_cmd->add_option("--model", ta.model, "model file")->required();
  train_cmd->add_option("--data", ta.data, "frame CSV")->required();
  train_cmd->add_option("--out", ta.out, "output parameter file")->required();
  train_cmd->add_option("--iters", ta.iters, "training iterations");
  train_cmd->add_option("--samples", ta.samples, "samples per expectation");
  train_cmd->add_option("--vars-per-iter", ta.vars_per_iter, "variables per iteration");
  train_cmd->add_option("--batch-frames", ta.batch_frames, "frames per iteration");
  train_cmd->add_option("--lr", ta.lr, "learning rate");
  train_cmd->add_option("--seed", ta.seed, "random seed");
  train_cmd->add_option("--estimator", ta.estimator, "importance or riemann");
  train_cmd->add_option("--evidence", ta.evidence, "evidence predicate, repeatable");
  train_cmd->add_option("--facts", ta.facts, "extra fact file, repeatable");
  train_cmd->add_option("--trace", ta.trace, "loss trace CSV output");
  train_cmd->add_option("--trace-every", ta.trace_every, "trace interval");
  train_cmd->add_option("--params-in", ta.params_in, "warm-start parameter file");

  MapArgs ma;
  CLI::App* map_cmd = app.add_subcommand("map", "MAP assignment given evidence");
  map_cmd->add_option("--model", ma.model, "model file")->required();
  map_cmd->add_option("--evidence", ma.evidence, "evidence CSV, one row")->required();
  map_cmd->add_option("--out", ma.out, "output assignment CSV")->required();
  map_cmd->add_option("--params", ma.params, "parameter file");
  map_cmd->add_option("--facts", ma.facts, "extra fact file, repeatable");
  map_cmd->add_option("--sweeps", ma.sweeps, "ICM sweeps");
  map_cmd->add_option("--candidates", ma.candidates, "proposal draws per variable");
  map_cmd->add_option("--anneal-sweeps", ma.anneal_sweeps, "tempered warm-start sweeps");
  map_cmd->add_option("--anneal-t0", ma.anneal_t0, "warm-start temperature");
  map_cmd->add_option("--seed", ma.seed, "random seed");
  map_cmd->add_option("--image-out", ma.image_out, "also write this PGM");
  map_cmd->add_option("--image-pred", ma.image_pred, "pixel predicate for --image-out");

  EvalArgs ea;
  CLI::App* eval_cmd = app.add_subcommand("eval", "run an experiment or score predictions");
  eval_cmd->add_option("--task", ea.task, "denoise, tabular or segments")->required();
  eval_cmd->add_option("--models-dir", ea.models_dir, "directory with model files");
  eval_cmd->add_option("--data", ea.data, "dataset CSV for tabular");
  eval_cmd->add_option("--seed", ea.seed, "random seed");
  eval_cmd->add_option("--iters", ea.iters, "override training iterations");
  eval_cmd->add_option("--pred", ea.pred, "prediction file to score directly");
  eval_cmd->add_option("--truth", ea.truth, "ground-truth file to score against");

  GradcheckArgs ga;
  CLI::App* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
  grad_cmd->add_option("--model", ga.model, "model file, default built-in testbed");
  grad_cmd->add_option("--data", ga.data, "frame CSV for --model");
  grad_cmd->add_option("--facts", ga.facts, "extra fact file, repeatable");
  grad_cmd->add_option("--eps", ga.eps, "finite-difference step");
  grad_cmd->add_option("--tol", ga.tol, "max relative error accepted");
  grad_cmd->add_option("--samples", ga.samples, "samples per expectation");
  grad_cmd->add_option("--seed", ga.seed, "random seed");

  SynthArgs sa;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate synthetic datasets");
  synth_cmd->require_subcommand(1);
  CLI::App* sd = synth_cmd->add_subcommand("denoise", "piecewise-constant images plus noise");
  sd->add_option("--size", sa.size, "image side length");
  sd->add_option("--images", sa.images, "number of images");
  sd->add_option("--noise-var", sa.noise_var, "Gaussian noise variance");
  sd->add_option("--seed", sa.seed, "random seed");
  sd->add_option("--out", sa.out, "output directory");
  CLI::App* ss = synth_cmd->add_subcommand("segments", "hallway segment chain");
  ss->add_option("--segments", sa.segments, "number of segments");
  ss->add_option("--seed", sa.seed, "random seed");
  ss->add_option("--out", sa.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(ta);
    if (map_cmd->parsed()) return cmd_map(ma);
    if (eval_cmd->parsed()) return cmd_eval(ea);
    if (grad_cmd->parsed()) return cmd_gradcheck(ga);
    if (synth_cmd->parsed()) return sd->parsed() ? cmd_synth_denoise(sa) : cmd_synth_segments(sa);
  } catch (const UsageError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace rnmrf
