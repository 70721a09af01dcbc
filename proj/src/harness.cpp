#include "rnmrf/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <map>

#include "rnmrf/dataio.hpp"
#include "rnmrf/estimators.hpp"
#include "rnmrf/factors.hpp"
#include "rnmrf/inference.hpp"
#include "rnmrf/metrics.hpp"
#include "rnmrf/model_parser.hpp"
#include "rnmrf/synth.hpp"
#include "rnmrf/trainer.hpp"

namespace rnmrf {

std::vector<int> stratified_folds(const std::vector<int>& labels, int k, std::uint64_t seed) {
  if (k < 2) throw UsageError("stratified_folds requires k >= 2");
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(static_cast<int>(i));
  std::vector<int> fold(labels.size(), 0);
  Rng rng(substream_seed(seed, 0x666f6c64));
  for (auto& [cls, ids] : by_class) {
    for (std::size_t j = ids.size(); j > 1; --j)
      std::swap(ids[j - 1], ids[rng.uniform_index(j)]);
    for (std::size_t j = 0; j < ids.size(); ++j) fold[ids[j]] = static_cast<int>(j % k);
  }
  return fold;
}

namespace {

void parse_pixel(const std::string& name, int& r, int& c) {
  // p{r}_{c}, written by pixel_name.
  const std::size_t us = name.find('_');
  r = std::atoi(name.c_str() + 1);
  c = std::atoi(name.c_str() + us + 1);
}

Vec image_frame(const GroundGraph& g, const Mat& obs, const Mat& val) {
  Vec frame(static_cast<Eigen::Index>(g.variables.size()));
  for (std::size_t i = 0; i < g.variables.size(); ++i) {
    const GroundVariable& v = g.variables[i];
    int r, c;
    parse_pixel(v.args[0], r, c);
    const std::string& pred = g.model->predicates[v.predicate].name;
    frame[static_cast<Eigen::Index>(i)] = pred == "obs" ? obs(r, c) : val(r, c);
  }
  return frame;
}

Mat extract_val_image(const GroundGraph& g, ConstVecRef assignment, int size) {
  Mat out(size, size);
  for (std::size_t i = 0; i < g.variables.size(); ++i) {
    const GroundVariable& v = g.variables[i];
    if (g.model->predicates[v.predicate].name != "val") continue;
    int r, c;
    parse_pixel(v.args[0], r, c);
    out(r, c) = assignment[static_cast<Eigen::Index>(i)];
  }
  return out;
}

struct DenoiseTrained {
  RelationalModel model;
  GroundGraph graph;
};

DenoiseTrained train_denoise_model(const std::string& model_path,
                                   const std::vector<DenoisePair>& data,
                                   const DenoiseOptions& opt, std::uint64_t seed,
                                   int iterations) {
  DenoiseTrained out;
  out.model = parse_model(read_text_file(model_path));
  out.model.init_params(substream_seed(seed, 0x696e6974));
  const Universe universe = grid_universe(opt.size, opt.size, "pixel");
  const RelationStore nb = grid_neighbors(opt.size, opt.size);
  out.graph = ground(out.model, universe, nb);

  std::vector<Vec> frames;
  frames.reserve(data.size());
  for (const DenoisePair& pair : data)
    frames.push_back(image_frame(out.graph, pair.noisy, pair.clean));

  TrainConfig cfg;
  cfg.iterations = iterations;
  cfg.vars_per_iter = opt.vars_per_iter;
  cfg.samples = opt.samples;
  cfg.lr = opt.lr;
  cfg.estimator = TrainConfig::Estimator::Riemann;
  cfg.seed = substream_seed(seed, 0x747261696e);
  cfg.evidence_predicates = {"obs"};
  cfg.trace_every = 0;
  train(out.model, out.graph, frames, cfg);
  return out;
}

Mat denoise_predict(DenoiseTrained& t, const Mat& noisy, const DenoiseOptions& opt, Rng& rng) {
  t.graph.clear_evidence();
  for (std::size_t i = 0; i < t.graph.variables.size(); ++i) {
    const GroundVariable& v = t.graph.variables[i];
    if (t.graph.model->predicates[v.predicate].name != "obs") continue;
    int r, c;
    parse_pixel(v.args[0], r, c);
    t.graph.set_evidence(v.name, noisy(r, c));
  }
  // Posterior mean, not MAP: pseudo-likelihood training inflates the pair
  // coupling, so the joint mode oversmooths. The chain mean also matches
  // the squared-error metric this task is scored on.
  const Vec init = image_frame(t.graph, noisy, noisy);
  GibbsConfig gc;
  gc.sweeps = opt.gibbs_sweeps;
  gc.burn_in = opt.gibbs_burn;
  gc.proposal_samples = opt.gibbs_proposals;
  const std::vector<Vec> chain = gibbs_chain(t.graph, init, gc, rng);
  Vec mean = Vec::Zero(init.size());
  for (const Vec& s : chain) mean += s;
  mean /= static_cast<double>(chain.size());
  return extract_val_image(t.graph, mean, opt.size);
}

}  // namespace

DenoiseReport run_denoise(const std::string& models_dir, const DenoiseOptions& opt,
                          std::uint64_t seed) {
  const std::vector<DenoisePair> data =
      synth_denoise(opt.size, opt.images, opt.noise_var, substream_seed(seed, 0x64617461));

  DenoiseTrained rn = train_denoise_model(models_dir + "/denoise.model", data, opt, seed,
                                          opt.train_iters);
  DenoiseTrained gauss = train_denoise_model(models_dir + "/denoise_gaussian.model", data, opt,
                                             seed, 0);

  DenoiseReport rep;
  for (std::size_t m = 0; m < data.size(); ++m) {
    Rng rng_rn(substream_seed(seed, 0x6d6170, static_cast<std::uint64_t>(m), 1));
    Rng rng_gs(substream_seed(seed, 0x6d6170, static_cast<std::uint64_t>(m), 2));
    const Mat pred_rn = denoise_predict(rn, data[m].noisy, opt, rng_rn);
    const Mat pred_gs = denoise_predict(gauss, data[m].noisy, opt, rng_gs);
    rep.l1_rnmrf += image_l1(pred_rn, data[m].clean);
    rep.l2_rnmrf += image_l2(pred_rn, data[m].clean);
    rep.l1_gauss += image_l1(pred_gs, data[m].clean);
    rep.l2_gauss += image_l2(pred_gs, data[m].clean);
    rep.l1_noisy += image_l1(data[m].noisy, data[m].clean);
    rep.l2_noisy += image_l2(data[m].noisy, data[m].clean);
  }
  const double n = static_cast<double>(data.size());
  rep.l1_rnmrf /= n;
  rep.l2_rnmrf /= n;
  rep.l1_gauss /= n;
  rep.l2_gauss /= n;
  rep.l1_noisy /= n;
  rep.l2_noisy /= n;
  return rep;
}

namespace {

struct IrisData {
  std::vector<std::array<double, 4>> x;  // sl, sw, pl, pw
  std::vector<int> y;
};

IrisData load_iris(const std::string& csv_path, const RelationalModel& model) {
  const FrameTable table = load_csv(csv_path);
  if (table.columns.size() != 5)
    throw DataError("'" + csv_path + "': expected 5 columns, found " +
                    std::to_string(table.columns.size()));
  const DomainSpec& species = model.domains.at("species");
  IrisData d;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::array<double, 4> x{};
    for (int j = 0; j < 4; ++j) {
      char* end = nullptr;
      x[j] = std::strtod(table.rows[r][j].c_str(), &end);
      if (end == table.rows[r][j].c_str())
        throw DataError("'" + csv_path + "' record " + std::to_string(r + 1) + ": bad number");
    }
    const int li = species.label_index(table.rows[r][4]);
    if (li < 0)
      throw DataError("'" + csv_path + "' record " + std::to_string(r + 1) + ": unknown species '" +
                      table.rows[r][4] + "'");
    d.x.push_back(x);
    d.y.push_back(li);
  }
  if (d.x.empty()) throw DataError("'" + csv_path + "': no data rows");
  return d;
}

std::string flower_name(int i) { return "f" + std::to_string(i); }

const char* kIrisFeature[4] = {"sl", "sw", "pl", "pw"};

GroundGraph iris_graph(const RelationalModel& model, const std::vector<int>& ids) {
  Universe u;
  for (int id : ids) u["flower"].push_back(flower_name(id));
  return ground(model, u, RelationStore{});
}

Vec iris_frame(const GroundGraph& g, const IrisData& d, const std::vector<int>& ids) {
  Vec frame(static_cast<Eigen::Index>(g.variables.size()));
  for (int id : ids) {
    frame[g.var_index(atom_instance_name("cls", {flower_name(id)}))] = d.y[id];
    for (int j = 0; j < 4; ++j)
      frame[g.var_index(atom_instance_name(kIrisFeature[j], {flower_name(id)}))] = d.x[id][j];
  }
  return frame;
}

}  // namespace

IrisReport run_iris_cv(const std::string& models_dir, const std::string& csv_path,
                       const IrisOptions& opt, std::uint64_t seed) {
  const RelationalModel base = parse_model(read_text_file(models_dir + "/iris.model"));
  const IrisData data = load_iris(csv_path, base);
  const std::vector<int> fold = stratified_folds(data.y, opt.folds, seed);

  std::vector<int> pred_cls(data.y.size(), -1);
  Vec pred_pw(static_cast<Eigen::Index>(data.y.size()));
  Vec true_pw(static_cast<Eigen::Index>(data.y.size()));
  for (std::size_t i = 0; i < data.y.size(); ++i) true_pw[i] = data.x[i][3];

  for (int f = 0; f < opt.folds; ++f) {
    std::vector<int> train_ids, test_ids;
    for (std::size_t i = 0; i < fold.size(); ++i)
      (fold[i] == f ? test_ids : train_ids).push_back(static_cast<int>(i));
    if (test_ids.empty()) continue;

    RelationalModel model = base;
    model.init_params(substream_seed(seed, 0x696e6974, f));
    GroundGraph g = iris_graph(model, train_ids);
    const std::vector<Vec> frames = {iris_frame(g, data, train_ids)};

    TrainConfig cfg;
    cfg.iterations = opt.train_iters;
    cfg.vars_per_iter = opt.vars_per_iter;
    cfg.samples = opt.samples;
    cfg.lr = opt.lr;
    cfg.seed = substream_seed(seed, 0x747261696e, f);
    cfg.trace_every = 0;
    train(model, g, frames, cfg);

    GroundGraph gt = iris_graph(model, test_ids);
    const Vec truth = iris_frame(gt, data, test_ids);
    Vec grid, spacing;
    shifted_riemann_grid(model.domains.at("length").lower, model.domains.at("length").upper,
                         opt.grid_points, 0.5, grid, spacing);
    for (int id : test_ids) {
      const int ci = gt.var_index(atom_instance_name("cls", {flower_name(id)}));
      const Vec probs = discrete_conditional(gt, ci, truth);
      Eigen::Index arg;
      probs.maxCoeff(&arg);
      pred_cls[id] = static_cast<int>(arg);

      const int pi = gt.var_index(atom_instance_name("pw", {flower_name(id)}));
      const Vec lb = log_bi(gt, pi, truth, grid);
      lb.maxCoeff(&arg);
      pred_pw[id] = grid[arg];
    }
  }

  IrisReport rep;
  rep.accuracy = accuracy(pred_cls, data.y);
  rep.macro_f1 = macro_f1(pred_cls, data.y,
                          static_cast<int>(base.domains.at("species").labels.size()));
  rep.pw_mse = mse(pred_pw, true_pw);
  return rep;
}

namespace {

GroundGraph segments_graph(const RelationalModel& model, const SegmentData& d) {
  Universe u;
  for (std::size_t i = 0; i < d.type.size(); ++i)
    u["segment"].push_back(segment_name(static_cast<int>(i)));
  return ground(model, u, d.nb);
}

Vec segments_frame(const GroundGraph& g, const SegmentData& d) {
  Vec frame(static_cast<Eigen::Index>(g.variables.size()));
  for (std::size_t i = 0; i < d.type.size(); ++i) {
    const std::string s = segment_name(static_cast<int>(i));
    frame[g.var_index(atom_instance_name("type", {s}))] = d.type[i];
    frame[g.var_index(atom_instance_name("len", {s}))] = d.length[i];
    frame[g.var_index(atom_instance_name("dep", {s}))] = d.depth[i];
    frame[g.var_index(atom_instance_name("ang", {s}))] = d.angle[i];
  }
  return frame;
}

double segments_accuracy(const std::string& model_path, const SegmentData& train_data,
                         const SegmentData& test_data, const SegmentsOptions& opt,
                         std::uint64_t seed) {
  RelationalModel model = parse_model(read_text_file(model_path));
  model.init_params(substream_seed(seed, 0x696e6974));
  GroundGraph g = segments_graph(model, train_data);
  const std::vector<Vec> frames = {segments_frame(g, train_data)};

  TrainConfig cfg;
  cfg.iterations = opt.train_iters;
  cfg.vars_per_iter = opt.vars_per_iter;
  cfg.samples = opt.samples;
  cfg.lr = opt.lr;
  cfg.seed = substream_seed(seed, 0x747261696e);
  cfg.evidence_predicates = {"len", "dep", "ang"};
  cfg.trace_every = 0;
  train(model, g, frames, cfg);

  GroundGraph gt = segments_graph(model, test_data);
  const int n = static_cast<int>(test_data.type.size());
  for (int i = 0; i < n; ++i) {
    const std::string s = segment_name(i);
    gt.set_evidence(atom_instance_name("len", {s}), test_data.length[i]);
    gt.set_evidence(atom_instance_name("dep", {s}), test_data.depth[i]);
    gt.set_evidence(atom_instance_name("ang", {s}), test_data.angle[i]);
  }
  Rng rng(substream_seed(seed, 0x6d6170));
  MapConfig mc;
  mc.sweeps = opt.map_sweeps;
  const Vec init = default_init(gt, rng);
  const MapResult res = map_estimate(gt, init, mc, rng);

  std::vector<int> pred(n), truth(n);
  for (int i = 0; i < n; ++i) {
    const int vi = gt.var_index(atom_instance_name("type", {segment_name(i)}));
    pred[i] = static_cast<int>(std::lround(res.assignment[vi]));
    truth[i] = test_data.type[i];
  }
  return accuracy(pred, truth);
}

}  // namespace

SegmentsReport run_segments(const std::string& models_dir, const SegmentsOptions& opt,
                            std::uint64_t seed) {
  const SegmentData train_data = synth_segments(opt.train_segments, substream_seed(seed, 1));
  const SegmentData test_data = synth_segments(opt.test_segments, substream_seed(seed, 2));
  SegmentsReport rep;
  rep.acc_with_rules = segments_accuracy(models_dir + "/segments.model", train_data, test_data,
                                         opt, seed);
  rep.acc_without_rules = segments_accuracy(models_dir + "/segments_nomln.model", train_data,
                                            test_data, opt, seed);
  return rep;
}

}  // namespace rnmrf
