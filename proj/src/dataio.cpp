#include "rnmrf/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace rnmrf {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void data_fail(const std::string& path, const std::string& msg) {
  throw DataError("'" + path + "': " + msg);
}

[[noreturn]] void record_fail(const std::string& path, int record, const std::string& msg) {
  throw DataError("'" + path + "' record " + std::to_string(record) + ": " + msg);
}

double parse_double(const std::string& text, const std::string& path, int record) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || static_cast<std::size_t>(end - begin) != text.size())
    record_fail(path, record, "'" + text + "' is not a number");
  return v;
}

std::string strip(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Splits on `sep` at parenthesis depth zero so atom names like pair(a,b)
// survive as single cells.
std::vector<std::string> split_depth0(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char ch : line) {
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (ch == sep && depth == 0) {
      out.push_back(strip(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(strip(cur));
  return out;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) data_fail(path, "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) data_fail(path, "cannot open file for writing");
  out << text;
  if (!out) data_fail(path, "write failed");
}

void append_facts(RelationStore& store, const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    if (strip(raw).empty()) continue;
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : raw) {
      if (ch == '\t') {
        cells.push_back(strip(cur));
        cur.clear();
      } else {
        cur += ch;
      }
    }
    cells.push_back(strip(cur));
    while (!cells.empty() && cells.back().empty()) cells.pop_back();
    if (cells.size() < 2) record_fail(path, line_no, "expected relname<TAB>inst1[<TAB>inst2...]");
    for (const std::string& cell : cells)
      if (cell.empty()) record_fail(path, line_no, "empty field");
    store.add(cells[0], {cells.begin() + 1, cells.end()});
  }
}

RelationStore load_facts(const std::string& path) {
  RelationStore store;
  append_facts(store, path);
  return store;
}

void save_facts(const RelationStore& store, const std::string& path) {
  std::string out;
  for (const auto& [rel, tuples] : store.tuples)
    for (const auto& tup : tuples) {
      out += rel;
      for (const std::string& inst : tup) out += '\t' + inst;
      out += '\n';
    }
  write_text_file(path, out);
}

RelationStore load_model_relations(const RelationalModel& model, const std::string& base_dir) {
  RelationStore store;
  for (const auto& [rel, file] : model.relation_files) {
    std::filesystem::path p(file);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    append_facts(store, p.string());
  }
  (void)model;
  return store;
}

void parse_atom_name(const std::string& text, std::string& pred, std::vector<std::string>& args) {
  const std::size_t open = text.find('(');
  if (open == std::string::npos || text.back() != ')')
    throw DataError("'" + text + "' is not of the form pred(inst1,...)");
  pred = strip(text.substr(0, open));
  args.clear();
  for (const std::string& a : split_depth0(text.substr(open + 1, text.size() - open - 2), ','))
    args.push_back(a);
  if (pred.empty()) throw DataError("'" + text + "' has an empty predicate name");
  for (const std::string& a : args)
    if (a.empty()) throw DataError("'" + text + "' has an empty argument");
}

FrameTable load_csv(const std::string& path) {
  FrameTable table;
  std::istringstream in(read_text_file(path));
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (strip(raw).empty()) continue;
    std::vector<std::string> cells = split_depth0(raw, ',');
    if (table.columns.empty()) {
      table.columns = std::move(cells);
      continue;
    }
    if (cells.size() != table.columns.size())
      record_fail(path, line_no, "expected " + std::to_string(table.columns.size()) +
                                     " cells, found " + std::to_string(cells.size()));
    table.rows.push_back(std::move(cells));
  }
  if (table.columns.empty()) data_fail(path, "missing header row");
  return table;
}

void save_csv(const FrameTable& table, const std::string& path) {
  std::string out;
  for (std::size_t j = 0; j < table.columns.size(); ++j)
    out += (j ? "," : "") + table.columns[j];
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out += (j ? "," : "") + row[j];
    out += '\n';
  }
  write_text_file(path, out);
}

Universe universe_from_columns(const RelationalModel& model,
                               const std::vector<std::string>& columns) {
  std::map<std::string, std::set<std::string>> pops;
  for (const std::string& col : columns) {
    std::string pred;
    std::vector<std::string> args;
    parse_atom_name(col, pred, args);
    const int pi = model.predicate_index(pred);
    if (pi < 0) throw DataError("column '" + col + "' uses undeclared predicate '" + pred + "'");
    const Predicate& p = model.predicates[pi];
    if (static_cast<int>(args.size()) != p.arity())
      throw DataError("column '" + col + "' has arity " + std::to_string(args.size()) +
                      ", predicate '" + pred + "' expects " + std::to_string(p.arity()));
    for (std::size_t j = 0; j < args.size(); ++j) pops[p.arg_pops[j]].insert(args[j]);
  }
  Universe u;
  for (auto& [pop, insts] : pops) u[pop] = {insts.begin(), insts.end()};
  return u;
}

std::vector<Vec> frames_from_table(const GroundGraph& g, const FrameTable& table,
                                   const std::string& context) {
  std::vector<int> col_var(table.columns.size(), -1);
  std::vector<bool> covered(g.variables.size(), false);
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    const int vi = g.var_index(table.columns[j]);
    if (vi < 0)
      throw DataError(context + ": column '" + table.columns[j] +
                      "' matches no ground variable");
    if (covered[vi])
      throw DataError(context + ": column '" + table.columns[j] + "' appears twice");
    col_var[j] = vi;
    covered[vi] = true;
  }
  for (std::size_t i = 0; i < covered.size(); ++i)
    if (!covered[i])
      throw DataError(context + ": no column for ground variable '" + g.variables[i].name + "'");

  std::vector<Vec> frames;
  frames.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    Vec frame(static_cast<Eigen::Index>(g.variables.size()));
    for (std::size_t j = 0; j < col_var.size(); ++j) {
      const GroundVariable& v = g.variables[col_var[j]];
      const std::string& cell = table.rows[r][j];
      double value;
      if (v.domain.is_discrete()) {
        const int li = v.domain.label_index(cell);
        if (li < 0)
          throw DataError(context + " record " + std::to_string(r + 1) + ": label '" + cell +
                          "' is not in the domain of '" + v.name + "'");
        value = static_cast<double>(li);
      } else {
        value = parse_double(cell, context, static_cast<int>(r + 1));
        if (!v.domain.contains(value))
          throw DataError(context + " record " + std::to_string(r + 1) + ": value " + cell +
                          " is outside the domain of '" + v.name + "'");
      }
      frame[col_var[j]] = value;
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

namespace {

// PNM token reader: skips whitespace and '#' comments.
std::string pnm_token(std::istream& in, const std::string& path) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok += static_cast<char>(ch);
  }
  if (tok.empty()) data_fail(path, "truncated PGM header");
  return tok;
}

int pnm_int(std::istream& in, const std::string& path) {
  const std::string tok = pnm_token(in, path);
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (*end != '\0' || v < 0) data_fail(path, "bad PGM header field '" + tok + "'");
  return static_cast<int>(v);
}

}  // namespace

Image load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) data_fail(path, "cannot open file");
  const std::string magic = pnm_token(in, path);
  if (magic != "P5" && magic != "P2") data_fail(path, "not a PGM file (magic '" + magic + "')");
  Image img;
  img.cols = pnm_int(in, path);
  img.rows = pnm_int(in, path);
  const int maxval = pnm_int(in, path);
  if (img.cols < 1 || img.rows < 1 || maxval < 1 || maxval > 65535)
    data_fail(path, "bad PGM dimensions");
  img.pixels.resize(img.rows, img.cols);
  if (magic == "P2") {
    for (int r = 0; r < img.rows; ++r)
      for (int c = 0; c < img.cols; ++c)
        img.pixels(r, c) = static_cast<double>(pnm_int(in, path)) / maxval;
    return img;
  }
  // P5: the header ends with exactly one whitespace byte, already consumed by
  // pnm_token's terminating isspace.
  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raster(static_cast<std::size_t>(img.rows) * img.cols * bytes);
  in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (static_cast<std::size_t>(in.gcount()) != raster.size()) data_fail(path, "truncated raster");
  std::size_t k = 0;
  for (int r = 0; r < img.rows; ++r)
    for (int c = 0; c < img.cols; ++c) {
      int v = raster[k++];
      if (bytes == 2) v = (v << 8) | raster[k++];
      img.pixels(r, c) = static_cast<double>(v) / maxval;
    }
  return img;
}

void save_pgm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) data_fail(path, "cannot open file for writing");
  out << "P5\n" << img.cols << " " << img.rows << "\n255\n";
  for (int r = 0; r < img.rows; ++r)
    for (int c = 0; c < img.cols; ++c) {
      const double v = std::min(1.0, std::max(0.0, img.pixels(r, c)));
      out.put(static_cast<char>(static_cast<int>(std::lround(v * 255.0))));
    }
  if (!out) data_fail(path, "write failed");
}

std::vector<ImagePair> find_image_pairs(const std::string& dir) {
  const std::string noisy_suffix = ".noisy.pgm";
  const std::string clean_suffix = ".clean.pgm";
  std::map<std::string, ImagePair> pairs;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    auto ends_with = [&](const std::string& suf) {
      return name.size() > suf.size() && name.compare(name.size() - suf.size(), suf.size(), suf) == 0;
    };
    if (ends_with(noisy_suffix)) {
      const std::string stem = name.substr(0, name.size() - noisy_suffix.size());
      pairs[stem].stem = stem;
      pairs[stem].noisy_path = entry.path().string();
    } else if (ends_with(clean_suffix)) {
      const std::string stem = name.substr(0, name.size() - clean_suffix.size());
      pairs[stem].stem = stem;
      pairs[stem].clean_path = entry.path().string();
    }
  }
  if (ec) data_fail(dir, "cannot list directory");
  std::vector<ImagePair> out;
  for (auto& [stem, pair] : pairs)
    if (!pair.noisy_path.empty() && !pair.clean_path.empty()) out.push_back(pair);
  return out;
}

std::string pixel_name(int r, int c) {
  return "p" + std::to_string(r) + "_" + std::to_string(c);
}

Universe grid_universe(int rows, int cols, const std::string& population) {
  Universe u;
  std::vector<std::string>& pool = u[population];
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) pool.push_back(pixel_name(r, c));
  return u;
}

RelationStore grid_neighbors(int rows, int cols) {
  RelationStore store;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) store.add("nb", {pixel_name(r, c), pixel_name(r, c + 1)});
      if (r + 1 < rows) store.add("nb", {pixel_name(r, c), pixel_name(r + 1, c)});
    }
  return store;
}

namespace {

void put_vec(std::string& out, ConstVecRef v) {
  for (Eigen::Index j = 0; j < v.size(); ++j) out += (j ? " " : "") + fmt_double(v[j]);
  out += '\n';
}

void put_mat(std::string& out, const Mat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) put_vec(out, m.row(r).transpose());
}

struct TokenReader {
  std::istringstream in;
  std::string path;
  explicit TokenReader(const std::string& text, std::string p) : in(text), path(std::move(p)) {}

  std::string word() {
    std::string tok;
    if (!(in >> tok)) data_fail(path, "truncated parameter file");
    return tok;
  }
  void keyword(const std::string& expect) {
    const std::string tok = word();
    if (tok != expect) data_fail(path, "expected '" + expect + "', found '" + tok + "'");
  }
  double num() {
    const std::string tok = word();
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (*end != '\0') data_fail(path, "'" + tok + "' is not a number");
    return v;
  }
  int integer() {
    const double v = num();
    if (v != std::floor(v)) data_fail(path, "expected an integer");
    return static_cast<int>(v);
  }
  Vec vec(Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index j = 0; j < n; ++j) v[j] = num();
    return v;
  }
  Mat mat(Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = num();
    return m;
  }
};

}  // namespace

void save_params(const RelationalModel& model, const std::string& path) {
  std::string out = "rnmrf-params v1\n";
  out += "neural " + std::to_string(model.neural.size()) + "\n";
  for (std::size_t i = 0; i < model.neural.size(); ++i) {
    const Mlp& mlp = model.neural[i].mlp;
    out += "net " + std::to_string(i) + " layers " + std::to_string(mlp.weights.size()) + "\n";
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
      out += "W " + std::to_string(l) + " " + std::to_string(mlp.weights[l].rows()) + " " +
             std::to_string(mlp.weights[l].cols()) + "\n";
      put_mat(out, mlp.weights[l]);
      out += "b " + std::to_string(l) + " " + std::to_string(mlp.biases[l].size()) + "\n";
      put_vec(out, mlp.biases[l]);
    }
  }
  out += "mln " + std::to_string(model.mlns.size()) + "\n";
  for (std::size_t i = 0; i < model.mlns.size(); ++i)
    out += "w " + std::to_string(i) + " " + fmt_double(model.mlns[i].weight) + "\n";
  out += "helper " + std::to_string(model.helpers.size()) + "\n";
  for (std::size_t i = 0; i < model.helpers.size(); ++i) {
    const HelperDistribution& h = model.helpers[i];
    out += "h " + std::to_string(i) + " " + helper_family_name(h.family) + " fitted " +
           (h.fitted ? "1" : "0") + "\n";
    if (!h.fitted) continue;
    switch (h.family) {
      case HelperFamily::Uniform:
        break;
      case HelperFamily::Gaussian:
        out += "mean " + std::to_string(h.mean.size()) + "\n";
        put_vec(out, h.mean);
        out += "cov\n";
        put_mat(out, h.cov);
        break;
      case HelperFamily::LinearGaussian:
        out += "lg " + fmt_double(h.lg_slope) + " " + fmt_double(h.lg_intercept) + " " +
               fmt_double(h.lg_var) + "\n";
        break;
      case HelperFamily::Categorical:
        out += "cat " + std::to_string(h.cat_log_prob.size()) + "\n";
        put_vec(out, h.cat_log_prob);
        break;
      case HelperFamily::CategoricalGaussian:
        out += "cg " + std::to_string(h.cg_log_w.size()) + " " +
               std::to_string(h.cg_mean.empty() ? 0 : h.cg_mean[0].size()) + "\n";
        put_vec(out, h.cg_log_w);
        for (std::size_t k = 0; k < h.cg_mean.size(); ++k) {
          put_vec(out, h.cg_mean[k]);
          put_mat(out, h.cg_cov[k]);
        }
        break;
    }
  }
  write_text_file(path, out);
}

void load_params(RelationalModel& model, const std::string& path) {
  TokenReader t(read_text_file(path), path);
  t.keyword("rnmrf-params");
  t.keyword("v1");

  t.keyword("neural");
  if (t.integer() != static_cast<int>(model.neural.size()))
    data_fail(path, "neural potential count does not match the model");
  for (std::size_t i = 0; i < model.neural.size(); ++i) {
    Mlp& mlp = model.neural[i].mlp;
    t.keyword("net");
    if (t.integer() != static_cast<int>(i)) data_fail(path, "out-of-order net block");
    t.keyword("layers");
    if (t.integer() != static_cast<int>(mlp.weights.size()))
      data_fail(path, "net " + std::to_string(i) + " layer count does not match the model");
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
      t.keyword("W");
      if (t.integer() != static_cast<int>(l)) data_fail(path, "out-of-order layer block");
      const int rows = t.integer(), cols = t.integer();
      if (rows != mlp.weights[l].rows() || cols != mlp.weights[l].cols())
        data_fail(path, "net " + std::to_string(i) + " layer " + std::to_string(l) +
                            " shape does not match the model");
      mlp.weights[l] = t.mat(rows, cols);
      t.keyword("b");
      if (t.integer() != static_cast<int>(l)) data_fail(path, "out-of-order bias block");
      if (t.integer() != mlp.biases[l].size())
        data_fail(path, "net " + std::to_string(i) + " bias " + std::to_string(l) +
                            " size does not match the model");
      mlp.biases[l] = t.vec(mlp.biases[l].size());
    }
    mlp.version += 1;
  }

  t.keyword("mln");
  if (t.integer() != static_cast<int>(model.mlns.size()))
    data_fail(path, "MLN weight count does not match the model");
  for (std::size_t i = 0; i < model.mlns.size(); ++i) {
    t.keyword("w");
    if (t.integer() != static_cast<int>(i)) data_fail(path, "out-of-order MLN weight");
    model.mlns[i].weight = t.num();
  }

  t.keyword("helper");
  if (t.integer() != static_cast<int>(model.helpers.size()))
    data_fail(path, "helper count does not match the model");
  for (std::size_t i = 0; i < model.helpers.size(); ++i) {
    HelperDistribution& h = model.helpers[i];
    t.keyword("h");
    if (t.integer() != static_cast<int>(i)) data_fail(path, "out-of-order helper block");
    if (t.word() != helper_family_name(h.family))
      data_fail(path, "helper " + std::to_string(i) + " family does not match the model");
    t.keyword("fitted");
    h.fitted = t.integer() != 0;
    if (!h.fitted) continue;
    switch (h.family) {
      case HelperFamily::Uniform:
        break;
      case HelperFamily::Gaussian: {
        t.keyword("mean");
        const int n = t.integer();
        if (n != h.arity()) data_fail(path, "helper " + std::to_string(i) + " dimension mismatch");
        h.mean = t.vec(n);
        t.keyword("cov");
        h.cov = t.mat(n, n);
        break;
      }
      case HelperFamily::LinearGaussian:
        t.keyword("lg");
        h.lg_slope = t.num();
        h.lg_intercept = t.num();
        h.lg_var = t.num();
        break;
      case HelperFamily::Categorical: {
        t.keyword("cat");
        const int n = t.integer();
        if (n != h.joint_discrete_count())
          data_fail(path, "helper " + std::to_string(i) + " table size mismatch");
        h.cat_log_prob = t.vec(n);
        break;
      }
      case HelperFamily::CategoricalGaussian: {
        t.keyword("cg");
        const int k = t.integer();
        const int d = t.integer();
        if (k != h.joint_discrete_count() ||
            d != static_cast<int>(h.continuous_slots().size()))
          data_fail(path, "helper " + std::to_string(i) + " table size mismatch");
        h.cg_log_w = t.vec(k);
        h.cg_mean.assign(k, Vec());
        h.cg_cov.assign(k, Mat());
        for (int j = 0; j < k; ++j) {
          h.cg_mean[j] = t.vec(d);
          h.cg_cov[j] = t.mat(d, d);
        }
        break;
      }
    }
    h.validate("helper " + std::to_string(i));
  }
}

}  // namespace rnmrf
