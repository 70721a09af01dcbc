#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "rnmrf/dataio.hpp"
#include "rnmrf/metrics.hpp"
#include "rnmrf/model_parser.hpp"
#include "rnmrf/trainer.hpp"
#include "test_util.hpp"

using namespace rnmrf;
using test::src_path;

namespace {

// Fresh scratch directory per test case, removed on destruction.
struct TmpDir {
  std::filesystem::path dir;

  explicit TmpDir(const std::string& tag) {
    dir = std::filesystem::temp_directory_path() / ("rnmrf_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
  }
  ~TmpDir() { std::filesystem::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

const char* kMixedModel = R"__(
domain unit continuous [0, 1]
domain bin discrete {f, t}
predicate y(I:item) -> unit
predicate x(I:item) -> bin
parfactor p: helper=CG potential=NN(layers=[3], clamp=[-2, 2], fm=identity) atoms=[x(I), y(I)] constraint=none
)__";

}  // namespace

TEST_CASE("missing files raise data errors") {
  CHECK_THROWS_AS(read_text_file("/nonexistent/nope.txt"), DataError);
  CHECK_THROWS_AS(load_csv("/nonexistent/nope.csv"), DataError);
  CHECK_THROWS_AS(load_facts("/nonexistent/nope.facts"), DataError);
  CHECK_THROWS_AS(load_pgm("/nonexistent/nope.pgm"), DataError);
}

TEST_CASE("fact files round trip through a canonical form") {
  TmpDir tmp("facts");
  write_text_file(tmp.path("in.facts"),
                  "# neighbors\nnb\tb\tc\n\nnb\ta\tb\nco\ta\tb\tc\n");
  const RelationStore store = load_facts(tmp.path("in.facts"));
  CHECK(store.contains("nb", {"a", "b"}));
  CHECK(store.contains("nb", {"b", "c"}));
  CHECK_FALSE(store.contains("nb", {"b", "a"}));
  CHECK(store.contains("co", {"a", "b", "c"}));

  save_facts(store, tmp.path("out1.facts"));
  const RelationStore again = load_facts(tmp.path("out1.facts"));
  save_facts(again, tmp.path("out2.facts"));
  CHECK(read_text_file(tmp.path("out1.facts")) == read_text_file(tmp.path("out2.facts")));
}

TEST_CASE("atom names split into predicate and arguments") {
  std::string pred;
  std::vector<std::string> args;
  parse_atom_name("nb(p0_1, p1_1)", pred, args);
  CHECK(pred == "nb");
  REQUIRE(args.size() == 2);
  CHECK(args[0] == "p0_1");
  CHECK(args[1] == "p1_1");

  parse_atom_name("x(a)", pred, args);
  CHECK(pred == "x");
  CHECK(args == std::vector<std::string>{"a"});

  CHECK_THROWS_AS(parse_atom_name("no_parens", pred, args), DataError);
}

TEST_CASE("frame tables map columns onto graph variables exactly") {
  TmpDir tmp("frames");
  write_text_file(tmp.path("d.csv"),
                  "x(a),y(a),x(b),y(b)\n"
                  "f,0.25,t,0.75\n"
                  "t,0.5,t,1\n"
                  "f,0,f,0.125\n");
  RelationalModel model = parse_model(kMixedModel);
  const FrameTable table = load_csv(tmp.path("d.csv"));
  REQUIRE(table.columns.size() == 4);
  REQUIRE(table.rows.size() == 3);

  const Universe u = universe_from_columns(model, table.columns);
  CHECK(u.at("item") == std::vector<std::string>{"a", "b"});

  const GroundGraph g = ground(model, u, {});
  const std::vector<Vec> frames = frames_from_table(g, table, "d.csv");
  REQUIRE(frames.size() == 3);
  CHECK(frames[0][g.var_index("x(a)")] == 0.0);
  CHECK(frames[0][g.var_index("x(b)")] == 1.0);
  CHECK(frames[1][g.var_index("y(a)")] == 0.5);
  CHECK(frames[2][g.var_index("y(b)")] == 0.125);

  // A column for a variable the graph does not know is rejected.
  FrameTable extra = table;
  extra.columns.push_back("y(zz)");
  for (auto& r : extra.rows) r.push_back("0.5");
  CHECK_THROWS_AS(frames_from_table(g, extra, "d.csv"), DataError);

  // A missing column leaves a variable uncovered.
  FrameTable missing = table;
  missing.columns.pop_back();
  for (auto& r : missing.rows) r.pop_back();
  CHECK_THROWS_AS(frames_from_table(g, missing, "d.csv"), DataError);

  // Labels must belong to the domain, numbers to the interval.
  FrameTable bad = table;
  bad.rows[0][0] = "q";
  CHECK_THROWS_AS(frames_from_table(g, bad, "d.csv"), DataError);
  bad = table;
  bad.rows[0][1] = "7.5";
  CHECK_THROWS_AS(frames_from_table(g, bad, "d.csv"), DataError);
}

TEST_CASE("csv save and load are inverse") {
  TmpDir tmp("csv");
  FrameTable t;
  t.columns = {"x(a)", "y(a)"};
  t.rows = {{"f", "0.25"}, {"t", "0.5"}};
  save_csv(t, tmp.path("t.csv"));
  const FrameTable back = load_csv(tmp.path("t.csv"));
  CHECK(back.columns == t.columns);
  CHECK(back.rows == t.rows);

  // Ragged rows are rejected.
  write_text_file(tmp.path("bad.csv"), "a,b\n1\n");
  CHECK_THROWS_AS(load_csv(tmp.path("bad.csv")), DataError);
}

TEST_CASE("pgm images round trip and rescale by maxval") {
  TmpDir tmp("pgm");
  Image img;
  img.rows = 2;
  img.cols = 3;
  img.pixels.resize(2, 3);
  img.pixels << 0.0, 0.5, 1.0, 0.25, 0.75, 1.0;
  save_pgm(img, tmp.path("a.pgm"));
  const Image back = load_pgm(tmp.path("a.pgm"));
  CHECK(back.rows == 2);
  CHECK(back.cols == 3);
  CHECK(back.pixels(0, 0) == 0.0);
  CHECK(back.pixels(0, 2) == 1.0);
  CHECK(back.pixels(0, 1) == doctest::Approx(0.5).epsilon(1.0 / 255));

  // ASCII P2 with comments and a small maxval.
  write_text_file(tmp.path("b.pgm"), "P2\n# comment\n2 2\n4\n0 1\n2 4\n");
  const Image ascii = load_pgm(tmp.path("b.pgm"));
  CHECK(ascii.pixels(0, 1) == doctest::Approx(0.25));
  CHECK(ascii.pixels(1, 1) == 1.0);

  write_text_file(tmp.path("c.pgm"), "P5\n2 2\n255\nab");
  CHECK_THROWS_AS(load_pgm(tmp.path("c.pgm")), DataError);

  CHECK(image_l1(img.pixels, img.pixels) == 0.0);
}

TEST_CASE("image pair discovery needs both halves") {
  TmpDir tmp("pairs");
  Image img;
  img.rows = img.cols = 1;
  img.pixels = Mat::Zero(1, 1);
  save_pgm(img, tmp.path("im2.noisy.pgm"));
  save_pgm(img, tmp.path("im2.clean.pgm"));
  save_pgm(img, tmp.path("im1.noisy.pgm"));
  save_pgm(img, tmp.path("im1.clean.pgm"));
  save_pgm(img, tmp.path("orphan.noisy.pgm"));
  const std::vector<ImagePair> pairs = find_image_pairs(tmp.dir.string());
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].stem == "im1");
  CHECK(pairs[1].stem == "im2");
}

TEST_CASE("grid helpers name pixels row major and wire each edge once") {
  CHECK(pixel_name(2, 7) == "p2_7");
  const Universe u = grid_universe(2, 2, "pixel");
  CHECK(u.at("pixel").size() == 4);
  const RelationStore nb = grid_neighbors(3, 3);
  int edges = 0;
  for (const auto& [rel, tuples] : nb.tuples) edges += static_cast<int>(tuples.size());
  CHECK(edges == 12);
  CHECK(nb.contains("nb", {"p0_0", "p0_1"}));
  CHECK(nb.contains("nb", {"p0_0", "p1_0"}));
  CHECK_FALSE(nb.contains("nb", {"p0_1", "p0_0"}));
}

TEST_CASE("parameter files are bit exact round trips") {
  TmpDir tmp("params");
  RelationalModel model = parse_model(kMixedModel);
  Universe u;
  u["item"] = {"a", "b"};
  GroundGraph g = ground(model, u, {});
  model.init_params(41);
  Rng rng(6);
  std::vector<Vec> frames;
  for (int m = 0; m < 4; ++m) {
    Vec f(4);
    f << static_cast<double>(rng.uniform_index(2)), rng.uniform01(),
        static_cast<double>(rng.uniform_index(2)), rng.uniform01();
    frames.push_back(f);
  }
  fit_helpers(model, g, frames);
  // Irrational-ish values exercise the full precision of the format.
  model.neural[0].mlp.weights[0](0, 0) = 1.0 / 3.0;
  model.neural[0].mlp.biases[1](0) = -2.718281828459045e-7;

  save_params(model, tmp.path("p1.params"));
  RelationalModel loaded = parse_model(kMixedModel);
  load_params(loaded, tmp.path("p1.params"));
  CHECK(loaded.neural[0].mlp.weights[0](0, 0) == model.neural[0].mlp.weights[0](0, 0));
  CHECK(loaded.neural[0].mlp.biases[1](0) == model.neural[0].mlp.biases[1](0));
  CHECK(loaded.helpers[0].fitted);
  save_params(loaded, tmp.path("p2.params"));
  CHECK(read_text_file(tmp.path("p1.params")) == read_text_file(tmp.path("p2.params")));

  // Loading against a structurally different model fails the shape check.
  const char* other = R"__(
domain unit continuous [0, 1]
domain bin discrete {f, t}
predicate y(I:item) -> unit
predicate x(I:item) -> bin
parfactor p: helper=CG potential=NN(layers=[5], clamp=[-2, 2], fm=identity) atoms=[x(I), y(I)] constraint=none
)__";
  RelationalModel narrow = parse_model(other);
  CHECK_THROWS_AS(load_params(narrow, tmp.path("p1.params")), DataError);

  write_text_file(tmp.path("junk.params"), "not a params file\n");
  CHECK_THROWS_AS(load_params(model, tmp.path("junk.params")), DataError);
}

TEST_CASE("model relation files resolve against the model directory") {
  TmpDir tmp("rel");
  write_text_file(tmp.path("m.model"),
                  "domain b discrete {f, t}\npredicate x(I:item) -> b\n"
                  "relation nb from nb.facts\n"
                  "parfactor p: helper=Categorical potential=none atoms=[x(A), x(B)] "
                  "constraint=nb(A, B)\n");
  write_text_file(tmp.path("nb.facts"), "nb\ta\tb\n");
  const RelationalModel model = parse_model(read_text_file(tmp.path("m.model")));
  const RelationStore rel = load_model_relations(model, tmp.dir.string());
  CHECK(rel.contains("nb", {"a", "b"}));
}
