#include <doctest.h>

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "rnmrf/cli.hpp"
#include "rnmrf/dataio.hpp"
#include "test_util.hpp"

using namespace rnmrf;

namespace {

struct TmpDir {
  std::filesystem::path dir;

  explicit TmpDir(const std::string& tag) {
    dir = std::filesystem::temp_directory_path() / ("rnmrf_cli_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
  }
  ~TmpDir() { std::filesystem::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

int cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("rnmrf");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

// Redirects fd 1 into a file for the duration of one run_cli call; doctest's
// own reporting stays outside the captured window.
struct StdoutCapture {
  int saved = -1;
  std::string file;

  explicit StdoutCapture(std::string path) : file(std::move(path)) {
    std::fflush(stdout);
    std::cout.flush();
    saved = dup(1);
    const int fd = open(file.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    dup2(fd, 1);
    close(fd);
  }
  std::string finish() {
    std::fflush(stdout);
    std::cout.flush();
    dup2(saved, 1);
    close(saved);
    saved = -1;
    return read_text_file(file);
  }
  ~StdoutCapture() {
    if (saved >= 0) {
      dup2(saved, 1);
      close(saved);
    }
  }
};

void write_tiny_problem(const TmpDir& tmp) {
  write_text_file(tmp.path("tiny.model"),
                  "domain bin discrete {f, t}\n"
                  "domain unit continuous [0, 1]\n"
                  "predicate x(I:item) -> bin\n"
                  "predicate y(I:item) -> unit\n"
                  "relation nb from nb.facts\n"
                  "parfactor pc: helper=CG potential=NN(layers=[3], clamp=[-2, 2], fm=identity) "
                  "atoms=[x(I), y(I)] constraint=none\n"
                  "parfactor pp: helper=Categorical potential=MLN(w0=0.5, \"x(A) == x(B)\") "
                  "atoms=[x(A), x(B)] constraint=nb(A, B)\n");
  write_text_file(tmp.path("nb.facts"), "nb\ta\tb\n");
  write_text_file(tmp.path("data.csv"),
                  "x(a),y(a),x(b),y(b)\n"
                  "f,0.2,f,0.3\n"
                  "t,0.8,t,0.7\n"
                  "f,0.4,t,0.6\n"
                  "t,0.9,f,0.1\n");
}

}  // namespace

TEST_CASE("usage errors exit with 2 and help with 0") {
  StdoutCapture cap((std::filesystem::temp_directory_path() / "rnmrf_cli_help.txt").string());
  CHECK(cli({}) == 2);
  CHECK(cli({"no-such-command"}) == 2);
  CHECK(cli({"train"}) == 2);
  CHECK(cli({"--help"}) == 0);
  CHECK(cli({"eval", "--task", "bogus"}) == 2);
  const std::string text = cap.finish();
  CHECK(text.find("train") != std::string::npos);
}

TEST_CASE("gradcheck's built-in testbed passes its own tolerance") {
  TmpDir tmp("gradcheck");
  StdoutCapture cap(tmp.path("out.txt"));
  const int rc = cli({"gradcheck", "--samples", "8", "--seed", "2"});
  const std::string text = cap.finish();
  CHECK(rc == 0);
  CHECK(text.find("params_checked,max_rel_err") != std::string::npos);
}

TEST_CASE("synth subcommands write the advertised files") {
  TmpDir tmp("synth");
  CHECK(cli({"synth", "denoise", "--size", "8", "--images", "2", "--out", tmp.path("img"),
             "--seed", "4"}) == 0);
  const std::vector<ImagePair> pairs = find_image_pairs(tmp.path("img"));
  REQUIRE(pairs.size() == 2);
  const Image im = load_pgm(pairs[0].noisy_path);
  CHECK(im.rows == 8);
  CHECK(im.cols == 8);

  CHECK(cli({"synth", "segments", "--segments", "12", "--out", tmp.path("seg"), "--seed", "4"}) ==
        0);
  const FrameTable t = load_csv(tmp.path("seg/segments.csv"));
  CHECK(t.columns.size() == 48);
  CHECK(t.rows.size() == 1);
  const RelationStore nb = load_facts(tmp.path("seg/nb.facts"));
  CHECK(nb.contains("nb", {"s0", "s1"}));
}

TEST_CASE("train and map round trip deterministically") {
  TmpDir tmp("train");
  write_tiny_problem(tmp);

  const std::vector<std::string> train_args = {
      "train",           "--model", tmp.path("tiny.model"), "--data", tmp.path("data.csv"),
      "--iters",         "5",       "--samples",            "4",      "--vars-per-iter",
      "4",               "--seed",  "3",                    "--trace-every", "2"};
  auto with_out = [&](const std::string& out, const std::string& trace) {
    std::vector<std::string> a = train_args;
    a.push_back("--out");
    a.push_back(tmp.path(out));
    a.push_back("--trace");
    a.push_back(tmp.path(trace));
    return a;
  };
  REQUIRE(cli(with_out("p1.params", "t1.csv")) == 0);
  REQUIRE(cli(with_out("p2.params", "t2.csv")) == 0);

  const std::string p1 = read_text_file(tmp.path("p1.params"));
  CHECK(p1.rfind("rnmrf-params v1", 0) == 0);
  CHECK(p1 == read_text_file(tmp.path("p2.params")));

  // Wall-clock column aside, the traces agree line by line.
  const FrameTable t1 = load_csv(tmp.path("t1.csv"));
  const FrameTable t2 = load_csv(tmp.path("t2.csv"));
  CHECK(t1.columns == std::vector<std::string>{"iteration", "estimated_log_pl", "seconds"});
  REQUIRE(t1.rows.size() == t2.rows.size());
  REQUIRE(t1.rows.size() >= 2);
  for (std::size_t r = 0; r < t1.rows.size(); ++r) {
    CHECK(t1.rows[r][0] == t2.rows[r][0]);
    CHECK(t1.rows[r][1] == t2.rows[r][1]);
  }

  // Warm starting from the trained parameters is accepted.
  std::vector<std::string> warm = with_out("p3.params", "t3.csv");
  warm.push_back("--params-in");
  warm.push_back(tmp.path("p1.params"));
  CHECK(cli(warm) == 0);

  write_text_file(tmp.path("ev.csv"), "x(a),y(a),x(b)\nt,0.7,t\n");
  const std::vector<std::string> map_args = {
      "map",   "--model", tmp.path("tiny.model"),   "--params", tmp.path("p1.params"),
      "--evidence", tmp.path("ev.csv"), "--out", tmp.path("m1.csv"), "--seed", "5",
      "--sweeps", "4", "--candidates", "8"};
  REQUIRE(cli(map_args) == 0);
  const FrameTable m1 = load_csv(tmp.path("m1.csv"));
  REQUIRE(m1.rows.size() == 1);
  REQUIRE(m1.columns.size() == 4);

  int yb = -1;
  for (std::size_t j = 0; j < m1.columns.size(); ++j) {
    if (m1.columns[j] == "x(a)") CHECK(m1.rows[0][j] == "t");
    if (m1.columns[j] == "y(b)") yb = static_cast<int>(j);
  }
  REQUIRE(yb >= 0);
  const double v = std::stod(m1.rows[0][yb]);
  CHECK(v >= 0.0);
  CHECK(v <= 1.0);

  std::vector<std::string> map2 = map_args;
  for (std::size_t j = 0; j + 1 < map2.size(); ++j)
    if (map2[j] == "--out") map2[j + 1] = tmp.path("m2.csv");
  REQUIRE(cli(map2) == 0);
  CHECK(read_text_file(tmp.path("m1.csv")) == read_text_file(tmp.path("m2.csv")));
}

TEST_CASE("eval scores prediction files directly") {
  TmpDir tmp("eval");
  Image img;
  img.rows = img.cols = 4;
  img.pixels = Mat::Constant(4, 4, 0.5);
  save_pgm(img, tmp.path("a.pgm"));
  save_pgm(img, tmp.path("b.pgm"));

  StdoutCapture cap1(tmp.path("o1.txt"));
  const int rc1 = cli({"eval", "--task", "denoise", "--pred", tmp.path("a.pgm"), "--truth",
                       tmp.path("b.pgm")});
  const std::string imgs = cap1.finish();
  CHECK(rc1 == 0);
  CHECK(imgs == "l1,l2\n0,0\n");

  write_text_file(tmp.path("pred.csv"), "cls\nsetosa\nversicolor\nvirginica\nsetosa\n");
  write_text_file(tmp.path("truth.csv"), "cls\nsetosa\nversicolor\nvirginica\nsetosa\n");
  StdoutCapture cap2(tmp.path("o2.txt"));
  const int rc2 = cli({"eval", "--task", "tabular", "--pred", tmp.path("pred.csv"), "--truth",
                       tmp.path("truth.csv")});
  const std::string labels = cap2.finish();
  CHECK(rc2 == 0);
  CHECK(labels.find("accuracy,1\n") != std::string::npos);
  CHECK(labels.find("f1_setosa,1\n") != std::string::npos);
  CHECK(labels.find("macro_f1,1\n") != std::string::npos);

  // Half right: accuracy 0.5.
  write_text_file(tmp.path("pred2.csv"), "cls\nsetosa\nversicolor\nsetosa\nversicolor\n");
  StdoutCapture cap3(tmp.path("o3.txt"));
  const int rc3 = cli({"eval", "--task", "tabular", "--pred", tmp.path("pred2.csv"), "--truth",
                       tmp.path("truth.csv")});
  const std::string half = cap3.finish();
  CHECK(rc3 == 0);
  CHECK(half.find("accuracy,0.5\n") != std::string::npos);
}

TEST_CASE("task failures exit with 1") {
  TmpDir tmp("fail");
  CHECK(cli({"train", "--model", tmp.path("missing.model"), "--data", tmp.path("x.csv"),
             "--out", tmp.path("p.params")}) == 1);

  write_tiny_problem(tmp);
  CHECK(cli({"train", "--model", tmp.path("tiny.model"), "--data", tmp.path("data.csv"),
             "--out", tmp.path("p.params"), "--estimator", "bogus"}) == 2);
}
