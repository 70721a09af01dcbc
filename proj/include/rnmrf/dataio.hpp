#pragma once

#include <string>
#include <vector>

#include "rnmrf/ground.hpp"
#include "rnmrf/relational.hpp"

namespace rnmrf {

// Whole-file read. DataError when the file cannot be opened.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Tab-separated fact files: "relname<TAB>inst1<TAB>inst2...". '#' starts a
// comment, blank lines are skipped.
RelationStore load_facts(const std::string& path);
void append_facts(RelationStore& store, const std::string& path);
void save_facts(const RelationStore& store, const std::string& path);

// Loads every relation file referenced by the model, resolving relative
// paths against `base_dir`.
RelationStore load_model_relations(const RelationalModel& model, const std::string& base_dir);

// "pred(a,b)" -> predicate name plus argument instances.
void parse_atom_name(const std::string& text, std::string& pred, std::vector<std::string>& args);

// Frame CSV: header row of atom instance names, one frame per data row.
// Discrete cells hold labels, continuous cells hold decimal numbers.
struct FrameTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};
FrameTable load_csv(const std::string& path);
void save_csv(const FrameTable& table, const std::string& path);

// Entities mentioned in atom instance columns, keyed by the population each
// predicate argument draws from.
Universe universe_from_columns(const RelationalModel& model,
                               const std::vector<std::string>& columns);

// Converts table rows to full assignments over g.variables. Every graph
// variable must be covered by exactly one column.
std::vector<Vec> frames_from_table(const GroundGraph& g, const FrameTable& table,
                                   const std::string& context);

// PGM images with pixels rescaled to [0,1]. P5 and P2 are read, P5 written.
struct Image {
  int rows = 0;
  int cols = 0;
  Mat pixels;
};
Image load_pgm(const std::string& path);
void save_pgm(const Image& img, const std::string& path);

// <stem>.noisy.pgm with a matching <stem>.clean.pgm, sorted by stem.
struct ImagePair {
  std::string stem;
  std::string noisy_path;
  std::string clean_path;
};
std::vector<ImagePair> find_image_pairs(const std::string& dir);

// Grid naming and adjacency shared by the image models. Pixel p{r}_{c} is
// row-major; "nb" holds each right and down edge once.
std::string pixel_name(int r, int c);
Universe grid_universe(int rows, int cols, const std::string& population);
RelationStore grid_neighbors(int rows, int cols);

// Learned-parameter files, header "rnmrf-params v1". Values are written with
// %.17g so a save/load cycle is bit exact. Loading validates layer shapes and
// table sizes against the model and throws DataError on mismatch.
void save_params(const RelationalModel& model, const std::string& path);
void load_params(RelationalModel& model, const std::string& path);

}  // namespace rnmrf
