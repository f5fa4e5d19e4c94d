// Writes synthetic fixture models and the planted-concept image corpus.

#include "ace/errors.hpp"
#include "ace/fixtures/models.hpp"
#include "ace/fixtures/planted.hpp"

#include <iostream>

#include "CLI11.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate ACE test fixtures"};
  app.require_subcommand(1);

  std::string out;
  std::uint64_t seed = 1;
  ace::fixtures::PlantedCorpusOptions corpus;
  auto* c = app.add_subcommand("planted-corpus", "images with planted red squares");
  c->add_option("out", out, "output directory")->required();
  c->add_option("--seed", corpus.seed, "random seed");
  c->add_option("--n-discovery", corpus.n_discovery, "class 'red' discovery images");
  c->add_option("--n-random", corpus.n_random, "class 'plain' images");
  c->add_option("--n-eval", corpus.n_eval, "evaluation images per class");

  ace::fixtures::PlantedModelOptions planted;
  auto* p = app.add_subcommand("planted-model", "split model that detects red squares");
  p->add_option("out", out, "model directory")->required();
  p->add_option("--threshold-pixels", planted.threshold_pixels, "red pixels needed for class 'red'");

  int dim = 8, hidden = 16, classes = 3;
  auto* m = app.add_subcommand("mlp-model", "split model with a random ReLU head");
  m->add_option("out", out, "model directory")->required();
  m->add_option("--dim", dim, "bottleneck dimension");
  m->add_option("--hidden", hidden, "hidden units");
  m->add_option("--classes", classes, "number of classes");
  m->add_option("--seed", seed, "random seed");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*c) ace::fixtures::write_planted_corpus(out, corpus);
    if (*p) ace::fixtures::write_model_dir(out, ace::fixtures::planted_model(planted));
    if (*m) ace::fixtures::write_model_dir(out, ace::fixtures::mlp_model(dim, hidden, classes, seed));
  } catch (const std::exception& e) {
    std::cerr << "ace-make-fixture: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
