// Copyright 2026 The csrc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// csrc command-line driver. Exit codes: 0 success, 1 usage error, 2 data error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "csrc/csrc.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string workdir;
  std::string keep_list;
  std::string strategy;
  std::vector<std::string> models;
  bool force = false;
  std::string input, output;
};

csrc::Pipeline make_pipeline(const Options& o) {
  if (o.config.empty()) throw csrc::UsageError("--config is required");
  auto config = csrc::load_config(o.config);
  if (o.seed) config.seed = *o.seed;
  if (!o.workdir.empty()) config.workdir = std::filesystem::absolute(o.workdir).string();
  if (!o.strategy.empty()) config.strategy = csrc::parse_strategy(o.strategy);
  return csrc::Pipeline(std::move(config), std::cout);
}

int run(int argc, char** argv) {
  CLI::App app{"Commonsense relation path mining and next-relation prediction"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "pipeline configuration file")->required();
    sub->add_option("--seed", o.seed, "override the configured seed");
    sub->add_option("--workdir", o.workdir, "override the configured working directory");
  };

  auto* ingest = app.add_subcommand("ingest", "load the edge file and print graph statistics");
  common(ingest);
  auto* convert = app.add_subcommand("convert-conceptnet", "convert a ConceptNet assertion dump into an edge file");
  convert->add_option("--input", o.input, "ConceptNet CSV (tab separated)")->required();
  convert->add_option("--output", o.output, "edge file to write")->required();
  auto* paths = app.add_subcommand("paths", "enumerate relation paths for every concept pair");
  common(paths);
  auto* filter = app.add_subcommand("filter", "score paths by relatedness and drop weak ones");
  common(filter);
  filter->add_option("--strategy", o.strategy, "target-anchored, all-pairs or consecutive");
  filter->add_option("--keep-list", o.keep_list, "file of rendered paths approved by an annotator");
  auto* build = app.add_subcommand("build-dataset", "turn filtered paths into split cloze examples");
  common(build);
  auto* train = app.add_subcommand("train", "train one or more models");
  common(train);
  train->add_option("--model", o.models, "random, unigram, single, forest, lstm or all")->required();
  auto* evaluate = app.add_subcommand("evaluate", "score trained models on the test partition");
  common(evaluate);
  evaluate->add_option("--model", o.models, "models to evaluate (default: all trained)");
  evaluate->add_flag("--force", o.force, "accept artifacts written under a different configuration");
  auto* report = app.add_subcommand("report", "print the combined result tables");
  common(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*convert) {
    std::ifstream in(o.input);
    if (!in) throw csrc::DataError("cannot open " + o.input);
    std::ofstream out(o.output);
    if (!out) throw csrc::DataError("cannot write " + o.output);
    out << "# relation\tstart\tend\tweight\n";
    auto stats = csrc::convert_conceptnet(in, out);
    std::cout << stats.rows << " rows, " << stats.kept << " edges written, " << stats.skipped << " skipped\n";
    return 0;
  }

  auto pipeline = make_pipeline(o);
  if (*ingest) {
    pipeline.ingest();
  } else if (*paths) {
    pipeline.paths();
  } else if (*filter) {
    std::optional<std::filesystem::path> keep;
    if (!o.keep_list.empty()) keep = o.keep_list;
    pipeline.filter(keep);
  } else if (*build) {
    pipeline.build_dataset();
  } else if (*train) {
    std::vector<std::string> models;
    for (const auto& m : o.models) {
      if (m == "all") {
        models = csrc::model_names();
        break;
      }
      models.push_back(m);
    }
    for (const auto& m : models) pipeline.train(m);
  } else if (*evaluate) {
    pipeline.evaluate(o.models, o.force);
  } else if (*report) {
    pipeline.report();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const csrc::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
