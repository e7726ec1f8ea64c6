#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ladle/clusterwise.hpp"
#include "ladle/csv.hpp"
#include "ladle/error.hpp"
#include "ladle/eval.hpp"
#include "ladle/json_io.hpp"
#include "ladle/recommender.hpp"
#include "ladle/service.hpp"
#include "ladle/split.hpp"
#include "ladle/synthetic.hpp"

namespace fs = std::filesystem;
using namespace ladle;

namespace {

constexpr int kExitError = 1;
constexpr int kExitInput = 2;
constexpr int kExitInfeasible = 3;

// Missing input files are reported separately from malformed ones.
struct MissingInput {
  fs::path path;
  std::string role;
};

void require_file(const fs::path& path, const std::string& role) {
  if (!fs::is_regular_file(path)) throw MissingInput{path, role};
}

struct Common {
  fs::path config;
  fs::path dataset;
  fs::path model;
  std::optional<std::uint64_t> seed;
  std::string element;
  unsigned threads = 1;
};

struct Loaded {
  DatasetConfig config;
  Dataset dataset;
};

Loaded load_inputs(const Common& c) {
  require_file(c.config, "config");
  require_file(c.dataset, "dataset");
  Loaded out{load_dataset_config(c.config), {}};
  if (!c.element.empty()) out.config.element = c.element;
  auto csv = load_csv(c.dataset, out.config.schema, out.config.element);
  for (const auto& r : csv.rejects) spdlog::warn("{}:{}: row rejected: {}", c.dataset.string(), r.line, r.reason);
  out.dataset = std::move(csv.dataset);
  return out;
}

TrainTest split_for(const Loaded& in, std::uint64_t seed) {
  if (in.config.split_method == "distribution") {
    return split_by_distribution(in.dataset, in.config.train_fraction, seed);
  }
  return split_by_time(in.dataset, in.config.train_fraction);
}

void print_json(const json& doc) { std::cout << doc.dump(2) << "\n"; }

int cmd_generate(const Common& c, std::optional<std::size_t> samples) {
  require_file(c.config, "synthetic spec");
  auto spec = synthetic_spec_from_json(read_json_file(c.config));
  if (c.seed) spec.seed = *c.seed;
  if (samples) spec.n_samples = *samples;
  if (!c.element.empty()) spec.element = c.element;
  const auto data = generate_synthetic(spec);
  CsvSchema schema{spec.element + "_final", "timestamp", "melt_id", data.dataset.feature_names};
  std::vector<std::string> labels;
  labels.reserve(data.labels.size());
  for (auto l : data.labels) labels.push_back(std::to_string(l));
  if (c.dataset.empty()) {
    write_csv(std::cout, data.dataset, schema, {{"planted_model", labels}});
  } else {
    write_csv(c.dataset, data.dataset, schema, {{"planted_model", labels}});
    spdlog::info("wrote {} samples to {}", data.dataset.size(), c.dataset.string());
  }
  return 0;
}

int cmd_train(const Common& c, bool augmented) {
  const auto in = load_inputs(c);
  auto hp = in.config.make_hyperparams();
  if (c.seed) hp.seed = *c.seed;
  const auto split = split_for(in, hp.seed);
  spdlog::info("training on {} samples, holding out {}", split.train.size(), split.test.size());
  auto model = fit_model(split.train, hp, {c.threads}, augmented);
  model.schema = in.config.feature_schema();
  save_model(c.model, model);
  spdlog::info("{} clusters after {} iterations; model written to {}", model.clusters.size(),
               model.summary.iterations, c.model.string());
  if (!split.test.empty()) print_json(eval_report_to_json(evaluate(model, split.test)));
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& which) {
  require_file(c.model, "model");
  const auto in = load_inputs(c);
  const auto model = load_model(c.model);
  if (model.schema.feature_names != in.dataset.feature_names) {
    throw Error(ErrorCode::SchemaMismatch, "model features differ from the dataset's feature columns");
  }
  if (which == "all") {
    print_json(eval_report_to_json(evaluate(model, in.dataset)));
  } else {
    print_json(eval_report_to_json(evaluate(model, split_for(in, model.hyperparams.seed).test)));
  }
  return 0;
}

int cmd_recommend(const std::vector<fs::path>& model_paths, const fs::path& catalog_path,
                  const fs::path& request_path) {
  ModelSet models;
  for (const auto& p : model_paths) {
    require_file(p, "model");
    auto m = load_model(p);
    const auto element = m.schema.element;
    if (element.empty()) throw Error(ErrorCode::SchemaMismatch, p.string() + " does not name its element");
    if (!models.emplace(element, std::move(m)).second) {
      throw Error(ErrorCode::InvalidArgument, "two models given for element " + element);
    }
  }
  require_file(request_path, "request");
  const json request = read_json_file(request_path);
  std::vector<Ferroalloy> catalog;
  if (!catalog_path.empty()) {
    require_file(catalog_path, "catalog");
    catalog = load_catalog(catalog_path);
  } else if (request.contains("catalog")) {
    catalog = catalog_from_json(request.at("catalog"));
  } else {
    throw Error(ErrorCode::InvalidArgument, "no catalog: pass --catalog or put one in the request");
  }
  if (!request.contains("melt_state") || !request.contains("targets")) {
    throw Error(ErrorCode::Parse, "request needs 'melt_state' and 'targets'");
  }
  const auto rec = recommend(models, melt_from_json(request.at("melt_state")),
                             targets_from_json(request.at("targets")), catalog);
  print_json(recommendation_to_json(rec));
  if (!rec.feasible) {
    std::string names;
    for (const auto& v : rec.violated_constraints) names += " " + v;
    spdlog::error("targets cannot be met; violated:{}", names);
    return kExitInfeasible;
  }
  return 0;
}

int cmd_tune(const Common& c, std::size_t budget) {
  const auto in = load_inputs(c);
  const auto base = in.config.make_hyperparams();
  TuneOptions opts;
  opts.budget = budget;
  opts.seed = c.seed.value_or(base.seed);
  opts.threads = c.threads;
  const auto split = split_for(in, opts.seed);
  const auto result = tune(split.train, base, default_search_space(base), opts);
  print_json(tune_result_to_json(result));
  if (!c.model.empty()) {
    auto model = fit_model(split.train, result.best, {c.threads});
    model.schema = in.config.feature_schema();
    save_model(c.model, model);
    spdlog::info("refit with the best settings written to {}", c.model.string());
  }
  return 0;
}

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

int cmd_serve(const Common& c, const std::string& listen) {
  require_file(c.config, "service config");
  auto config = load_service_config(c.config);
  if (!listen.empty()) config.listen_address = listen;
  spdlog::set_level(spdlog::level::from_str(config.log_level));
  for (const auto& [element, path] : config.model_paths) require_file(path, "model for " + element);
  require_file(config.catalog_path, "catalog");
  Service service(load_bundle(config));
  const int port = service.bind(parse_listen_address(config.listen_address));
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  spdlog::info("serving {} model(s) on port {}", config.model_paths.size(), port);
  service.serve();
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("ladle"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"ladle: clusterwise regression models and ferroalloy dose recommendations"};
  app.require_subcommand(1);
  Common c;

  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", c.seed, "Random seed override"); };
  auto add_threads = [&](CLI::App* sub) {
    sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* generate = app.add_subcommand("generate", "Write a planted synthetic dataset as CSV");
  std::optional<std::size_t> samples;
  generate->add_option("--config", c.config, "Synthetic spec JSON")->required();
  generate->add_option("--dataset", c.dataset, "Output CSV (stdout when omitted)");
  generate->add_option("--samples", samples, "Override the number of samples");
  generate->add_option("--element", c.element, "Override the element name");
  add_seed(generate);

  auto* train = app.add_subcommand("train", "Fit a model and report held-out error");
  bool augmented = false;
  train->add_option("--config", c.config, "Dataset config JSON")->required();
  train->add_option("--dataset", c.dataset, "Training CSV")->required();
  train->add_option("--model", c.model, "Output model JSON")->required();
  train->add_option("--element", c.element, "Override the element name");
  train->add_flag("--augmented", augmented, "Use the augmented reassignment variant");
  add_seed(train);
  add_threads(train);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Report the error of a saved model");
  std::string which = "test";
  evaluate_cmd->add_option("--config", c.config, "Dataset config JSON")->required();
  evaluate_cmd->add_option("--dataset", c.dataset, "CSV to evaluate on")->required();
  evaluate_cmd->add_option("--model", c.model, "Model JSON")->required();
  evaluate_cmd->add_option("--split", which, "Held-out split or the whole file")
      ->check(CLI::IsMember({"test", "all"}));
  evaluate_cmd->add_option("--element", c.element, "Override the element name");

  auto* recommend_cmd = app.add_subcommand("recommend", "Cost-minimal doses for a melt");
  std::vector<fs::path> models;
  fs::path catalog;
  fs::path request;
  recommend_cmd->add_option("--model", models, "Model JSON, once per element")->required();
  recommend_cmd->add_option("--catalog", catalog, "Ferroalloy catalog JSON");
  recommend_cmd->add_option("--request", request, "Request JSON with melt_state and targets")->required();

  auto* tune_cmd = app.add_subcommand("tune", "Random search over clustering settings");
  std::size_t budget = 20;
  tune_cmd->add_option("--config", c.config, "Dataset config JSON")->required();
  tune_cmd->add_option("--dataset", c.dataset, "Training CSV")->required();
  tune_cmd->add_option("--model", c.model, "Write a refit with the best settings here");
  tune_cmd->add_option("--budget", budget, "Number of trials")->check(CLI::PositiveNumber);
  tune_cmd->add_option("--element", c.element, "Override the element name");
  add_seed(tune_cmd);
  add_threads(tune_cmd);

  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  std::string listen;
  serve->add_option("--config", c.config, "Service config JSON")->required();
  serve->add_option("--listen", listen, "host:port, overrides the config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitInput;
  }

  try {
    if (*generate) return cmd_generate(c, samples);
    if (*train) return cmd_train(c, augmented);
    if (*evaluate_cmd) return cmd_evaluate(c, which);
    if (*recommend_cmd) return cmd_recommend(models, catalog, request);
    if (*tune_cmd) return cmd_tune(c, budget);
    if (*serve) return cmd_serve(c, listen);
  } catch (const MissingInput& m) {
    spdlog::error("{} not found: {}", m.role, m.path.string());
    return kExitInput;
  } catch (const Error& e) {
    spdlog::error("{}: {}", to_string(e.code()), e.what());
    return kExitError;
  }
  return kExitError;
}
