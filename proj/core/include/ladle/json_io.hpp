#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ladle/classifier.hpp"
#include "ladle/clusterwise.hpp"
#include "ladle/csv.hpp"
#include "ladle/eval.hpp"
#include "ladle/recommender.hpp"
#include "ladle/synthetic.hpp"

namespace ladle {

using json = nlohmann::json;

inline constexpr int kModelSchemaVersion = 1;

// Model document: {schema_version, element, feature_names, addition_feature,
// hyperparams, clusters, normalization, classifier, training_summary}.
json model_to_json(const ClusterwiseRegressor& regressor);
ClusterwiseRegressor model_from_json(const json& doc);

std::string dump_model(const ClusterwiseRegressor& regressor);
void save_model(const std::filesystem::path& path, const ClusterwiseRegressor& regressor);
ClusterwiseRegressor load_model(const std::filesystem::path& path);

/// Training configuration file: which columns feed the model and how.
struct DatasetConfig {
  std::string element;
  CsvSchema schema;
  std::vector<std::string> lr_features;
  std::vector<std::string> clf_features;
  std::string addition_feature;
  json hyperparams = json::object();  // overrides of default_hyperparams
  std::string split_method = "time";  // "time" or "distribution"
  double train_fraction = 0.75;

  // Resolves feature names to indices and applies overrides.
  Hyperparams make_hyperparams() const;
  FeatureSchema feature_schema() const;
  void validate() const;
};

DatasetConfig load_dataset_config(const std::filesystem::path& path);
DatasetConfig dataset_config_from_json(const json& doc);

std::vector<Ferroalloy> catalog_from_json(const json& doc);
std::vector<Ferroalloy> load_catalog(const std::filesystem::path& path);
json catalog_to_json(const std::vector<Ferroalloy>& catalog);

MeltState melt_from_json(const json& doc);
json melt_to_json(const MeltState& melt);
TargetSpec targets_from_json(const json& doc);
json targets_to_json(const TargetSpec& targets);
json recommendation_to_json(const Recommendation& rec);
Recommendation recommendation_from_json(const json& doc);

json hyperparams_to_json(const Hyperparams& hp);
Hyperparams hyperparams_from_json(const json& doc, Hyperparams base = {});

json eval_report_to_json(const EvalReport& report);
json tune_result_to_json(const TuneResult& result);

SyntheticSpec synthetic_spec_from_json(const json& doc);
json synthetic_spec_to_json(const SyntheticSpec& spec);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace ladle
