#include "ladle/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "ladle/error.hpp"

namespace ladle {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or(const json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

json cluster_to_json(const ClusterModel& m) {
  return {{"weights", m.weights}, {"intercept", m.intercept}, {"member_count", m.member_count}, {"sse", m.sse}};
}

ClusterModel cluster_from_json(const json& j) {
  ClusterModel m;
  m.weights = j.at("weights").get<std::vector<double>>();
  m.intercept = j.value("intercept", 0.0);
  m.member_count = j.value("member_count", std::size_t{0});
  m.sse = j.value("sse", 0.0);
  return m;
}

json classifier_to_json(const ClusterClassifier& c) {
  json nodes = json::array();
  for (const auto& n : c.nodes) {
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"class_counts", n.class_counts}});
  }
  json scorers = json::array();
  for (const auto& s : c.scorers) scorers.push_back({{"weights", s.weights}, {"intercept", s.intercept}});
  return {{"kind", std::string(to_string(c.kind))},
          {"feature_idx", c.feature_idx},
          {"n_classes", c.n_classes},
          {"nodes", nodes},
          {"scorers", scorers}};
}

ClusterClassifier classifier_from_json(const json& j) {
  ClusterClassifier c;
  c.kind = classifier_kind_from_string(j.at("kind").get<std::string>());
  c.feature_idx = j.at("feature_idx").get<std::vector<std::size_t>>();
  c.n_classes = j.at("n_classes").get<std::size_t>();
  for (const auto& n : j.value("nodes", json::array())) {
    TreeNode node;
    node.feature = n.at("feature").get<int>();
    node.threshold = n.at("threshold").get<double>();
    node.left = n.at("left").get<int>();
    node.right = n.at("right").get<int>();
    node.class_counts = n.at("class_counts").get<std::vector<std::size_t>>();
    c.nodes.push_back(std::move(node));
  }
  for (const auto& s : j.value("scorers", json::array())) {
    c.scorers.push_back({s.at("weights").get<std::vector<double>>(), s.at("intercept").get<double>()});
  }
  // Structural checks so a hand-edited file cannot send traversal out of bounds.
  const auto count = static_cast<int>(c.nodes.size());
  for (int i = 0; i < count; ++i) {
    const auto& n = c.nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) continue;
    if (n.left <= i || n.right <= i || n.left >= count || n.right >= count ||
        static_cast<std::size_t>(n.feature) >= c.feature_idx.size() || !std::isfinite(n.threshold)) {
      throw Error(ErrorCode::Parse, "classifier node " + std::to_string(i) + " is malformed");
    }
  }
  if (c.kind == ClassifierKind::DecisionTree && c.nodes.empty()) {
    throw Error(ErrorCode::Parse, "decision tree classifier has no nodes");
  }
  return c;
}

json summary_to_json(const TrainingSummary& s) {
  json history = json::array();
  for (const auto& r : s.history) {
    history.push_back({{"moved", r.moved},
                       {"pruned", r.pruned},
                       {"clusters", r.clusters},
                       {"sse_after_fit", r.sse_after_fit},
                       {"sse_after_assign", r.sse_after_assign}});
  }
  return {{"iterations", s.iterations},
          {"clusters_pruned", s.clusters_pruned},
          {"converged", s.converged},
          {"final_sse", s.final_sse},
          {"n_train", s.n_train},
          {"history", history},
          {"baseline", cluster_to_json(s.baseline)}};
}

TrainingSummary summary_from_json(const json& j) {
  TrainingSummary s;
  s.iterations = j.value("iterations", std::size_t{0});
  s.clusters_pruned = j.value("clusters_pruned", std::size_t{0});
  s.converged = j.value("converged", false);
  s.final_sse = j.value("final_sse", 0.0);
  s.n_train = j.value("n_train", std::size_t{0});
  for (const auto& r : j.value("history", json::array())) {
    s.history.push_back({r.at("moved").get<std::size_t>(), r.at("pruned").get<std::size_t>(),
                         r.at("clusters").get<std::size_t>(), r.at("sse_after_fit").get<double>(),
                         r.at("sse_after_assign").get<double>()});
  }
  if (j.contains("baseline")) s.baseline = cluster_from_json(j.at("baseline"));
  return s;
}

template <typename Fn>
auto parse_guard(const std::string& what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, what + ": " + e.what());
  }
}

std::size_t index_of(const std::vector<std::string>& names, const std::string& name, const char* role) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) {
    throw Error(ErrorCode::SchemaMismatch,
                std::string(role) + " '" + name + "' is not one of the feature columns");
  }
  return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

json hyperparams_to_json(const Hyperparams& hp) {
  json bounds = json::array();
  for (const auto& b : hp.weight_bounds) {
    bounds.push_back({{"lower", finite_or_null(b.lower)}, {"upper", finite_or_null(b.upper)}});
  }
  return {{"n_clusters", hp.n_clusters},
          {"init_per_cluster", hp.init_per_cluster},
          {"min_cluster_size", hp.min_cluster_size},
          {"convergence_threshold", hp.convergence_threshold},
          {"max_iters", hp.max_iters},
          {"use_intercept", hp.use_intercept},
          {"seed", hp.seed},
          {"lr_feature_idx", hp.lr_feature_idx},
          {"clf_feature_idx", hp.clf_feature_idx},
          {"normalize", hp.normalize},
          {"weight_bounds", bounds},
          {"classifier",
           {{"kind", std::string(to_string(hp.classifier.kind))},
            {"max_depth", hp.classifier.max_depth},
            {"min_leaf", hp.classifier.min_leaf}}}};
}

Hyperparams hyperparams_from_json(const json& doc, Hyperparams hp) {
  hp.n_clusters = doc.value("n_clusters", hp.n_clusters);
  hp.init_per_cluster = doc.value("init_per_cluster", hp.init_per_cluster);
  hp.min_cluster_size = doc.value("min_cluster_size", hp.min_cluster_size);
  hp.convergence_threshold = doc.value("convergence_threshold", hp.convergence_threshold);
  hp.max_iters = doc.value("max_iters", hp.max_iters);
  hp.use_intercept = doc.value("use_intercept", hp.use_intercept);
  hp.seed = doc.value("seed", hp.seed);
  hp.lr_feature_idx = doc.value("lr_feature_idx", hp.lr_feature_idx);
  hp.clf_feature_idx = doc.value("clf_feature_idx", hp.clf_feature_idx);
  hp.normalize = doc.value("normalize", hp.normalize);
  if (doc.contains("weight_bounds")) {
    hp.weight_bounds.clear();
    for (const auto& b : doc.at("weight_bounds")) {
      hp.weight_bounds.push_back({number_or(b.value("lower", json(nullptr)), -kInf),
                                  number_or(b.value("upper", json(nullptr)), kInf)});
    }
  }
  if (doc.contains("classifier")) {
    const auto& c = doc.at("classifier");
    if (c.contains("kind")) hp.classifier.kind = classifier_kind_from_string(c.at("kind").get<std::string>());
    hp.classifier.max_depth = c.value("max_depth", hp.classifier.max_depth);
    hp.classifier.min_leaf = c.value("min_leaf", hp.classifier.min_leaf);
  }
  return hp;
}

json model_to_json(const ClusterwiseRegressor& r) {
  json clusters = json::array();
  for (const auto& c : r.clusters) clusters.push_back(cluster_to_json(c));
  json normalization = nullptr;
  if (r.scaling.enabled()) normalization = {{"mean", r.scaling.mean}, {"scale", r.scaling.scale}};
  return {{"schema_version", kModelSchemaVersion},
          {"element", r.schema.element},
          {"feature_names", r.schema.feature_names},
          {"addition_feature", r.schema.addition_feature},
          {"hyperparams", hyperparams_to_json(r.hyperparams)},
          {"clusters", clusters},
          {"normalization", normalization},
          {"classifier", r.classifier ? classifier_to_json(*r.classifier) : json(nullptr)},
          {"training_summary", summary_to_json(r.summary)}};
}

ClusterwiseRegressor model_from_json(const json& doc) {
  return parse_guard("model document", [&] {
    const int version = doc.at("schema_version").get<int>();
    if (version != kModelSchemaVersion) {
      throw Error(ErrorCode::Parse, "unsupported model schema_version " + std::to_string(version));
    }
    ClusterwiseRegressor r;
    r.schema.element = doc.value("element", std::string{});
    r.schema.feature_names = doc.value("feature_names", std::vector<std::string>{});
    r.schema.addition_feature = doc.value("addition_feature", std::string{});
    r.hyperparams = hyperparams_from_json(doc.at("hyperparams"));
    for (const auto& c : doc.at("clusters")) r.clusters.push_back(cluster_from_json(c));
    const auto& norm = doc.value("normalization", json(nullptr));
    if (!norm.is_null()) {
      r.scaling.mean = norm.at("mean").get<std::vector<double>>();
      r.scaling.scale = norm.at("scale").get<std::vector<double>>();
    }
    const auto& clf = doc.value("classifier", json(nullptr));
    if (!clf.is_null()) r.classifier = classifier_from_json(clf);
    if (doc.contains("training_summary")) r.summary = summary_from_json(doc.at("training_summary"));

    const std::size_t p = r.hyperparams.lr_feature_idx.size();
    for (const auto& c : r.clusters) {
      if (c.weights.size() != p) throw Error(ErrorCode::Parse, "cluster weight count does not match lr_feature_idx");
    }
    if (r.scaling.enabled() && (r.scaling.mean.size() != p || r.scaling.scale.size() != p)) {
      throw Error(ErrorCode::Parse, "normalization does not match lr_feature_idx");
    }
    const std::size_t dim = r.schema.feature_names.size();
    if (dim > 0) {
      for (std::size_t f : r.hyperparams.lr_feature_idx) {
        if (f >= dim) throw Error(ErrorCode::Parse, "lr feature index out of range");
      }
      if (r.classifier) {
        for (std::size_t f : r.classifier->feature_idx) {
          if (f >= dim) throw Error(ErrorCode::Parse, "classifier feature index out of range");
        }
      }
    }
    return r;
  });
}

std::string dump_model(const ClusterwiseRegressor& regressor) {
  return model_to_json(regressor).dump(2) + "\n";
}

void save_model(const std::filesystem::path& path, const ClusterwiseRegressor& regressor) {
  write_text_file(path, dump_model(regressor));
}

ClusterwiseRegressor load_model(const std::filesystem::path& path) {
  return model_from_json(read_json_file(path));
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  return parse_guard(path.string(), [&] { return json::parse(in); });
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

Hyperparams DatasetConfig::make_hyperparams() const {
  validate();
  const auto& names = schema.feature_columns;
  std::vector<std::size_t> lr;
  std::vector<std::size_t> clf;
  for (const auto& f : lr_features) lr.push_back(index_of(names, f, "lr feature"));
  for (const auto& f : clf_features) clf.push_back(index_of(names, f, "classifier feature"));
  auto hp = default_hyperparams(std::move(lr), std::move(clf));
  return parse_guard("config hyperparams", [&] { return hyperparams_from_json(hyperparams, hp); });
}

FeatureSchema DatasetConfig::feature_schema() const {
  return {element, schema.feature_columns, addition_feature};
}

void DatasetConfig::validate() const {
  const auto& names = schema.feature_columns;
  std::set<std::string> unique(names.begin(), names.end());
  if (unique.size() != names.size()) throw Error(ErrorCode::SchemaMismatch, "feature_columns repeats a name");
  if (lr_features.empty()) throw Error(ErrorCode::SchemaMismatch, "config needs lr_features");
  for (const auto& f : lr_features) index_of(names, f, "lr feature");
  for (const auto& f : clf_features) index_of(names, f, "classifier feature");
  if (!addition_feature.empty()) {
    index_of(names, addition_feature, "addition feature");
    if (std::find(clf_features.begin(), clf_features.end(), addition_feature) != clf_features.end()) {
      throw Error(ErrorCode::SchemaMismatch,
                  "addition feature must not be a classifier feature: the regime is decided before dosing");
    }
  }
  if (split_method != "time" && split_method != "distribution") {
    throw Error(ErrorCode::SchemaMismatch, "split must be 'time' or 'distribution'");
  }
}

DatasetConfig dataset_config_from_json(const json& doc) {
  return parse_guard("dataset config", [&] {
    DatasetConfig c;
    c.element = doc.value("element", std::string{});
    c.schema.target_column = doc.at("target_column").get<std::string>();
    c.schema.timestamp_column = doc.value("timestamp_column", std::string{});
    c.schema.id_column = doc.value("id_column", std::string{});
    c.schema.feature_columns = doc.at("feature_columns").get<std::vector<std::string>>();
    c.lr_features = doc.at("lr_features").get<std::vector<std::string>>();
    c.clf_features = doc.value("clf_features", std::vector<std::string>{});
    c.addition_feature = doc.value("addition_feature", std::string{});
    c.hyperparams = doc.value("hyperparams", json::object());
    if (doc.contains("split")) {
      const auto& s = doc.at("split");
      c.split_method = s.value("method", c.split_method);
      c.train_fraction = s.value("train_fraction", c.train_fraction);
    }
    c.validate();
    return c;
  });
}

DatasetConfig load_dataset_config(const std::filesystem::path& path) {
  return dataset_config_from_json(read_json_file(path));
}

std::vector<Ferroalloy> catalog_from_json(const json& doc) {
  return parse_guard("catalog", [&] {
    if (!doc.is_array()) throw Error(ErrorCode::Parse, "catalog must be a JSON array");
    std::vector<Ferroalloy> out;
    for (const auto& a : doc) {
      Ferroalloy alloy;
      alloy.name = a.at("name").get<std::string>();
      alloy.composition = a.at("composition").get<std::map<std::string, double>>();
      alloy.price = a.at("price").get<double>();
      if (a.contains("max_dose") && !a.at("max_dose").is_null()) alloy.max_dose = a.at("max_dose").get<double>();
      out.push_back(std::move(alloy));
    }
    std::set<std::string> names;
    for (const auto& a : out) {
      if (!names.insert(a.name).second) throw Error(ErrorCode::Parse, "catalog repeats alloy '" + a.name + "'");
    }
    validate_catalog(out);
    return out;
  });
}

std::vector<Ferroalloy> load_catalog(const std::filesystem::path& path) {
  return catalog_from_json(read_json_file(path));
}

json catalog_to_json(const std::vector<Ferroalloy>& catalog) {
  json out = json::array();
  for (const auto& a : catalog) {
    json j = {{"name", a.name}, {"composition", a.composition}, {"price", a.price}};
    if (a.max_dose) j["max_dose"] = *a.max_dose;
    out.push_back(std::move(j));
  }
  return out;
}

MeltState melt_from_json(const json& doc) {
  return parse_guard("melt_state", [&] {
    MeltState m;
    m.mass = doc.at("mass").get<double>();
    m.current_shares = doc.value("current_shares", std::map<std::string, double>{});
    m.context_features = doc.value("context_features", std::map<std::string, double>{});
    validate_melt(m);
    return m;
  });
}

json melt_to_json(const MeltState& melt) {
  return {{"mass", melt.mass}, {"current_shares", melt.current_shares}, {"context_features", melt.context_features}};
}

TargetSpec targets_from_json(const json& doc) {
  return parse_guard("targets", [&] {
    TargetSpec t;
    for (const auto& [element, band] : doc.at("elements").items()) {
      t.elements[element] = {band.value("min", 0.0), band.value("max", 100.0)};
    }
    for (const auto& r : doc.value("ratios", json::array())) {
      t.ratios.push_back({r.at("numerator").get<std::string>(), r.at("denominator").get<std::string>(),
                          r.at("min_ratio").get<double>()});
    }
    return t;
  });
}

json targets_to_json(const TargetSpec& targets) {
  json elements = json::object();
  for (const auto& [e, b] : targets.elements) elements[e] = {{"min", b.min_share}, {"max", b.max_share}};
  json ratios = json::array();
  for (const auto& r : targets.ratios) {
    ratios.push_back({{"numerator", r.numerator}, {"denominator", r.denominator}, {"min_ratio", r.min_ratio}});
  }
  return {{"elements", elements}, {"ratios", ratios}};
}

json recommendation_to_json(const Recommendation& rec) {
  return {{"doses", rec.doses},
          {"predicted_shares", rec.predicted_shares},
          {"total_cost", rec.total_cost},
          {"cluster_id", rec.cluster_id},
          {"feasible", rec.feasible},
          {"active_constraints", rec.active_constraints},
          {"violated_constraints", rec.violated_constraints}};
}

Recommendation recommendation_from_json(const json& doc) {
  return parse_guard("recommendation", [&] {
    Recommendation r;
    r.doses = doc.at("doses").get<std::map<std::string, double>>();
    r.predicted_shares = doc.at("predicted_shares").get<std::map<std::string, double>>();
    r.total_cost = doc.at("total_cost").get<double>();
    r.cluster_id = doc.at("cluster_id").get<std::map<std::string, std::size_t>>();
    r.feasible = doc.at("feasible").get<bool>();
    r.active_constraints = doc.value("active_constraints", std::vector<std::string>{});
    r.violated_constraints = doc.value("violated_constraints", std::vector<std::string>{});
    return r;
  });
}

json eval_report_to_json(const EvalReport& report) {
  json clusters = json::array();
  for (const auto& c : report.per_cluster) {
    clusters.push_back({{"cluster_id", c.cluster_id},
                        {"size", c.size},
                        {"test_count", c.test_count},
                        {"cluster_mae", c.cluster_mae}});
  }
  return {{"mae", report.mae},
          {"median_abs_error", report.median_abs_error},
          {"p90_abs_error", report.p90_abs_error},
          {"baseline_mae", report.baseline_mae},
          {"n_test", report.n_test},
          {"per_cluster", clusters}};
}

json tune_result_to_json(const TuneResult& result) {
  json trials = json::array();
  for (const auto& t : result.trials) {
    trials.push_back({{"index", t.index},
                      {"n_clusters", t.hyperparams.n_clusters},
                      {"min_cluster_size", t.hyperparams.min_cluster_size},
                      {"convergence_threshold", t.hyperparams.convergence_threshold},
                      {"init_per_cluster", t.hyperparams.init_per_cluster},
                      {"init_fraction", t.init_fraction},
                      {"seed", t.hyperparams.seed},
                      {"validation_mae", finite_or_null(t.validation_mae)},
                      {"error", t.error}});
  }
  return {{"best_trial", result.best_trial},
          {"best", hyperparams_to_json(result.best)},
          {"trials", trials}};
}

SyntheticSpec synthetic_spec_from_json(const json& doc) {
  return parse_guard("synthetic spec", [&] {
    SyntheticSpec s;
    s.element = doc.value("element", s.element);
    for (const auto& f : doc.at("features")) {
      s.features.push_back({f.at("name").get<std::string>(), f.at("lower").get<double>(), f.at("upper").get<double>()});
    }
    for (const auto& m : doc.at("models")) {
      s.models.push_back({m.at("weights").get<std::vector<double>>(), m.value("intercept", 0.0)});
    }
    const auto& region = doc.at("region_feature");
    if (region.is_string()) {
      std::vector<std::string> names;
      for (const auto& f : s.features) names.push_back(f.name);
      s.region_feature = index_of(names, region.get<std::string>(), "region feature");
    } else {
      s.region_feature = region.get<std::size_t>();
    }
    s.noise_sigma = doc.value("noise_sigma", 0.0);
    s.n_samples = doc.value("n_samples", s.n_samples);
    s.seed = doc.value("seed", s.seed);
    s.samples_per_timestamp = doc.value("samples_per_timestamp", s.samples_per_timestamp);
    s.validate();
    return s;
  });
}

json synthetic_spec_to_json(const SyntheticSpec& spec) {
  json features = json::array();
  for (const auto& f : spec.features) features.push_back({{"name", f.name}, {"lower", f.lower}, {"upper", f.upper}});
  json models = json::array();
  for (const auto& m : spec.models) models.push_back({{"weights", m.weights}, {"intercept", m.intercept}});
  return {{"element", spec.element},
          {"features", features},
          {"models", models},
          {"region_feature", spec.region_feature},
          {"noise_sigma", spec.noise_sigma},
          {"n_samples", spec.n_samples},
          {"seed", spec.seed},
          {"samples_per_timestamp", spec.samples_per_timestamp}};
}

}  // namespace ladle
