#include "ladle/service.hpp"

#include <charconv>
#include <utility>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "ladle/error.hpp"
#include "ladle/json_io.hpp"

namespace ladle {
namespace {

constexpr std::string_view kPrefix = "/api/v1/";

HttpResponse reply(int status, const json& body) { return {status, body.dump()}; }

HttpResponse error_reply(int status, std::string_view code, const std::string& message,
                         json details = json::object()) {
  return reply(status, {{"code", code}, {"message", message}, {"details", std::move(details)}});
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ModelNotFitted:
      return 503;
    case ErrorCode::Infeasible:
    case ErrorCode::ZeroWeight:
      return 422;
    case ErrorCode::InvalidArgument:
    case ErrorCode::Parse:
    case ErrorCode::SchemaMismatch:
      return 400;
    default:
      return 500;
  }
}

json parse_body(std::string_view body) {
  json doc = json::parse(body.begin(), body.end(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw Error(ErrorCode::Parse, "request body is not valid JSON");
  if (!doc.is_object()) throw Error(ErrorCode::Parse, "request body must be a JSON object");
  return doc;
}

const json& require(const json& doc, const char* key) {
  if (!doc.contains(key)) throw Error(ErrorCode::Parse, std::string("request needs '") + key + "'");
  return doc.at(key);
}

std::vector<Ferroalloy> catalog_for(const json& doc, const ModelBundle& bundle) {
  if (doc.contains("catalog")) return catalog_from_json(doc.at("catalog"));
  return bundle.catalog;
}

void require_models(const ModelBundle& bundle) {
  if (bundle.models.empty()) throw Error(ErrorCode::ModelNotFitted, "no models loaded");
}

const ClusterwiseRegressor& model_named(const ModelBundle& bundle, const std::string& element) {
  const auto it = bundle.models.find(element);
  if (it == bundle.models.end()) {
    throw Error(ErrorCode::ModelNotFitted, "no model loaded for element '" + element + "'");
  }
  return it->second;
}

HttpResponse do_recommend(const ModelBundle& bundle, std::string_view body) {
  require_models(bundle);
  const json doc = parse_body(body);
  const auto melt = melt_from_json(require(doc, "melt_state"));
  const auto targets = targets_from_json(require(doc, "targets"));
  const auto catalog = catalog_for(doc, bundle);
  const auto rec = recommend(bundle.models, melt, targets, catalog);
  if (!rec.feasible) {
    std::string names;
    for (const auto& v : rec.violated_constraints) names += (names.empty() ? "" : ", ") + v;
    return error_reply(422, to_string(ErrorCode::Infeasible),
                       "targets cannot be met; violated: " + (names.empty() ? "unknown" : names),
                       {{"violated_constraints", rec.violated_constraints},
                        {"recommendation", recommendation_to_json(rec)}});
  }
  return reply(200, recommendation_to_json(rec));
}

HttpResponse do_predict(const ModelBundle& bundle, std::string_view body) {
  require_models(bundle);
  const json doc = parse_body(body);
  const auto melt = melt_from_json(require(doc, "melt_state"));
  const auto catalog = catalog_for(doc, bundle);
  std::map<std::string, double> doses;
  if (doc.contains("doses")) {
    if (!doc.at("doses").is_object()) throw Error(ErrorCode::Parse, "'doses' must map alloy names to kg");
    for (const auto& [name, kg] : doc.at("doses").items()) {
      if (!kg.is_number()) throw Error(ErrorCode::Parse, "dose of '" + name + "' is not a number");
      doses[name] = kg.get<double>();
    }
  }
  json predictions = json::object();
  for (const auto& [element, p] : predict_shares(bundle.models, melt, catalog, doses)) {
    predictions[element] = {{"share", p.share}, {"base_share", p.base_share}, {"cluster_id", p.cluster_id}};
  }
  return reply(200, {{"predictions", predictions}});
}

HttpResponse do_model_info(const ModelBundle& bundle, const std::string& element) {
  const auto& model = model_named(bundle, element);
  const json doc = model_to_json(model);
  return reply(200, {{"element", element},
                     {"feature_names", doc.at("feature_names")},
                     {"addition_feature", doc.at("addition_feature")},
                     {"n_clusters", model.clusters.size()},
                     {"classifier_kind", doc.at("classifier").at("kind")},
                     {"hyperparams", doc.at("hyperparams")},
                     {"training_summary", doc.at("training_summary")}});
}

HttpResponse do_clusters(const ModelBundle& bundle, const std::string& element) {
  const auto& model = model_named(bundle, element);
  json lr_names = json::array();
  for (std::size_t f : model.hyperparams.lr_feature_idx) {
    lr_names.push_back(f < model.schema.feature_names.size() ? model.schema.feature_names[f]
                                                             : "f" + std::to_string(f));
  }
  json rows = json::array();
  for (std::size_t c = 0; c < model.clusters.size(); ++c) {
    const auto raw = model.raw_coefficients(c);
    rows.push_back({{"cluster_id", c},
                    {"weights", raw.weights},
                    {"intercept", raw.intercept},
                    {"member_count", model.clusters[c].member_count}});
  }
  return reply(200, {{"element", element}, {"lr_features", lr_names}, {"clusters", rows}});
}

}  // namespace

ServiceConfig load_service_config(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  try {
    ServiceConfig config;
    for (const auto& [element, file] : doc.at("models").items()) {
      config.model_paths[element] = resolve(file.get<std::string>());
    }
    config.catalog_path = resolve(doc.at("catalog").get<std::string>());
    config.listen_address = doc.value("listen", config.listen_address);
    config.log_level = doc.value("log_level", config.log_level);
    return config;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

std::shared_ptr<const ModelBundle> load_bundle(const ServiceConfig& config) {
  if (config.model_paths.empty()) throw Error(ErrorCode::InvalidArgument, "service config lists no models");
  auto bundle = std::make_shared<ModelBundle>();
  for (const auto& [element, path] : config.model_paths) {
    auto model = load_model(path);
    if (!model.fitted()) throw Error(ErrorCode::ModelNotFitted, path.string() + " holds no fitted model");
    if (!model.schema.element.empty() && model.schema.element != element) {
      throw Error(ErrorCode::SchemaMismatch, path.string() + " is a model for '" + model.schema.element +
                                                 "', configured as '" + element + "'");
    }
    bundle->models.emplace(element, std::move(model));
  }
  bundle->catalog = load_catalog(config.catalog_path);
  return bundle;
}

ListenAddress parse_listen_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw Error(ErrorCode::InvalidArgument, "listen address must be host:port, got '" + address + "'");
  }
  ListenAddress out;
  out.host = address.substr(0, colon);
  const auto port = std::string_view(address).substr(colon + 1);
  const auto [end, ec] = std::from_chars(port.data(), port.data() + port.size(), out.port);
  if (ec != std::errc() || end != port.data() + port.size() || out.port < 0 || out.port > 65535) {
    throw Error(ErrorCode::InvalidArgument, "bad port in listen address '" + address + "'");
  }
  return out;
}

Service::Service(std::shared_ptr<const ModelBundle> bundle) : bundle_(std::move(bundle)) {}

Service::~Service() { stop(); }

void Service::swap_bundle(std::shared_ptr<const ModelBundle> bundle) {
  std::lock_guard lock(mutex_);
  bundle_ = std::move(bundle);
}

std::shared_ptr<const ModelBundle> Service::bundle() const {
  std::lock_guard lock(mutex_);
  return bundle_;
}

HttpResponse Service::handle(std::string_view method, std::string_view path, std::string_view body) const {
  const auto snapshot = bundle();
  static const ModelBundle empty;
  const ModelBundle& b = snapshot ? *snapshot : empty;

  if (!path.starts_with(kPrefix)) return error_reply(404, "not_found", "no route for " + std::string(path));
  const auto route = path.substr(kPrefix.size());
  auto expect = [&](std::string_view m) { return method == m; };
  auto method_error = [&] {
    return error_reply(405, "method_not_allowed", std::string(method) + " not allowed on " + std::string(path));
  };

  try {
    if (route == "recommend") return expect("POST") ? do_recommend(b, body) : method_error();
    if (route == "predict") return expect("POST") ? do_predict(b, body) : method_error();
    for (const std::string_view resource : {"model/", "clusters/"}) {
      if (!route.starts_with(resource)) continue;
      const std::string element(route.substr(resource.size()));
      if (element.empty() || element.find('/') != std::string::npos) break;
      if (!expect("GET")) return method_error();
      return resource == "model/" ? do_model_info(b, element) : do_clusters(b, element);
    }
    return error_reply(404, "not_found", "no route for " + std::string(path));
  } catch (const Error& e) {
    return error_reply(status_for(e.code()), to_string(e.code()), e.what());
  } catch (const json::exception& e) {
    return error_reply(400, to_string(ErrorCode::Parse), e.what());
  }
}

int Service::bind(const ListenAddress& address) {
  server_ = std::make_unique<httplib::Server>();
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    const auto out = handle(req.method, req.path, req.body);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  server_->Get(".*", forward);
  server_->Post(".*", forward);
  server_->Put(".*", forward);
  server_->Delete(".*", forward);
  server_->set_logger([](const httplib::Request& req, const httplib::Response& res) {
    spdlog::info("{} {} -> {}", req.method, req.path, res.status);
  });
  int port = address.port;
  if (port == 0) {
    port = server_->bind_to_any_port(address.host);
  } else if (!server_->bind_to_port(address.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw Error(ErrorCode::Io, "cannot listen on " + address.host + ":" + std::to_string(address.port));
  }
  return port;
}

void Service::serve() {
  if (!server_) throw Error(ErrorCode::InvalidArgument, "serve() called before bind()");
  server_->listen_after_bind();
}

void Service::stop() {
  if (server_) server_->stop();
}

}  // namespace ladle
