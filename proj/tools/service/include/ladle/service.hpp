#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "ladle/recommender.hpp"

namespace httplib {
class Server;
}

namespace ladle {

struct ServiceConfig {
  std::map<std::string, std::filesystem::path> model_paths;  // element -> model file
  std::filesystem::path catalog_path;
  std::string listen_address = "127.0.0.1:8080";
  std::string log_level = "info";
};

// Relative paths inside the file are resolved against its directory.
ServiceConfig load_service_config(const std::filesystem::path& path);

/// Everything a request needs; never mutated once published.
struct ModelBundle {
  ModelSet models;
  std::vector<Ferroalloy> catalog;
};

// Loads and validates every referenced file; throws on the first failure.
std::shared_ptr<const ModelBundle> load_bundle(const ServiceConfig& config);

struct HttpResponse {
  int status = 200;
  std::string body;
};

struct ListenAddress {
  std::string host;
  int port = 0;
};

ListenAddress parse_listen_address(const std::string& address);

class Service {
 public:
  explicit Service(std::shared_ptr<const ModelBundle> bundle);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Routes one request. Pure given the current bundle.
  HttpResponse handle(std::string_view method, std::string_view path, std::string_view body) const;

  // Readers holding the previous bundle finish on it; later requests see the
  // new one.
  void swap_bundle(std::shared_ptr<const ModelBundle> bundle);
  std::shared_ptr<const ModelBundle> bundle() const;

  // Binds (port 0 picks a free one) and returns the bound port.
  int bind(const ListenAddress& address);
  // Blocks until stop().
  void serve();
  void stop();

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const ModelBundle> bundle_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace ladle
