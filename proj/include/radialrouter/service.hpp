#pragma once

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "radialrouter/data.hpp"
#include "radialrouter/router.hpp"
#include "radialrouter/util.hpp"

namespace radialrouter::service {

using nlohmann::json;

struct Response {
  int status = 200;
  json body;
};

/// Request handling over read-only model state; safe to call concurrently.
class RouteService {
 public:
  RouteService(router::RouterModel model, data::LLMCatalog catalog, std::string checkpoint_id = {})
      : model_(std::move(model)), catalog_(std::move(catalog)), checkpoint_id_(std::move(checkpoint_id)) {
    if (model_.config().satellites != catalog_.size()) {
      throw ConfigError("service: model has " + std::to_string(model_.config().satellites) + " satellites for " +
                        std::to_string(catalog_.size()) + " LLMs");
    }
  }

  const router::RouterModel& model() const noexcept { return model_; }
  const data::LLMCatalog& catalog() const noexcept { return catalog_; }

  /// POST /route with {"embedding": [numbers]}.
  Response route(const std::string& body) const {
    const auto start = std::chrono::steady_clock::now();
    json req;
    try {
      req = json::parse(body);
    } catch (const json::parse_error& e) {
      return error(400, std::string("malformed JSON: ") + e.what());
    }
    if (!req.is_object() || !req.contains("embedding")) return error(400, "body must be an object with an 'embedding' field");
    const auto& arr = req.at("embedding");
    if (!arr.is_array()) return error(400, "'embedding' must be an array of numbers");
    std::vector<double> e;
    e.reserve(arr.size());
    for (const auto& v : arr) {
      if (!v.is_number()) return error(400, "'embedding' must contain only numbers");
      e.push_back(v.get<double>());
      if (!std::isfinite(e.back())) return error(400, "'embedding' contains a non-finite value");
    }
    if (e.size() != model_.config().encoder_dim) {
      return error(422, "embedding has " + std::to_string(e.size()) + " dimensions, the model expects " +
                            std::to_string(model_.config().encoder_dim));
    }
    json out = model_.route(e, catalog_).to_json();
    out["latency_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return {200, out};
  }

  /// GET /healthz.
  Response health() const {
    std::vector<std::string> names;
    for (const auto& e : catalog_.entries()) names.push_back(e.name);
    return {200,
            {{"status", "ok"},
             {"catalog_hash", catalog_.hash()},
             {"llms", names},
             {"model_config", model_.config().to_json()},
             {"parameter_hash", model_.parameter_hash()},
             {"checkpoint", checkpoint_id_},
             {"version", kVersion}}};
  }

 private:
  static Response error(int status, std::string reason) { return {status, {{"error", std::move(reason)}}}; }

  router::RouterModel model_;
  data::LLMCatalog catalog_;
  std::string checkpoint_id_;
};

/// "host:port" -> (host, port).
inline std::pair<std::string, int> parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == bind.size()) {
    throw ValidationError("bind address must be HOST:PORT, got '" + bind + "'");
  }
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(bind.substr(colon + 1), &used);
    if (used != bind.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ValidationError("bind address has an invalid port: '" + bind + "'");
  }
  if (port < 0 || port > 65535) throw ValidationError("bind port out of range: " + std::to_string(port));
  return {bind.substr(0, colon), port};
}

/// HTTP front end: POST /route and GET /healthz.
class HttpServer {
 public:
  explicit HttpServer(std::shared_ptr<const RouteService> service) : service_(std::move(service)) {
    auto reply = [](httplib::Response& res, const Response& r) {
      res.status = r.status;
      res.set_content(r.body.dump(), "application/json");
    };
    server_.Post("/route", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, service_->route(req.body));
    });
    server_.Get("/healthz", [this, reply](const httplib::Request&, httplib::Response& res) {
      reply(res, service_->health());
    });
  }

  ~HttpServer() { stop(); }
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port) {
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw Error("service: cannot bind " + host + ":" + std::to_string(port));
    return port_;
  }

  int port() const noexcept { return port_; }

  /// Serves on the calling thread until stop().
  void run() { server_.listen_after_bind(); }

  /// Serves on a background thread.
  void start() {
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  std::shared_ptr<const RouteService> service_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace radialrouter::service
