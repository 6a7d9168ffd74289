#include "svoa/http_server.hpp"

#include <httplib.h>

namespace svoa {
namespace {

void reply(httplib::Response& res, const ServiceResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

}  // namespace

std::pair<std::string, int> parse_bind_address(const std::string& bind) {
  const auto colon = bind.rfind(':');
  std::string host = colon == std::string::npos ? "127.0.0.1" : bind.substr(0, colon);
  const std::string port_str = colon == std::string::npos ? bind : bind.substr(colon + 1);
  if (host.empty()) host = "0.0.0.0";
  try {
    std::size_t used = 0;
    const int port = std::stoi(port_str, &used);
    if (used == port_str.size() && port >= 0 && port <= 65535) return {host, port};
  } catch (const std::exception&) {
  }
  throw ContractViolation("bad bind address '" + bind + "' (expected host:port)");
}

HttpServer::HttpServer(QueryService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  s.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, service_.handle_healthz());
  });
  s.Post("/query", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, service_.handle_query(req.body));
  });
  s.Get(R"(/conversations/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, service_.handle_conversation(req.matches[1]));
  });
  s.Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, service_.handle_stats());
  });
  s.Post("/indices/remove", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, service_.handle_remove(req.body));
  });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    reply(res, {500, {{"error", what}}});
  });
}

HttpServer::~HttpServer() = default;

bool HttpServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

int HttpServer::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpServer::listen_after_bind() { return server_->listen_after_bind(); }

void HttpServer::stop() { server_->stop(); }

}  // namespace svoa
