#pragma once

#include <memory>
#include <string>
#include <utility>

#include "svoa/service.hpp"

namespace httplib {
class Server;
}

namespace svoa {

/// "host:port" -> (host, port). A bare port binds 127.0.0.1.
std::pair<std::string, int> parse_bind_address(const std::string& bind);

/// HTTP front end over a QueryService:
///   GET  /healthz
///   POST /query              {text, top_k?, combination?, weights?, bm25_weight?}
///   GET  /conversations/{id}
///   GET  /stats
///   POST /indices/remove     {quadruplet_ref}
class HttpServer {
 public:
  explicit HttpServer(QueryService& service);
  ~HttpServer();

  /// Binds and serves until stop(); returns false if binding failed.
  bool listen(const std::string& host, int port);
  /// Binds to an ephemeral port and returns it (or -1).
  int bind_any_port(const std::string& host);
  /// Serves on a socket bound by bind_any_port.
  bool listen_after_bind();
  void stop();

 private:
  QueryService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace svoa
