#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include "memtrade/market.hpp"

namespace httplib {
class Server;
}

namespace memtrade::service {

/// HTTP front of the platform. Bodies follow the wire JSON schema; errors
/// come back as {"error": "..."} with a 4xx status.
class PlatformService {
 public:
  explicit PlatformService(market::Platform& platform);
  ~PlatformService();

  PlatformService(const PlatformService&) = delete;
  PlatformService& operator=(const PlatformService&) = delete;

  /// Binds and serves on a background thread; port 0 picks a free port.
  Result<int> start(const std::string& host, int port);
  void stop();
  int port() const { return port_; }

  /// Blocking serve for `platform serve`.
  Status run(const std::string& host, int port);

 private:
  void install_routes();

  market::Platform& platform_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace memtrade::service
