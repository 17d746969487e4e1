#pragma once

#include "appforge/util/errors.hpp"

#include <mutex>
#include <set>

namespace appforge::testrunner {

class PortsExhausted : public Error {
 public:
  using Error::Error;
};

// True when 127.0.0.1:port can be bound right now.
bool port_is_free(int port);

class PortAllocator;

// A reserved port, released on destruction.
class PortLease {
 public:
  PortLease() = default;
  PortLease(PortAllocator* owner, int port) : owner_(owner), port_(port) {}
  PortLease(PortLease&& other) noexcept;
  PortLease& operator=(PortLease&& other) noexcept;
  PortLease(const PortLease&) = delete;
  PortLease& operator=(const PortLease&) = delete;
  ~PortLease();

  int port() const { return port_; }
  void release();

 private:
  PortAllocator* owner_ = nullptr;
  int port_ = 0;
};

// Hands out distinct ports: starting at the requested (or base) port, probe
// upward for one that is neither reserved nor bound. Thread-safe.
class PortAllocator {
 public:
  explicit PortAllocator(int base_port = 41000, int span = 2000);

  PortLease allocate(int requested = 0);
  bool reserved(int port) const;
  std::size_t live() const;

 private:
  friend class PortLease;
  void release(int port);

  int base_;
  int span_;
  mutable std::mutex mu_;
  std::set<int> reserved_;
};

}  // namespace appforge::testrunner
