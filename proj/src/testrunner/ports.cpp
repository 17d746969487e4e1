#include "appforge/testrunner/ports.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <fmt/format.h>

namespace appforge::testrunner {

bool port_is_free(int port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) return false;
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  const bool ok = ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0;
  ::close(fd);
  return ok;
}

PortLease::PortLease(PortLease&& other) noexcept : owner_(other.owner_), port_(other.port_) {
  other.owner_ = nullptr;
}

PortLease& PortLease::operator=(PortLease&& other) noexcept {
  if (this != &other) {
    release();
    owner_ = other.owner_;
    port_ = other.port_;
    other.owner_ = nullptr;
  }
  return *this;
}

PortLease::~PortLease() { release(); }

void PortLease::release() {
  if (owner_) owner_->release(port_);
  owner_ = nullptr;
}

PortAllocator::PortAllocator(int base_port, int span) : base_(base_port), span_(span) {
  if (base_port <= 0 || base_port > 65535 || span <= 0) throw UsageError("invalid port range");
}

PortLease PortAllocator::allocate(int requested) {
  const int start = requested > 0 ? requested : base_;
  std::lock_guard lock(mu_);
  for (int port = start; port < start + span_ && port <= 65535; ++port) {
    if (reserved_.contains(port) || !port_is_free(port)) continue;
    reserved_.insert(port);
    return PortLease(this, port);
  }
  throw PortsExhausted(fmt::format("no free port in [{}, {})", start, start + span_));
}

bool PortAllocator::reserved(int port) const {
  std::lock_guard lock(mu_);
  return reserved_.contains(port);
}

std::size_t PortAllocator::live() const {
  std::lock_guard lock(mu_);
  return reserved_.size();
}

void PortAllocator::release(int port) {
  std::lock_guard lock(mu_);
  reserved_.erase(port);
}

}  // namespace appforge::testrunner
