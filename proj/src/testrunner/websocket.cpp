#include "appforge/testrunner/websocket.hpp"

#include "appforge/util/hash.hpp"
#include "appforge/util/text.hpp"

#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <fmt/format.h>

#include <cerrno>
#include <cstring>
#include <random>

namespace appforge::testrunner {

std::string websocket_accept_key(std::string_view key) {
  const std::string joined = std::string(key) + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  const auto digest = util::sha1_raw(joined);
  return util::base64_encode(digest);
}

std::string encode_ws_frame(const WsFrame& frame, std::optional<std::array<std::uint8_t, 4>> mask) {
  std::string out;
  out.push_back(static_cast<char>((frame.fin ? 0x80 : 0x00) | static_cast<std::uint8_t>(frame.opcode)));
  const std::uint64_t n = frame.payload.size();
  const std::uint8_t mask_bit = mask ? 0x80 : 0x00;
  if (n < 126) {
    out.push_back(static_cast<char>(mask_bit | n));
  } else if (n <= 0xFFFF) {
    out.push_back(static_cast<char>(mask_bit | 126));
    out.push_back(static_cast<char>((n >> 8) & 0xFF));
    out.push_back(static_cast<char>(n & 0xFF));
  } else {
    out.push_back(static_cast<char>(mask_bit | 127));
    for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<char>((n >> shift) & 0xFF));
  }
  if (mask) {
    for (auto b : *mask) out.push_back(static_cast<char>(b));
    for (std::size_t i = 0; i < n; ++i)
      out.push_back(static_cast<char>(static_cast<std::uint8_t>(frame.payload[i]) ^ (*mask)[i % 4]));
  } else {
    out += frame.payload;
  }
  return out;
}

std::size_t decode_ws_frame(std::string_view buf, WsFrame& out) {
  if (buf.size() < 2) return 0;
  const auto b0 = static_cast<std::uint8_t>(buf[0]);
  const auto b1 = static_cast<std::uint8_t>(buf[1]);
  std::size_t pos = 2;
  std::uint64_t n = b1 & 0x7F;
  if (n == 126) {
    if (buf.size() < 4) return 0;
    n = (static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf[2])) << 8) | static_cast<std::uint8_t>(buf[3]);
    pos = 4;
  } else if (n == 127) {
    if (buf.size() < 10) return 0;
    n = 0;
    for (int i = 0; i < 8; ++i) n = (n << 8) | static_cast<std::uint8_t>(buf[2 + i]);
    pos = 10;
  }
  const bool masked = b1 & 0x80;
  std::array<std::uint8_t, 4> mask{};
  if (masked) {
    if (buf.size() < pos + 4) return 0;
    for (int i = 0; i < 4; ++i) mask[i] = static_cast<std::uint8_t>(buf[pos + i]);
    pos += 4;
  }
  if (buf.size() - pos < n) return 0;
  out.fin = b0 & 0x80;
  out.opcode = static_cast<WsOpcode>(b0 & 0x0F);
  out.payload.assign(buf.substr(pos, n));
  if (masked)
    for (std::size_t i = 0; i < out.payload.size(); ++i)
      out.payload[i] = static_cast<char>(static_cast<std::uint8_t>(out.payload[i]) ^ mask[i % 4]);
  return pos + n;
}

WebSocketClient::~WebSocketClient() { close(); }

void WebSocketClient::connect(const std::string& url, std::chrono::milliseconds timeout) {
  if (!url.starts_with("ws://")) throw WebSocketError(fmt::format("unsupported WebSocket URL '{}'", url));
  const auto rest = url.substr(5);
  const auto slash = rest.find('/');
  const auto authority = rest.substr(0, slash);
  const auto path = slash == std::string::npos ? "/" : rest.substr(slash);
  const auto colon = authority.rfind(':');
  const auto host = authority.substr(0, colon);
  const auto port = colon == std::string::npos ? "80" : authority.substr(colon + 1);

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || !res)
    throw WebSocketError(fmt::format("cannot resolve {}", authority));
  for (auto* ai = res; ai; ai = ai->ai_next) {
    fd_ = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd_ < 0) continue;
    if (::connect(fd_, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd_);
    fd_ = -1;
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw WebSocketError(fmt::format("cannot connect to {}", authority));

  std::random_device rd;
  std::string nonce(16, '\0');
  for (auto& c : nonce) c = static_cast<char>(rd() & 0xFF);
  const auto key = util::base64_encode(std::vector<std::uint8_t>(nonce.begin(), nonce.end()));
  write_all(fmt::format("GET {} HTTP/1.1\r\nHost: {}\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                        "Sec-WebSocket-Key: {}\r\nSec-WebSocket-Version: 13\r\n\r\n",
                        path, authority, key));
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::size_t header_end;
  while ((header_end = buffer_.find("\r\n\r\n")) == std::string::npos) {
    if (!fill(deadline)) {
      close();
      throw WebSocketError("WebSocket handshake timed out");
    }
  }
  const auto head = buffer_.substr(0, header_end);
  buffer_.erase(0, header_end + 4);
  const auto lines = util::split_lines(head);
  if (lines.empty() || lines[0].find(" 101") == std::string::npos) {
    close();
    throw WebSocketError(fmt::format("WebSocket upgrade refused: {}", lines.empty() ? "" : lines[0]));
  }
  std::string accept;
  for (const auto& line : lines) {
    const auto c = line.find(':');
    if (c != std::string::npos && util::iequals(util::trim(line.substr(0, c)), "Sec-WebSocket-Accept"))
      accept = util::trim(line.substr(c + 1));
  }
  if (accept != websocket_accept_key(key)) {
    close();
    throw WebSocketError("WebSocket handshake returned a wrong accept key");
  }
}

void WebSocketClient::write_all(std::string_view data) {
  while (!data.empty()) {
    const auto n = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw WebSocketError(fmt::format("WebSocket write failed: {}", std::strerror(errno)));
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

bool WebSocketClient::fill(std::chrono::steady_clock::time_point deadline) {
  if (fd_ < 0) throw WebSocketError("WebSocket is not connected");
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
  if (left.count() <= 0) return false;
  pollfd p{fd_, POLLIN, 0};
  const int r = ::poll(&p, 1, static_cast<int>(left.count()));
  if (r < 0 && errno == EINTR) return true;
  if (r <= 0) return false;
  char buf[65536];
  const auto n = ::recv(fd_, buf, sizeof buf, 0);
  if (n < 0 && errno == EINTR) return true;
  if (n <= 0) {
    close();
    throw WebSocketError("WebSocket connection closed by peer");
  }
  buffer_.append(buf, static_cast<std::size_t>(n));
  return true;
}

void WebSocketClient::send_text(std::string_view text) {
  if (fd_ < 0) throw WebSocketError("WebSocket is not connected");
  std::random_device rd;
  std::array<std::uint8_t, 4> mask{};
  for (auto& b : mask) b = static_cast<std::uint8_t>(rd() & 0xFF);
  write_all(encode_ws_frame({true, WsOpcode::text, std::string(text)}, mask));
}

std::optional<std::string> WebSocketClient::receive_text(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::string message;
  bool in_message = false;
  for (;;) {
    WsFrame frame;
    const auto used = decode_ws_frame(buffer_, frame);
    if (used == 0) {
      if (!fill(deadline)) return std::nullopt;
      continue;
    }
    buffer_.erase(0, used);
    switch (frame.opcode) {
      case WsOpcode::ping: {
        std::array<std::uint8_t, 4> mask{1, 2, 3, 4};
        write_all(encode_ws_frame({true, WsOpcode::pong, frame.payload}, mask));
        break;
      }
      case WsOpcode::pong: break;
      case WsOpcode::close: close(); throw WebSocketError("WebSocket closed by peer");
      case WsOpcode::text:
      case WsOpcode::binary:
        message = frame.payload;
        in_message = true;
        if (frame.fin) return message;
        break;
      case WsOpcode::continuation:
        if (!in_message) throw WebSocketError("unexpected continuation frame");
        message += frame.payload;
        if (frame.fin) return message;
        break;
    }
  }
}

void WebSocketClient::close() {
  if (fd_ < 0) return;
  std::array<std::uint8_t, 4> mask{0, 0, 0, 0};
  const auto frame = encode_ws_frame({true, WsOpcode::close, ""}, mask);
  [[maybe_unused]] auto n = ::send(fd_, frame.data(), frame.size(), MSG_NOSIGNAL);
  ::close(fd_);
  fd_ = -1;
}

}  // namespace appforge::testrunner
