#pragma once

#include "appforge/util/errors.hpp"

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace appforge::testrunner {

class WebSocketError : public Error {
 public:
  using Error::Error;
};

enum class WsOpcode : std::uint8_t { continuation = 0, text = 1, binary = 2, close = 8, ping = 9, pong = 10 };

struct WsFrame {
  bool fin = true;
  WsOpcode opcode = WsOpcode::text;
  std::string payload;
};

// Sec-WebSocket-Accept for a given Sec-WebSocket-Key.
std::string websocket_accept_key(std::string_view key);

// Frame codec. Clients mask, servers do not.
std::string encode_ws_frame(const WsFrame& frame, std::optional<std::array<std::uint8_t, 4>> mask);
// Decodes one frame from the front of `buffer`; returns the bytes consumed,
// or 0 when the buffer does not yet hold a whole frame.
std::size_t decode_ws_frame(std::string_view buffer, WsFrame& out);

// Blocking text-message client, enough for a DevTools endpoint.
class WebSocketClient {
 public:
  WebSocketClient() = default;
  ~WebSocketClient();
  WebSocketClient(const WebSocketClient&) = delete;
  WebSocketClient& operator=(const WebSocketClient&) = delete;

  // url: ws://host:port/path
  void connect(const std::string& url, std::chrono::milliseconds timeout = std::chrono::seconds(10));
  void send_text(std::string_view text);
  // Next complete text message; nullopt on timeout. Pings are answered.
  std::optional<std::string> receive_text(std::chrono::milliseconds timeout);
  void close();
  bool connected() const { return fd_ >= 0; }

 private:
  void write_all(std::string_view data);
  bool fill(std::chrono::steady_clock::time_point deadline);

  int fd_ = -1;
  std::string buffer_;
};

}  // namespace appforge::testrunner
