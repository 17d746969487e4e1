#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace appforge::util {

std::string sha256_hex(std::string_view data);
std::string sha256_hex(std::span<const std::uint8_t> data);

// Raw 20-byte SHA-1 digest (WebSocket handshake only).
std::string sha1_raw(std::string_view data);

std::string base64_encode(std::span<const std::uint8_t> data);
std::string base64_encode(std::string_view data);
// Throws appforge::Error on invalid input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace appforge::util
