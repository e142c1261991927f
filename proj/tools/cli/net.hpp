#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace retarget::cli {

class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Owning wrapper around a POSIX stream socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  ~Socket();

  bool valid() const noexcept { return fd_ >= 0; }
  int fd() const noexcept { return fd_; }
  int release() noexcept;
  void close() noexcept;

 private:
  int fd_ = -1;
};

enum class Readiness { ready, timeout };

/// Listening TCP socket; port 0 picks an ephemeral port.
Socket listen_tcp(const std::string& host, std::uint16_t port);
std::uint16_t local_port(const Socket& s);
/// Invalid socket on timeout.
Socket accept_client(const Socket& listener, std::chrono::milliseconds timeout);
Socket connect_tcp(const std::string& host, std::uint16_t port);

Readiness wait_readable(const Socket& s, std::chrono::milliseconds timeout);
/// Reads what is available; returns 0 at end of stream.
std::size_t read_some(const Socket& s, char* buffer, std::size_t size);
void write_all(const Socket& s, std::string_view bytes);
/// Signals end of stream to the peer while keeping the read side open.
void shutdown_write(const Socket& s);

}  // namespace retarget::cli
