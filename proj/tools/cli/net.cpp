#include "cli/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <memory>

namespace retarget::cli {

namespace {

[[noreturn]] void fail(const std::string& what) { throw NetworkError(what + ": " + std::strerror(errno)); }

std::unique_ptr<addrinfo, decltype(&freeaddrinfo)> resolve(const std::string& host, std::uint16_t port, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* result = nullptr;
  const std::string service = std::to_string(port);
  const int rc = getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &result);
  if (rc != 0) throw NetworkError("cannot resolve '" + host + "': " + gai_strerror(rc));
  return {result, &freeaddrinfo};
}

}  // namespace

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.release();
  }
  return *this;
}

Socket::~Socket() { close(); }

int Socket::release() noexcept {
  const int fd = fd_;
  fd_ = -1;
  return fd;
}

void Socket::close() noexcept {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

Socket listen_tcp(const std::string& host, std::uint16_t port) {
  const auto addrs = resolve(host, port, true);
  std::string last_error = "no usable address";
  for (addrinfo* a = addrs.get(); a != nullptr; a = a->ai_next) {
    Socket s(::socket(a->ai_family, a->ai_socktype, a->ai_protocol));
    if (!s.valid()) continue;
    const int yes = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    if (::bind(s.fd(), a->ai_addr, a->ai_addrlen) == 0 && ::listen(s.fd(), 4) == 0) return s;
    last_error = std::strerror(errno);
  }
  throw NetworkError("cannot listen on " + host + ":" + std::to_string(port) + ": " + last_error);
}

std::uint16_t local_port(const Socket& s) {
  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  if (::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) fail("getsockname");
  if (addr.ss_family == AF_INET6) return ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
  return ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
}

Socket accept_client(const Socket& listener, std::chrono::milliseconds timeout) {
  if (wait_readable(listener, timeout) == Readiness::timeout) return {};
  Socket client(::accept(listener.fd(), nullptr, nullptr));
  if (!client.valid()) {
    if (errno == EINTR || errno == EAGAIN || errno == ECONNABORTED) return {};
    fail("accept");
  }
  const int yes = 1;
  ::setsockopt(client.fd(), IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
  return client;
}

Socket connect_tcp(const std::string& host, std::uint16_t port) {
  const auto addrs = resolve(host, port, false);
  std::string last_error = "no usable address";
  for (addrinfo* a = addrs.get(); a != nullptr; a = a->ai_next) {
    Socket s(::socket(a->ai_family, a->ai_socktype, a->ai_protocol));
    if (!s.valid()) continue;
    if (::connect(s.fd(), a->ai_addr, a->ai_addrlen) == 0) {
      const int yes = 1;
      ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
      return s;
    }
    last_error = std::strerror(errno);
  }
  throw NetworkError("cannot connect to " + host + ":" + std::to_string(port) + ": " + last_error);
}

Readiness wait_readable(const Socket& s, std::chrono::milliseconds timeout) {
  pollfd p{s.fd(), POLLIN, 0};
  const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
  if (rc < 0) {
    if (errno == EINTR) return Readiness::timeout;
    fail("poll");
  }
  return rc == 0 ? Readiness::timeout : Readiness::ready;
}

std::size_t read_some(const Socket& s, char* buffer, std::size_t size) {
  while (true) {
    const ssize_t n = ::recv(s.fd(), buffer, size, 0);
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno == EINTR) continue;
    if (errno == ECONNRESET) return 0;
    fail("recv");
  }
}

void write_all(const Socket& s, std::string_view bytes) {
  while (!bytes.empty()) {
    const ssize_t n = ::send(s.fd(), bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("send");
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

void shutdown_write(const Socket& s) { ::shutdown(s.fd(), SHUT_WR); }

}  // namespace retarget::cli
