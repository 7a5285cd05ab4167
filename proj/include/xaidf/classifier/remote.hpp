#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

#include <fcntl.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "xaidf/classifier/classifier.hpp"
#include "xaidf/classifier/wire_protocol.hpp"
#include "xaidf/error.hpp"

namespace xaidf {

struct RemoteOptions {
  std::chrono::milliseconds connect_timeout{5000};
  std::chrono::milliseconds io_timeout{60000};
  int retries = 2;  // extra attempts after a transport failure
};

namespace detail {

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      close();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  void close() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

inline std::string errno_text() { return std::strerror(errno); }

inline Socket connect_tcp(const std::string& host, const std::string& port, const RemoteOptions& opts) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw TransportError("cannot resolve " + host + ":" + port + ": " + ::gai_strerror(rc));
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, &::freeaddrinfo);
  std::string last_error = "no addresses";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    Socket sock(::socket(ai->ai_family, ai->ai_socktype | SOCK_NONBLOCK, ai->ai_protocol));
    if (!sock.valid()) {
      last_error = errno_text();
      continue;
    }
    if (::connect(sock.fd(), ai->ai_addr, ai->ai_addrlen) != 0) {
      if (errno != EINPROGRESS) {
        last_error = errno_text();
        continue;
      }
      pollfd pfd{sock.fd(), POLLOUT, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(opts.connect_timeout.count()));
      if (ready <= 0) {
        last_error = ready == 0 ? "connect timed out" : errno_text();
        continue;
      }
      int err = 0;
      socklen_t len = sizeof err;
      ::getsockopt(sock.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
      if (err != 0) {
        last_error = std::strerror(err);
        continue;
      }
    }
    // Back to blocking mode with per-call timeouts.
    const int flags = ::fcntl(sock.fd(), F_GETFL, 0);
    ::fcntl(sock.fd(), F_SETFL, flags & ~O_NONBLOCK);
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(opts.io_timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((opts.io_timeout.count() % 1000) * 1000);
    ::setsockopt(sock.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(sock.fd(), SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
    int one = 1;
    ::setsockopt(sock.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return sock;
  }
  throw TransportError("cannot connect to " + host + ":" + port + ": " + last_error);
}

inline void send_all(const Socket& sock, const wire::Bytes& bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(sock.fd(), bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      throw TransportError("send failed after " + std::to_string(sent) + " of " + std::to_string(bytes.size()) +
                           " bytes: " + errno_text());
    }
    sent += static_cast<std::size_t>(n);
  }
}

// ReadExact over a socket; tracks the total bytes consumed for error messages.
inline wire::ReadExact socket_reader(const Socket& sock) {
  auto total = std::make_shared<std::size_t>(0);
  const int fd = sock.fd();
  return [fd, total](std::uint8_t* dst, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
      const ssize_t r = ::recv(fd, dst + got, n - got, 0);
      if (r < 0 && errno == EINTR) continue;
      if (r <= 0) {
        const std::string why = r == 0 ? "connection closed" : errno_text();
        throw TransportError(why + ": received " + std::to_string(*total + got) + " bytes, expected " +
                             std::to_string(*total + n));
      }
      got += static_cast<std::size_t>(r);
    }
    *total += n;
  };
}

}  // namespace detail

/// Classifier served over the XDFC/XDFR wire protocol. Calls are serialized on
/// one connection; a transport failure drops the connection and the request is
/// retried on a fresh one up to `RemoteOptions::retries` times. Responses are
/// validated, never normalized.
class RemoteClassifier final : public Classifier {
 public:
  RemoteClassifier(std::string host, std::string port, RemoteOptions options = {})
      : host_(std::move(host)), port_(std::move(port)), options_(options) {}

  // Class names come with the first response; before any call a one-image
  // probe request fetches them.
  const ClassNames& class_names() const override {
    {
      std::lock_guard lock(mutex_);
      if (classes_) return classes_;
    }
    const Image probe = Image::filled(kMinImageSide, kMinImageSide, 0.5);
    predict_batch(std::span<const Image>(&probe, 1));
    std::lock_guard lock(mutex_);
    return classes_;
  }

  const std::string& endpoint_host() const noexcept { return host_; }
  const std::string& endpoint_port() const noexcept { return port_; }

 protected:
  std::vector<Prediction> do_predict(std::span<const Image> images) const override {
    const wire::Bytes request = wire::encode_request(images);
    std::lock_guard lock(mutex_);
    for (int attempt = 0;; ++attempt) {
      try {
        if (!socket_.valid()) socket_ = detail::connect_tcp(host_, port_, options_);
        detail::send_all(socket_, request);
        return wire::read_response(detail::socket_reader(socket_), images.size(), classes_);
      } catch (const TransportError&) {
        socket_.close();
        if (attempt >= options_.retries) throw;
      } catch (...) {
        // Stream position is unknown after a protocol violation.
        socket_.close();
        throw;
      }
    }
  }

 private:
  std::string host_;
  std::string port_;
  RemoteOptions options_;
  mutable std::mutex mutex_;
  mutable detail::Socket socket_;
  mutable ClassNames classes_;
};

// Parses "host:port" (the last colon separates the port).
inline ClassifierHandle remote_classifier(const std::string& endpoint, RemoteOptions options = {}) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == endpoint.size()) {
    throw InvalidArgument("remote endpoint must be host:port, got \"" + endpoint + "\"");
  }
  return std::make_shared<const RemoteClassifier>(endpoint.substr(0, colon), endpoint.substr(colon + 1), options);
}

}  // namespace xaidf
