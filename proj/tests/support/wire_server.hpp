#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <thread>
#include <vector>

#include "xaidf/classifier/classifier.hpp"
#include "xaidf/classifier/wire_protocol.hpp"
#include "xaidf/error.hpp"

namespace xaidf::testing {

enum class Fault {
  none,                 // well-formed echo of the backend classifier
  bad_magic,
  bad_version,
  zero_header_length,
  huge_header_length,
  not_normalized,       // first row scaled by 1.5
  negative_probability,
  nan_probability,
  truncated_payload,    // half the payload, then close
  wrong_batch,
  missing_real_class,
  close_immediately,    // read the request, close without answering
};

// Single-threaded loopback server speaking the XDFC/XDFR protocol.
class WireTestServer {
 public:
  WireTestServer(ClassifierHandle backend, Fault fault = Fault::none) : backend_(std::move(backend)), fault_(fault) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("socket failed");
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 8) != 0) {
      ::close(listen_fd_);
      throw std::runtime_error("bind/listen failed");
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    thread_ = std::thread([this] { serve(); });
  }

  WireTestServer(const WireTestServer&) = delete;
  WireTestServer& operator=(const WireTestServer&) = delete;

  ~WireTestServer() {
    stop_ = true;
    thread_.join();
    ::close(listen_fd_);
  }

  int port() const noexcept { return port_; }
  std::string endpoint() const { return "127.0.0.1:" + std::to_string(port_); }
  std::size_t requests() const noexcept { return requests_.load(); }
  std::size_t connections() const noexcept { return connections_.load(); }

 private:
  static bool read_exact(int fd, std::uint8_t* dst, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
      const ssize_t r = ::recv(fd, dst + got, n - got, 0);
      if (r <= 0) return false;
      got += static_cast<std::size_t>(r);
    }
    return true;
  }

  static void write_all(int fd, const std::uint8_t* src, std::size_t n) {
    std::size_t sent = 0;
    while (sent < n) {
      const ssize_t w = ::send(fd, src + sent, n - sent, MSG_NOSIGNAL);
      if (w <= 0) return;
      sent += static_cast<std::size_t>(w);
    }
  }

  void serve() {
    while (!stop_) {
      pollfd p{listen_fd_, POLLIN, 0};
      if (::poll(&p, 1, 50) <= 0) continue;
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) continue;
      ++connections_;
      handle(fd);
      ::close(fd);
    }
  }

  void handle(int fd) {
    while (!stop_) {
      pollfd p{fd, POLLIN, 0};
      const int ready = ::poll(&p, 1, 50);
      if (ready == 0) continue;
      if (ready < 0) return;
      wire::Request request;
      try {
        request = wire::read_request([fd](std::uint8_t* dst, std::size_t n) {
          if (!read_exact(fd, dst, n)) throw TransportError("client closed");
        });
      } catch (const std::exception&) {
        return;
      }
      ++requests_;
      if (fault_ == Fault::close_immediately) return;
      std::vector<Image> images;
      for (std::size_t i = 0; i < request.batch; ++i) images.push_back(request.image(i));
      const auto preds = backend_->predict_batch(images);
      std::vector<std::string> classes = *backend_->class_names();
      std::vector<std::vector<float>> rows;
      for (const auto& pr : preds) rows.emplace_back(pr.probabilities().begin(), pr.probabilities().end());
      if (fault_ == Fault::wrong_batch) rows.push_back(rows.front());
      if (fault_ == Fault::missing_real_class) {
        for (auto& c : classes) {
          if (c == "real") c = "pristine";
        }
      }
      if (fault_ == Fault::not_normalized) {
        for (float& v : rows.front()) v *= 1.5f;
      }
      if (fault_ == Fault::negative_probability) {
        rows.front()[0] = -rows.front()[0] - 0.25f;
        rows.front()[1] = 1.0f - rows.front()[0];
      }
      if (fault_ == Fault::nan_probability) rows.front()[0] = std::nanf("");
      wire::Bytes bytes = wire::encode_response(classes, rows);
      if (fault_ == Fault::bad_magic) bytes[3] = 'X';
      if (fault_ == Fault::bad_version) bytes[4] = 0x02;
      if (fault_ == Fault::zero_header_length) std::memset(bytes.data() + 5, 0, 4);
      if (fault_ == Fault::huge_header_length) {
        const std::uint32_t huge = wire::kMaxHeaderSize + 1;
        std::memcpy(bytes.data() + 5, &huge, 4);
      }
      if (fault_ == Fault::truncated_payload) {
        std::uint32_t header_len = 0;
        std::memcpy(&header_len, bytes.data() + 5, 4);
        const std::size_t payload_start = wire::kPrefixSize + header_len;
        write_all(fd, bytes.data(), payload_start + (bytes.size() - payload_start) / 2);
        return;
      }
      write_all(fd, bytes.data(), bytes.size());
      if (fault_ != Fault::none) return;
    }
  }

  ClassifierHandle backend_;
  Fault fault_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stop_{false};
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> connections_{0};
  std::thread thread_;
};

}  // namespace xaidf::testing
