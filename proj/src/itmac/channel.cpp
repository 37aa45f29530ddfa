#include "calguard/itmac/channel.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

namespace calguard::itmac {

static_assert(std::endian::native == std::endian::little, "wire format assumes a little-endian host");

namespace {

constexpr std::size_t kHeader = 5;
constexpr std::uint32_t kMaxFrameBytes = 1u << 28;

}  // namespace

Disclosure disclosure_of(MsgType t) {
  switch (t) {
    case MsgType::kHello:
    case MsgType::kResult:
      return Disclosure::kPublic;
    case MsgType::kDealerSeed:
    case MsgType::kChallenge:
    case MsgType::kAbort:
      return Disclosure::kControl;
    case MsgType::kMasked:
      return Disclosure::kMasked;
    case MsgType::kMacCheck:
      return Disclosure::kMacCombination;
    case MsgType::kReveal:
      return Disclosure::kPlaintextValue;
  }
  return Disclosure::kControl;
}

const char* to_string(MsgType t) {
  switch (t) {
    case MsgType::kHello: return "hello";
    case MsgType::kDealerSeed: return "dealer-seed";
    case MsgType::kMasked: return "masked";
    case MsgType::kChallenge: return "challenge";
    case MsgType::kMacCheck: return "mac-check";
    case MsgType::kReveal: return "reveal";
    case MsgType::kResult: return "result";
    case MsgType::kAbort: return "abort";
  }
  return "?";
}

const char* to_string(Disclosure d) {
  switch (d) {
    case Disclosure::kPublic: return "public";
    case Disclosure::kControl: return "control";
    case Disclosure::kMasked: return "masked";
    case Disclosure::kMacCombination: return "mac-combination";
    case Disclosure::kPlaintextValue: return "plaintext-value";
  }
  return "?";
}

std::vector<std::uint8_t> encode_frame(const Frame& f) {
  const auto len = static_cast<std::uint32_t>(f.payload.size() * 8);
  std::vector<std::uint8_t> out(kHeader + len);
  out[0] = static_cast<std::uint8_t>(f.type);
  std::memcpy(out.data() + 1, &len, 4);
  if (len) std::memcpy(out.data() + kHeader, f.payload.data(), len);
  return out;
}

void Channel::send(const Frame& f) {
  auto bytes = encode_frame(f);
  bytes_sent_ += bytes.size();
  if (recording_) transcript_.push_back({true, f.type, f.payload.size()});
  send_bytes(std::move(bytes));
}

Frame Channel::recv() {
  std::uint8_t head[kHeader];
  recv_exact(head, kHeader);
  Frame f;
  if (head[0] < 1 || head[0] > 8) throw SessionError("channel: unknown message type");
  f.type = static_cast<MsgType>(head[0]);
  std::uint32_t len = 0;
  std::memcpy(&len, head + 1, 4);
  if (len % 8 != 0 || len > kMaxFrameBytes) throw SessionError("channel: malformed frame length");
  f.payload.resize(len / 8);
  if (len) recv_exact(reinterpret_cast<std::uint8_t*>(f.payload.data()), len);
  bytes_received_ += kHeader + len;
  if (recording_) transcript_.push_back({false, f.type, f.payload.size()});
  return f;
}

// ---------------------------------------------------------------------------
// In-process channel
// ---------------------------------------------------------------------------

namespace {

struct Pipe {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::vector<std::uint8_t>> chunks;
  std::size_t offset = 0;
  bool closed = false;

  void push(std::vector<std::uint8_t> bytes) {
    {
      std::lock_guard lock(mu);
      if (closed) throw SessionError("channel: peer closed");
      chunks.push_back(std::move(bytes));
    }
    cv.notify_one();
  }

  void pop(std::uint8_t* out, std::size_t n) {
    std::unique_lock lock(mu);
    while (n > 0) {
      cv.wait(lock, [&] { return !chunks.empty() || closed; });
      if (chunks.empty()) throw SessionError("channel: peer closed");
      auto& front = chunks.front();
      const std::size_t take = std::min(n, front.size() - offset);
      std::memcpy(out, front.data() + offset, take);
      out += take;
      n -= take;
      offset += take;
      if (offset == front.size()) {
        chunks.pop_front();
        offset = 0;
      }
    }
  }

  void close() {
    {
      std::lock_guard lock(mu);
      closed = true;
    }
    cv.notify_all();
  }
};

class MemoryChannel : public Channel {
 public:
  MemoryChannel(std::shared_ptr<Pipe> in, std::shared_ptr<Pipe> out)
      : in_(std::move(in)), out_(std::move(out)) {}
  ~MemoryChannel() override {
    // The peer may still drain what we already sent.
    out_->close();
    in_->close();
  }

 protected:
  void send_bytes(std::vector<std::uint8_t> bytes) override { out_->push(std::move(bytes)); }
  void recv_exact(std::uint8_t* out, std::size_t n) override { in_->pop(out, n); }

 private:
  std::shared_ptr<Pipe> in_;
  std::shared_ptr<Pipe> out_;
};

}  // namespace

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> memory_channel_pair() {
  auto a = std::make_shared<Pipe>();
  auto b = std::make_shared<Pipe>();
  return {std::make_unique<MemoryChannel>(a, b), std::make_unique<MemoryChannel>(b, a)};
}

// ---------------------------------------------------------------------------
// TCP
// ---------------------------------------------------------------------------

namespace {

class TcpChannel : public Channel {
 public:
  explicit TcpChannel(int fd) : fd_(fd) {
    int one = 1;
    setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  ~TcpChannel() override { ::close(fd_); }

 protected:
  void send_bytes(std::vector<std::uint8_t> bytes) override {
    std::size_t done = 0;
    while (done < bytes.size()) {
      const ssize_t n = ::send(fd_, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw SessionError(std::string("tcp send: ") + std::strerror(errno));
      done += static_cast<std::size_t>(n);
    }
  }
  void recv_exact(std::uint8_t* out, std::size_t n) override {
    while (n > 0) {
      const ssize_t r = ::recv(fd_, out, n, 0);
      if (r < 0 && errno == EINTR) continue;
      if (r == 0) throw SessionError("tcp recv: connection closed by peer");
      if (r < 0) throw SessionError(std::string("tcp recv: ") + std::strerror(errno));
      out += r;
      n -= static_cast<std::size_t>(r);
    }
  }

 private:
  int fd_;
};

}  // namespace

std::unique_ptr<Channel> tcp_connect(const std::string& host, std::uint16_t port, int retry_ms) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0 || !res) {
    throw SessionError("tcp: cannot resolve '" + host + "'");
  }
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(retry_ms);
  for (;;) {
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
      const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
        freeaddrinfo(res);
        return std::make_unique<TcpChannel>(fd);
      }
      ::close(fd);
    }
    if (std::chrono::steady_clock::now() >= deadline) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  freeaddrinfo(res);
  throw SessionError("tcp: cannot connect to " + host + ":" + service);
}

TcpListener::TcpListener(std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw SessionError("tcp: socket() failed");
  int one = 1;
  setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 1) != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd_);
    throw SessionError("tcp: cannot listen on port " + std::to_string(port) + ": " + err);
  }
  socklen_t len = sizeof addr;
  getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Channel> TcpListener::accept_one() {
  for (;;) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) {
      ::close(fd_);
      fd_ = -1;
      return std::make_unique<TcpChannel>(fd);
    }
    if (errno != EINTR) throw SessionError(std::string("tcp accept: ") + std::strerror(errno));
  }
}

}  // namespace calguard::itmac
