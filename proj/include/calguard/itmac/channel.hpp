#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace calguard::itmac {

// Channel loss, malformed frames, parameter mismatch, exhausted dealer.
// Kept distinct from ProtocolAbort, which signals a failed check.
class SessionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MsgType : std::uint8_t {
  kHello = 1,
  kDealerSeed = 2,
  kMasked = 3,     // commitment deltas and multiplication openings
  kChallenge = 4,  // check request (prover) / challenge seed (verifier)
  kMacCheck = 5,   // one random linear combination of MACs
  kReveal = 6,     // value and MAC in the clear
  kResult = 7,
  kAbort = 8,
};

// What a frame discloses to its receiver.
enum class Disclosure { kPublic, kControl, kMasked, kMacCombination, kPlaintextValue };

Disclosure disclosure_of(MsgType t);
const char* to_string(MsgType t);
const char* to_string(Disclosure d);

// Payload is a list of 8-byte little-endian words.
struct Frame {
  MsgType type = MsgType::kAbort;
  std::vector<std::uint64_t> payload;
};

struct TranscriptEntry {
  bool sent = false;
  MsgType type = MsgType::kAbort;
  std::size_t words = 0;
};

class Channel {
 public:
  virtual ~Channel() = default;

  void send(const Frame& f);
  Frame recv();

  std::uint64_t bytes_sent() const { return bytes_sent_; }
  std::uint64_t bytes_received() const { return bytes_received_; }

  void record_transcript(bool on) { recording_ = on; }
  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }

 protected:
  virtual void send_bytes(std::vector<std::uint8_t> bytes) = 0;
  virtual void recv_exact(std::uint8_t* out, std::size_t n) = 0;

 private:
  std::uint64_t bytes_sent_ = 0;
  std::uint64_t bytes_received_ = 0;
  bool recording_ = false;
  std::vector<TranscriptEntry> transcript_;
};

std::vector<std::uint8_t> encode_frame(const Frame& f);

// Two connected in-process endpoints.
std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> memory_channel_pair();

std::unique_ptr<Channel> tcp_connect(const std::string& host, std::uint16_t port,
                                     int retry_ms = 5000);

// Binds, accepts exactly one connection, then closes the listening socket.
class TcpListener {
 public:
  explicit TcpListener(std::uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  std::unique_ptr<Channel> accept_one();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace calguard::itmac
