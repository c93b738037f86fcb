#pragma once

// Peer-to-peer channels between parties.
//
// Wire frame: 8-byte little-endian payload length, 8-byte little-endian step
// id, raw payload. Payloads above the chunk size are written in pieces; the
// receiver sees one frame either way.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mpfix/metrics.hpp"

namespace mpfix {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kFrameHeaderBytes = 16;
inline constexpr std::size_t kDefaultChunkBytes = std::size_t{1} << 20;
inline constexpr std::uint64_t kHandshakeStep = ~std::uint64_t{0};
inline constexpr std::uint32_t kProtocolVersion = 1;

enum class TransportKind { kInProcess, kTcp };

const char* to_string(TransportKind kind);
TransportKind parse_transport_kind(const std::string& s);

struct Frame {
  std::uint64_t step = 0;
  Bytes payload;
};

// Reliable, ordered, framed channel to one peer.
class Endpoint {
 public:
  explicit Endpoint(int peer) : peer_(peer) {}
  virtual ~Endpoint() = default;

  virtual void send(std::uint64_t step, Bytes payload) = 0;
  virtual Frame receive(std::chrono::milliseconds timeout) = 0;
  virtual TransportKind kind() const = 0;

  int peer() const { return peer_; }
  std::uint64_t bytes_sent() const { return bytes_sent_; }
  std::uint64_t bytes_received() const { return bytes_received_; }
  std::uint64_t messages_sent() const { return messages_sent_; }

 protected:
  int peer_;
  std::uint64_t bytes_sent_ = 0;
  std::uint64_t bytes_received_ = 0;
  std::uint64_t messages_sent_ = 0;
};

// A party's view of the full mesh. exchange_all is the only communication
// primitive protocols use: one call is one synchronous round.
class Network {
 public:
  Network(int party, int parties) : party_(party), parties_(parties), metrics_(parties) {}
  virtual ~Network() = default;
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  int party() const { return party_; }
  int parties() const { return parties_; }

  // Sends outgoing[peer] to every peer and returns what each peer sent us
  // (own slot empty). `expected[peer]` is the payload size this party must
  // receive; a different size is a desync.
  std::vector<Bytes> exchange_all(std::vector<Bytes> outgoing, std::span<const std::size_t> expected);

  // Same payload to every peer, same size expected back.
  std::vector<Bytes> broadcast(const Bytes& payload);

  // Verifies protocol version and configuration digest with every peer.
  virtual void handshake(const std::string& config_digest) = 0;

  virtual bool is_dry_run() const { return false; }

  CommMetrics& metrics() { return metrics_; }
  const CommMetrics& metrics() const { return metrics_; }
  std::uint64_t step() const { return step_; }

  // Test hook: shifts the local step counter to provoke a desync.
  void skew_step_for_testing(std::int64_t delta) { step_ += static_cast<std::uint64_t>(delta); }

 protected:
  virtual std::vector<Bytes> do_exchange(std::uint64_t step, std::vector<Bytes> outgoing,
                                         std::span<const std::size_t> expected) = 0;

  int party_;
  int parties_;
  CommMetrics metrics_;
  std::uint64_t step_ = 0;
};

// Full mesh over endpoints (in-process pipes or TCP sockets).
class MeshNetwork final : public Network {
 public:
  MeshNetwork(int party, int parties, std::vector<std::unique_ptr<Endpoint>> endpoints,
              std::chrono::milliseconds timeout);
  ~MeshNetwork() override;

  void handshake(const std::string& config_digest) override;
  Endpoint& endpoint(int peer) { return *endpoints_.at(peer); }
  std::size_t endpoint_count() const;

 protected:
  std::vector<Bytes> do_exchange(std::uint64_t step, std::vector<Bytes> outgoing,
                                 std::span<const std::size_t> expected) override;

 private:
  std::vector<std::unique_ptr<Endpoint>> endpoints_;  // indexed by peer, null for self
  std::chrono::milliseconds timeout_;
};

// Stand-in network for the demand-counting pass: every receive yields zeros
// of the expected size. Metrics are still recorded.
class DryRunNetwork final : public Network {
 public:
  using Network::Network;
  void handshake(const std::string&) override {}
  bool is_dry_run() const override { return true; }

 protected:
  std::vector<Bytes> do_exchange(std::uint64_t step, std::vector<Bytes> outgoing,
                                 std::span<const std::size_t> expected) override;
};

struct PartyAddress {
  std::string host;
  std::uint16_t port = 0;
};

struct MeshOptions {
  std::chrono::milliseconds connect_timeout{10000};
  std::chrono::milliseconds receive_timeout{600000};
  std::size_t chunk_bytes = kDefaultChunkBytes;
};

// Ports the OS currently reports as free on the loopback interface.
std::vector<std::uint16_t> pick_free_ports(int count);

// All n in-process networks at once; hand one to each party's thread.
std::vector<std::unique_ptr<Network>> make_in_process_mesh(int parties, const MeshOptions& options = {});

// Connects this party to all others. Lower index dials higher index.
// MPFIX_BIND_ADDRESS overrides the local listen host.
std::unique_ptr<Network> connect_tcp_mesh(int party, const std::vector<PartyAddress>& addresses,
                                          const MeshOptions& options = {});

}  // namespace mpfix
