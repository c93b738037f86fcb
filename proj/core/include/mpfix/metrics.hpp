#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mpfix {

// Counters attributed to one named operation. Nested scopes are inclusive:
// a mul inside `exponentiation` also counts towards `exponentiation`.
struct OpStats {
  std::uint64_t calls = 0;
  std::uint64_t mul = 0;           // element-wise secure multiplications (tensor products)
  std::uint64_t mul_elements = 0;  // elements across those products
  std::uint64_t matmul = 0;        // matrix products
  std::uint64_t scale = 0;         // multiplications by a public fixed-point constant
  std::uint64_t trunc = 0;         // truncation protocol invocations (per tensor)
  std::uint64_t rounds = 0;
  std::uint64_t bytes = 0;  // payload bytes sent to all peers

  bool operator==(const OpStats&) const = default;
};

class CommMetrics {
 public:
  CommMetrics() = default;
  explicit CommMetrics(int parties) : payload_to_peer_(parties, 0), wire_to_peer_(parties, 0) {}

  // One synchronous exchange step with the given payload sizes per peer.
  // Every peer except `self` receives exactly one frame.
  void record_exchange(std::span<const std::size_t> payload_per_peer, std::size_t frame_overhead,
                       int self);
  void record_received(std::size_t bytes) { bytes_received_ += bytes; }

  void count_mul(std::size_t products, std::size_t elements);
  void count_matmul(std::size_t products);
  void count_scale(std::size_t n = 1);
  void count_trunc(std::size_t n = 1);

  void push_scope(std::string_view name);
  void pop_scope(bool unwinding = false);

  // Scope path ("a/b/c") that was open when an exception first unwound
  // through it; empty if nothing failed.
  const std::string& failed_scope() const { return failed_scope_; }

  std::uint64_t rounds() const { return rounds_; }
  std::uint64_t messages_sent() const { return messages_; }
  std::uint64_t bytes_received() const { return bytes_received_; }
  std::uint64_t payload_bytes_sent() const;
  std::uint64_t wire_bytes_sent() const;
  const std::vector<std::uint64_t>& payload_bytes_per_peer() const { return payload_to_peer_; }
  const std::vector<std::uint64_t>& wire_bytes_per_peer() const { return wire_to_peer_; }
  const std::map<std::string, OpStats>& ledger() const { return ledger_; }
  OpStats op(const std::string& name) const;

 private:
  template <class F>
  void apply(F&& f);

  std::uint64_t rounds_ = 0;
  std::uint64_t messages_ = 0;
  std::uint64_t bytes_received_ = 0;
  std::vector<std::uint64_t> payload_to_peer_;
  std::vector<std::uint64_t> wire_to_peer_;
  std::map<std::string, OpStats> ledger_;
  std::vector<std::string> stack_;
  std::string failed_scope_;
};

// RAII ledger scope.
class OpScope {
 public:
  OpScope(CommMetrics& m, std::string_view name) : m_(m), uncaught_(std::uncaught_exceptions()) {
    m_.push_scope(name);
  }
  ~OpScope() { m_.pop_scope(std::uncaught_exceptions() > uncaught_); }
  OpScope(const OpScope&) = delete;
  OpScope& operator=(const OpScope&) = delete;

 private:
  CommMetrics& m_;
  int uncaught_;
};

}  // namespace mpfix
