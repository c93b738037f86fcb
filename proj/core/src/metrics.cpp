#include "mpfix/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace mpfix {

template <class F>
void CommMetrics::apply(F&& f) {
  // Each distinct name on the stack is charged once.
  for (std::size_t i = 0; i < stack_.size(); ++i) {
    if (std::find(stack_.begin(), stack_.begin() + i, stack_[i]) != stack_.begin() + i) continue;
    f(ledger_[stack_[i]]);
  }
}

void CommMetrics::record_exchange(std::span<const std::size_t> payload_per_peer,
                                  std::size_t frame_overhead, int self) {
  ++rounds_;
  std::uint64_t total = 0;
  if (payload_to_peer_.size() < payload_per_peer.size()) {
    payload_to_peer_.resize(payload_per_peer.size(), 0);
    wire_to_peer_.resize(payload_per_peer.size(), 0);
  }
  for (std::size_t p = 0; p < payload_per_peer.size(); ++p) {
    if (static_cast<int>(p) == self) continue;
    payload_to_peer_[p] += payload_per_peer[p];
    wire_to_peer_[p] += payload_per_peer[p] + frame_overhead;
    total += payload_per_peer[p];
    ++messages_;
  }
  apply([&](OpStats& s) {
    ++s.rounds;
    s.bytes += total;
  });
}

void CommMetrics::count_mul(std::size_t products, std::size_t elements) {
  apply([&](OpStats& s) {
    s.mul += products;
    s.mul_elements += elements;
  });
}

void CommMetrics::count_matmul(std::size_t products) {
  apply([&](OpStats& s) { s.matmul += products; });
}

void CommMetrics::count_scale(std::size_t n) {
  apply([&](OpStats& s) { s.scale += n; });
}

void CommMetrics::count_trunc(std::size_t n) {
  apply([&](OpStats& s) { s.trunc += n; });
}

void CommMetrics::push_scope(std::string_view name) {
  stack_.emplace_back(name);
  ++ledger_[stack_.back()].calls;
}

void CommMetrics::pop_scope(bool unwinding) {
  if (stack_.empty()) return;
  if (unwinding && failed_scope_.empty()) {
    for (const auto& name : stack_) failed_scope_ += (failed_scope_.empty() ? "" : "/") + name;
  }
  stack_.pop_back();
}

std::uint64_t CommMetrics::payload_bytes_sent() const {
  return std::accumulate(payload_to_peer_.begin(), payload_to_peer_.end(), std::uint64_t{0});
}

std::uint64_t CommMetrics::wire_bytes_sent() const {
  return std::accumulate(wire_to_peer_.begin(), wire_to_peer_.end(), std::uint64_t{0});
}

OpStats CommMetrics::op(const std::string& name) const {
  auto it = ledger_.find(name);
  return it == ledger_.end() ? OpStats{} : it->second;
}

}  // namespace mpfix
