#include <gtest/gtest.h>

#include <chrono>
#include <future>
#include <thread>

#include "mpfix/harness/config.hpp"
#include "mpfix/linalg.hpp"
#include "mpfix/transport.hpp"
#include "test_util.hpp"

using namespace mpfix;
using namespace std::chrono_literals;

namespace {

std::vector<PartyAddress> loopback(int n) {
  std::vector<PartyAddress> out;
  for (auto port : pick_free_ports(n)) out.push_back({"127.0.0.1", port});
  return out;
}

std::vector<std::unique_ptr<Network>> tcp_mesh(int n, const MeshOptions& opts = {}) {
  const auto addrs = loopback(n);
  std::vector<std::future<std::unique_ptr<Network>>> fs;
  for (int p = 0; p < n; ++p) fs.push_back(std::async(std::launch::async, [&, p] { return connect_tcp_mesh(p, addrs, opts); }));
  std::vector<std::unique_ptr<Network>> out;
  for (auto& f : fs) out.push_back(f.get());
  return out;
}

// Runs f(network) on one thread per party; returns per-party results.
template <class F>
auto each_party(std::vector<std::unique_ptr<Network>>& nets, F&& f) {
  using R = decltype(f(*nets[0]));
  std::vector<std::future<R>> fs;
  for (auto& n : nets) fs.push_back(std::async(std::launch::async, [&f, &n] { return f(*n); }));
  std::vector<R> out;
  for (auto& fu : fs) out.push_back(fu.get());
  return out;
}

Bytes pattern(std::size_t n, std::uint64_t seed) {
  Prg prg(seed);
  Bytes b(n);
  prg.fill(std::span<std::uint8_t>(b));
  return b;
}

}  // namespace

TEST(Transport, InProcessPairHasOneEndpointEach) {
  auto nets = make_in_process_mesh(2);
  for (auto& n : nets) EXPECT_EQ(dynamic_cast<MeshNetwork&>(*n).endpoint_count(), 1u);
  auto got = each_party(nets, [](Network& net) {
    Bytes mine(8, static_cast<std::uint8_t>(net.party() + 1));
    return net.broadcast(mine);
  });
  EXPECT_EQ(got[0][1], Bytes(8, 2));
  EXPECT_EQ(got[1][0], Bytes(8, 1));
  for (auto& n : nets) {
    EXPECT_EQ(n->metrics().rounds(), 1u);
    EXPECT_EQ(n->metrics().payload_bytes_sent(), 8u);
    EXPECT_EQ(n->metrics().wire_bytes_sent(), 8u + kFrameHeaderBytes);
    EXPECT_EQ(n->metrics().bytes_received(), 8u);
  }
}

TEST(Transport, TcpMeshOfFive) {
  auto nets = tcp_mesh(5);
  std::size_t endpoints = 0;
  for (auto& n : nets) {
    const auto c = dynamic_cast<MeshNetwork&>(*n).endpoint_count();
    EXPECT_EQ(c, 4u);
    endpoints += c;
  }
  EXPECT_EQ(endpoints / 2, 10u);
  auto got = each_party(nets, [](Network& net) {
    std::vector<Bytes> out(5);
    std::vector<std::size_t> expected(5, 0);
    for (int p = 0; p < 5; ++p) {
      if (p == net.party()) continue;
      out[p] = Bytes(static_cast<std::size_t>(1 + net.party() + 10 * p), static_cast<std::uint8_t>(net.party()));
      expected[p] = static_cast<std::size_t>(1 + p + 10 * net.party());
    }
    net.handshake("digest");
    return net.exchange_all(out, expected);
  });
  for (int me = 0; me < 5; ++me) {
    for (int p = 0; p < 5; ++p) {
      if (p == me) continue;
      EXPECT_EQ(got[me][p], Bytes(static_cast<std::size_t>(1 + p + 10 * me), static_cast<std::uint8_t>(p)));
    }
  }
}

TEST(Transport, ChunkedTenMebibytesArriveIntact) {
  const std::size_t size = 10u << 20;
  const Bytes a = pattern(size, 1), b = pattern(size, 2);
  std::vector<std::string> digests;
  for (std::size_t chunk : {std::size_t{1} << 20, std::size_t{64} << 10, size * 2}) {
    MeshOptions opts;
    opts.chunk_bytes = chunk;
    auto nets = tcp_mesh(2, opts);
    auto got = each_party(nets, [&](Network& net) { return net.broadcast(net.party() == 0 ? a : b); });
    EXPECT_EQ(got[0][1], b);
    EXPECT_EQ(got[1][0], a);
    const std::string_view view(reinterpret_cast<const char*>(got[1][0].data()), got[1][0].size());
    digests.push_back(sha256_hex(view));
    auto& ep = dynamic_cast<MeshNetwork&>(*nets[0]).endpoint(1);
    EXPECT_EQ(ep.bytes_sent(), size + kFrameHeaderBytes);
    EXPECT_EQ(ep.bytes_sent(), nets[0]->metrics().wire_bytes_sent());
  }
  const std::string_view whole(reinterpret_cast<const char*>(a.data()), a.size());
  for (const auto& d : digests) EXPECT_EQ(d, sha256_hex(whole));
}

TEST(Transport, StepMismatchFailsFastAtBothParties) {
  for (bool tcp : {false, true}) {
    MeshOptions opts;
    opts.receive_timeout = 5000ms;
    auto nets = tcp ? tcp_mesh(2, opts) : make_in_process_mesh(2, opts);
    nets[0]->skew_step_for_testing(3);
    const auto start = std::chrono::steady_clock::now();
    auto outcome = each_party(nets, [](Network& net) -> std::string {
      try {
        net.broadcast(Bytes(8, 0));
      } catch (const ProtocolDesync& e) {
        return e.what();
      }
      return "";
    });
    EXPECT_LT(std::chrono::steady_clock::now() - start, 4s);
    EXPECT_NE(outcome[0].find("step"), std::string::npos) << outcome[0];
    EXPECT_NE(outcome[1].find("step"), std::string::npos) << outcome[1];
  }
}

TEST(Transport, PayloadSizeMismatchIsDesync) {
  auto nets = make_in_process_mesh(2);
  auto outcome = each_party(nets, [](Network& net) {
    try {
      net.broadcast(Bytes(net.party() == 0 ? 8 : 16, 0));
    } catch (const ProtocolDesync&) {
      return true;
    }
    return false;
  });
  EXPECT_TRUE(outcome[0]);
  EXPECT_TRUE(outcome[1]);
}

TEST(Transport, UnreachablePeerTimesOut) {
  MeshOptions opts;
  opts.connect_timeout = 500ms;
  auto addrs = loopback(2);  // nobody listens on party 1's port
  const auto start = std::chrono::steady_clock::now();
  EXPECT_THROW(connect_tcp_mesh(0, addrs, opts), TransportError);
  const auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_GE(elapsed, 400ms);
  EXPECT_LT(elapsed, 3s);
}

TEST(Transport, UnresolvableHostFails) {
  MeshOptions opts;
  opts.connect_timeout = 500ms;
  auto addrs = loopback(2);
  addrs[1].host = "no-such-host.invalid";
  const auto start = std::chrono::steady_clock::now();
  EXPECT_THROW(connect_tcp_mesh(0, addrs, opts), TransportError);
  EXPECT_LT(std::chrono::steady_clock::now() - start, 10s);
}

TEST(Transport, AddressInUse) {
  auto addrs = loopback(2);
  MeshOptions opts;
  opts.connect_timeout = 2000ms;
  auto first = std::async(std::launch::async, [&] {
    try {
      connect_tcp_mesh(1, addrs, opts);
    } catch (const TransportError&) {
    }
  });
  std::this_thread::sleep_for(200ms);
  EXPECT_THROW(connect_tcp_mesh(1, addrs, opts), TransportError);
  first.get();
}

TEST(Transport, HandshakeRejectsDifferentConfig) {
  for (bool tcp : {false, true}) {
    auto nets = tcp ? tcp_mesh(2) : make_in_process_mesh(2);
    auto outcome = each_party(nets, [](Network& net) {
      try {
        net.handshake(net.party() == 0 ? "aaaa" : "bbbb");
      } catch (const ConfigError&) {
        return true;
      }
      return false;
    });
    EXPECT_TRUE(outcome[0]);
    EXPECT_TRUE(outcome[1]);
  }
}

TEST(Transport, DisconnectedPeerIsTransportError) {
  MeshOptions opts;
  opts.receive_timeout = 5000ms;
  auto nets = tcp_mesh(2, opts);
  nets[1].reset();
  EXPECT_THROW(nets[0]->broadcast(Bytes(8, 0)), TransportError);
}

TEST(Transport, MetricsIdenticalAcrossTransports) {
  std::mt19937_64 rng(2);
  const auto xs = test::random_words<std::uint64_t>(rng, 300);
  auto body = [&](Session& s) {
    auto x = input<std::uint64_t>(s, 0, xs, {20, 15}, 0);
    auto y = input<std::uint64_t>(s, 2, xs, {15, 20}, 0);
    auto m = matmul(s, x, y);
    auto z = mul(s, x, x);
    auto b = decompose(s, z, 16);
    (void)open(s, m);
    (void)open_bits(s, b);
  };
  std::vector<std::vector<std::map<std::string, OpStats>>> ledgers;
  std::vector<std::vector<std::vector<std::uint64_t>>> wires;
  for (auto kind : {TransportKind::kInProcess, TransportKind::kTcp, TransportKind::kInProcess}) {
    auto o = test::options(3, 9);
    o.transport = kind;
    auto sum = run_local(o, body);
    std::vector<std::map<std::string, OpStats>> l;
    std::vector<std::vector<std::uint64_t>> w;
    for (const auto& p : sum.parties) {
      l.push_back(p.metrics.ledger());
      w.push_back(p.metrics.wire_bytes_per_peer());
      w.push_back(p.metrics.payload_bytes_per_peer());
      w.push_back({p.metrics.rounds(), p.metrics.messages_sent(), p.metrics.bytes_received()});
    }
    ledgers.push_back(l);
    wires.push_back(w);
  }
  EXPECT_EQ(ledgers[0], ledgers[1]);
  EXPECT_EQ(ledgers[0], ledgers[2]);
  EXPECT_EQ(wires[0], wires[1]);
  EXPECT_EQ(wires[0], wires[2]);
}

TEST(Transport, ParseKind) {
  EXPECT_EQ(parse_transport_kind("tcp"), TransportKind::kTcp);
  EXPECT_EQ(parse_transport_kind(to_string(TransportKind::kInProcess)), TransportKind::kInProcess);
  EXPECT_THROW(parse_transport_kind("rdma"), ConfigError);
  EXPECT_THROW(make_in_process_mesh(1), ConfigError);
}
