#include "mpfix/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <condition_variable>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

#include "mpfix/errors.hpp"

namespace mpfix {

const char* to_string(TransportKind kind) {
  return kind == TransportKind::kTcp ? "tcp" : "in-process";
}

TransportKind parse_transport_kind(const std::string& s) {
  if (s == "tcp") return TransportKind::kTcp;
  if (s == "in-process" || s == "inprocess" || s == "local") return TransportKind::kInProcess;
  throw ConfigError("unknown transport kind: " + s);
}

namespace {

void put_u64(std::uint8_t* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint64_t get_u64(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return v;
}

// --- in-process -------------------------------------------------------------

struct Pipe {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Frame> frames;
  bool closed = false;
};

class InProcessEndpoint final : public Endpoint {
 public:
  InProcessEndpoint(int peer, std::shared_ptr<Pipe> out, std::shared_ptr<Pipe> in)
      : Endpoint(peer), out_(std::move(out)), in_(std::move(in)) {}

  ~InProcessEndpoint() override {
    for (auto* p : {out_.get(), in_.get()}) {
      std::lock_guard lock(p->mu);
      p->closed = true;
      p->cv.notify_all();
    }
  }

  void send(std::uint64_t step, Bytes payload) override {
    bytes_sent_ += payload.size() + kFrameHeaderBytes;
    ++messages_sent_;
    std::lock_guard lock(out_->mu);
    if (out_->closed) throw TransportError("peer " + std::to_string(peer_) + " disconnected");
    out_->frames.push_back(Frame{step, std::move(payload)});
    out_->cv.notify_one();
  }

  Frame receive(std::chrono::milliseconds timeout) override {
    std::unique_lock lock(in_->mu);
    if (!in_->cv.wait_for(lock, timeout, [&] { return !in_->frames.empty() || in_->closed; })) {
      throw TransportError("timed out waiting for peer " + std::to_string(peer_));
    }
    if (in_->frames.empty()) throw TransportError("peer " + std::to_string(peer_) + " disconnected");
    Frame f = std::move(in_->frames.front());
    in_->frames.pop_front();
    bytes_received_ += f.payload.size() + kFrameHeaderBytes;
    return f;
  }

  TransportKind kind() const override { return TransportKind::kInProcess; }

 private:
  std::shared_ptr<Pipe> out_;
  std::shared_ptr<Pipe> in_;
};

// --- tcp --------------------------------------------------------------------

void write_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("socket write failed: ") + std::strerror(errno));
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

void wait_readable(int fd, std::chrono::steady_clock::time_point deadline, int peer) {
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw TransportError("timed out waiting for peer " + std::to_string(peer));
    pollfd pfd{fd, POLLIN, 0};
    const int r = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
    if (r > 0) return;
    if (r < 0 && errno != EINTR) throw TransportError("poll failed");
  }
}

void read_all(int fd, std::uint8_t* data, std::size_t n, std::chrono::steady_clock::time_point deadline,
              int peer) {
  while (n > 0) {
    wait_readable(fd, deadline, peer);
    const ssize_t r = ::recv(fd, data, n, 0);
    if (r == 0) throw TransportError("peer " + std::to_string(peer) + " disconnected");
    if (r < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw TransportError(std::string("socket read failed: ") + std::strerror(errno));
    }
    data += r;
    n -= static_cast<std::size_t>(r);
  }
}

class TcpEndpoint final : public Endpoint {
 public:
  TcpEndpoint(int peer, int fd, std::size_t chunk) : Endpoint(peer), fd_(fd), chunk_(chunk) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    sender_ = std::thread([this] { send_loop(); });
  }

  ~TcpEndpoint() override {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
      cv_.notify_all();
    }
    sender_.join();
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
  }

  void send(std::uint64_t step, Bytes payload) override {
    bytes_sent_ += payload.size() + kFrameHeaderBytes;
    ++messages_sent_;
    std::lock_guard lock(mu_);
    if (!error_.empty()) throw TransportError(error_);
    queue_.push_back(Frame{step, std::move(payload)});
    cv_.notify_one();
  }

  Frame receive(std::chrono::milliseconds timeout) override {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    std::uint8_t header[kFrameHeaderBytes];
    read_all(fd_, header, sizeof(header), deadline, peer_);
    Frame f;
    const std::uint64_t len = get_u64(header);
    f.step = get_u64(header + 8);
    if (len > (std::uint64_t{1} << 40)) throw ProtocolDesync("implausible frame length");
    f.payload.resize(len);
    std::size_t done = 0;
    while (done < len) {
      const std::size_t n = std::min<std::size_t>(chunk_, len - done);
      read_all(fd_, f.payload.data() + done, n, deadline, peer_);
      done += n;
    }
    bytes_received_ += len + kFrameHeaderBytes;
    return f;
  }

  TransportKind kind() const override { return TransportKind::kTcp; }

 private:
  void send_loop() {
    for (;;) {
      Frame f;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
        if (queue_.empty()) return;
        f = std::move(queue_.front());
        queue_.pop_front();
      }
      try {
        std::uint8_t header[kFrameHeaderBytes];
        put_u64(header, f.payload.size());
        put_u64(header + 8, f.step);
        write_all(fd_, header, sizeof(header));
        for (std::size_t off = 0; off < f.payload.size(); off += chunk_) {
          write_all(fd_, f.payload.data() + off, std::min(chunk_, f.payload.size() - off));
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(mu_);
        error_ = e.what();
        queue_.clear();
        return;
      }
    }
  }

  int fd_;
  std::size_t chunk_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Frame> queue_;
  bool stop_ = false;
  std::string error_;
  std::thread sender_;
};

constexpr std::uint32_t kHelloMagic = 0x5846504d;  // "MPFX"

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (host.empty() || host == "*" || host == "0.0.0.0") {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    return addr;
  }
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw TransportError("cannot resolve host " + host);
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

int dial(const PartyAddress& to, std::chrono::steady_clock::time_point deadline) {
  const sockaddr_in addr = resolve(to.host, to.port);
  for (;;) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError("socket() failed");
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) return fd;
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline) {
      throw TransportError("timed out connecting to " + to.host + ":" + std::to_string(to.port));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

}  // namespace

// --- Network ----------------------------------------------------------------

std::vector<Bytes> Network::exchange_all(std::vector<Bytes> outgoing, std::span<const std::size_t> expected) {
  if (outgoing.size() != static_cast<std::size_t>(parties_) || expected.size() != outgoing.size()) {
    throw ShapeMismatch("exchange_all: one payload per party required");
  }
  ++step_;
  std::vector<std::size_t> sizes(outgoing.size());
  for (std::size_t p = 0; p < outgoing.size(); ++p) sizes[p] = outgoing[p].size();
  sizes[party_] = 0;
  metrics_.record_exchange(sizes, kFrameHeaderBytes, party_);
  auto incoming = do_exchange(step_, std::move(outgoing), expected);
  for (int p = 0; p < parties_; ++p) {
    if (p == party_) continue;
    if (incoming[p].size() != expected[p]) {
      throw ProtocolDesync("step " + std::to_string(step_) + ": expected " + std::to_string(expected[p]) +
                           " bytes from party " + std::to_string(p) + ", got " +
                           std::to_string(incoming[p].size()));
    }
    metrics_.record_received(incoming[p].size());
  }
  return incoming;
}

std::vector<Bytes> Network::broadcast(const Bytes& payload) {
  std::vector<Bytes> out(parties_);
  std::vector<std::size_t> expected(parties_, payload.size());
  for (int p = 0; p < parties_; ++p) {
    if (p != party_) out[p] = payload;
  }
  expected[party_] = 0;
  return exchange_all(std::move(out), expected);
}

MeshNetwork::MeshNetwork(int party, int parties, std::vector<std::unique_ptr<Endpoint>> endpoints,
                         std::chrono::milliseconds timeout)
    : Network(party, parties), endpoints_(std::move(endpoints)), timeout_(timeout) {}

MeshNetwork::~MeshNetwork() = default;

std::size_t MeshNetwork::endpoint_count() const {
  return static_cast<std::size_t>(std::count_if(endpoints_.begin(), endpoints_.end(),
                                                [](const auto& e) { return e != nullptr; }));
}

std::vector<Bytes> MeshNetwork::do_exchange(std::uint64_t step, std::vector<Bytes> outgoing,
                                            std::span<const std::size_t>) {
  for (int p = 0; p < parties_; ++p) {
    if (p != party_) endpoints_[p]->send(step, std::move(outgoing[p]));
  }
  std::vector<Bytes> incoming(parties_);
  for (int p = 0; p < parties_; ++p) {
    if (p == party_) continue;
    Frame f = endpoints_[p]->receive(timeout_);
    if (f.step != step) {
      throw ProtocolDesync("party " + std::to_string(party_) + " at step " + std::to_string(step) +
                           " received step " + std::to_string(f.step) + " from party " + std::to_string(p));
    }
    incoming[p] = std::move(f.payload);
  }
  return incoming;
}

void MeshNetwork::handshake(const std::string& config_digest) {
  Bytes hello(8 + config_digest.size());
  for (int i = 0; i < 4; ++i) hello[i] = static_cast<std::uint8_t>(kProtocolVersion >> (8 * i));
  for (int i = 0; i < 4; ++i) hello[4 + i] = static_cast<std::uint8_t>(static_cast<std::uint32_t>(party_) >> (8 * i));
  std::memcpy(hello.data() + 8, config_digest.data(), config_digest.size());
  for (int p = 0; p < parties_; ++p) {
    if (p != party_) endpoints_[p]->send(kHandshakeStep, hello);
  }
  for (int p = 0; p < parties_; ++p) {
    if (p == party_) continue;
    Frame f = endpoints_[p]->receive(timeout_);
    if (f.step != kHandshakeStep || f.payload.size() < 8) {
      throw ProtocolDesync("handshake: unexpected frame from party " + std::to_string(p));
    }
    std::uint32_t version = 0, peer = 0;
    for (int i = 0; i < 4; ++i) version |= static_cast<std::uint32_t>(f.payload[i]) << (8 * i);
    for (int i = 0; i < 4; ++i) peer |= static_cast<std::uint32_t>(f.payload[4 + i]) << (8 * i);
    if (version != kProtocolVersion) {
      throw ProtocolDesync("handshake: protocol version mismatch with party " + std::to_string(p));
    }
    if (static_cast<int>(peer) != p) throw ProtocolDesync("handshake: peer identity mismatch");
    const std::string digest(f.payload.begin() + 8, f.payload.end());
    if (digest != config_digest) {
      throw ConfigError("handshake: configuration digest differs from party " + std::to_string(p));
    }
  }
}

std::vector<Bytes> DryRunNetwork::do_exchange(std::uint64_t, std::vector<Bytes>,
                                              std::span<const std::size_t> expected) {
  std::vector<Bytes> incoming(parties_);
  for (int p = 0; p < parties_; ++p) {
    if (p != party_) incoming[p].assign(expected[p], 0);
  }
  return incoming;
}

std::vector<std::unique_ptr<Network>> make_in_process_mesh(int parties, const MeshOptions& options) {
  if (parties < 2) throw ConfigError("mesh needs at least two parties");
  // pipes[i][j] carries frames from i to j.
  std::vector<std::vector<std::shared_ptr<Pipe>>> pipes(parties, std::vector<std::shared_ptr<Pipe>>(parties));
  for (int i = 0; i < parties; ++i) {
    for (int j = 0; j < parties; ++j) {
      if (i != j) pipes[i][j] = std::make_shared<Pipe>();
    }
  }
  std::vector<std::unique_ptr<Network>> out;
  for (int i = 0; i < parties; ++i) {
    std::vector<std::unique_ptr<Endpoint>> eps(parties);
    for (int j = 0; j < parties; ++j) {
      if (i != j) eps[j] = std::make_unique<InProcessEndpoint>(j, pipes[i][j], pipes[j][i]);
    }
    out.push_back(std::make_unique<MeshNetwork>(i, parties, std::move(eps), options.receive_timeout));
  }
  return out;
}

std::unique_ptr<Network> connect_tcp_mesh(int party, const std::vector<PartyAddress>& addresses,
                                          const MeshOptions& options) {
  const int parties = static_cast<int>(addresses.size());
  if (parties < 2) throw ConfigError("mesh needs at least two parties");
  if (party < 0 || party >= parties) throw ConfigError("party index out of range");
  const auto deadline = std::chrono::steady_clock::now() + options.connect_timeout;

  std::string bind_host = addresses[party].host;
  if (const char* env = std::getenv("MPFIX_BIND_ADDRESS"); env != nullptr && *env != '\0') bind_host = env;

  int listener = -1;
  if (party > 0) {
    listener = ::socket(AF_INET, SOCK_STREAM, 0);
    int one = 1;
    ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    const sockaddr_in addr = resolve(bind_host, addresses[party].port);
    if (::bind(listener, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
      const int err = errno;
      ::close(listener);
      throw TransportError(std::string(err == EADDRINUSE ? "address in use: " : "bind failed: ") + bind_host +
                           ":" + std::to_string(addresses[party].port));
    }
    ::listen(listener, parties);
  }

  std::vector<std::unique_ptr<Endpoint>> eps(parties);
  try {
    for (int j = party + 1; j < parties; ++j) {
      const int fd = dial(addresses[j], deadline);
      std::uint8_t hello[8];
      for (int i = 0; i < 4; ++i) hello[i] = static_cast<std::uint8_t>(kHelloMagic >> (8 * i));
      for (int i = 0; i < 4; ++i) hello[4 + i] = static_cast<std::uint8_t>(static_cast<std::uint32_t>(party) >> (8 * i));
      write_all(fd, hello, sizeof(hello));
      eps[j] = std::make_unique<TcpEndpoint>(j, fd, options.chunk_bytes);
    }
    for (int accepted = 0; accepted < party; ++accepted) {
      wait_readable(listener, deadline, -1);
      const int fd = ::accept(listener, nullptr, nullptr);
      if (fd < 0) throw TransportError("accept failed");
      std::uint8_t hello[8];
      read_all(fd, hello, sizeof(hello), deadline, -1);
      std::uint32_t magic = 0, peer = 0;
      for (int i = 0; i < 4; ++i) magic |= static_cast<std::uint32_t>(hello[i]) << (8 * i);
      for (int i = 0; i < 4; ++i) peer |= static_cast<std::uint32_t>(hello[4 + i]) << (8 * i);
      if (magic != kHelloMagic || static_cast<int>(peer) >= party || eps[peer] != nullptr) {
        ::close(fd);
        throw ProtocolDesync("unexpected connection during mesh setup");
      }
      eps[peer] = std::make_unique<TcpEndpoint>(static_cast<int>(peer), fd, options.chunk_bytes);
    }
  } catch (...) {
    if (listener >= 0) ::close(listener);
    throw;
  }
  if (listener >= 0) ::close(listener);
  return std::make_unique<MeshNetwork>(party, parties, std::move(eps), options.receive_timeout);
}

}  // namespace mpfix

namespace mpfix {

std::vector<std::uint16_t> pick_free_ports(int count) {
  std::vector<int> held;
  std::vector<std::uint16_t> ports;
  for (int i = 0; i < count; ++i) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    socklen_t len = sizeof(addr);
    if (fd < 0 || ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
      if (fd >= 0) ::close(fd);
      for (int h : held) ::close(h);
      throw TransportError("could not reserve a local port");
    }
    held.push_back(fd);
    ports.push_back(ntohs(addr.sin_port));
  }
  for (int h : held) ::close(h);
  return ports;
}

}  // namespace mpfix
