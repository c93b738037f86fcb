#include "mpfix/precomp.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mpfix/linalg.hpp"

namespace mpfix {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "record layout assumes a little-endian host");

const char* to_string(PrecompKind kind) {
  switch (kind) {
    case PrecompKind::kTriple: return "triple";
    case PrecompKind::kMatrixTriple: return "matrix-triple";
    case PrecompKind::kBitTriple: return "bit-triple";
    case PrecompKind::kDaBit: return "dabit";
    case PrecompKind::kEdaBit: return "edabit";
  }
  return "unknown";
}

PrecompKind parse_precomp_kind(const std::string& s) {
  for (auto k : {PrecompKind::kTriple, PrecompKind::kMatrixTriple, PrecompKind::kBitTriple, PrecompKind::kDaBit,
                 PrecompKind::kEdaBit}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown precomputation kind: " + s);
}

std::size_t PrecompKey::record_bytes() const {
  const std::size_t w = ring_bits / 8;
  switch (kind) {
    case PrecompKind::kTriple: return 3 * w;
    case PrecompKind::kMatrixTriple: return (dims[0] * dims[1] + dims[1] * dims[2] + dims[0] * dims[2]) * w;
    case PrecompKind::kBitTriple: return 24;
    case PrecompKind::kDaBit: return w + 1;
    case PrecompKind::kEdaBit: return w + 8;
  }
  return 0;
}

std::string PrecompKey::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  if (kind != PrecompKind::kBitTriple) os << "/Z2^" << ring_bits;
  if (kind == PrecompKind::kEdaBit) os << "/" << bit_length << "bits";
  if (kind == PrecompKind::kMatrixTriple) os << "/" << dims[0] << "x" << dims[1] << "x" << dims[2];
  return os.str();
}

std::string PrecompKey::file_name() const {
  std::ostringstream os;
  os << to_string(kind) << "_r" << ring_bits << "_b" << bit_length << "_" << dims[0] << "x" << dims[1] << "x"
     << dims[2] << ".bin";
  return os.str();
}

// --- PoolStore ------------------------------------------------------------

void PoolStore::add(Pool pool) {
  const PrecompKey key = pool.key;
  auto it = pools_.find(key);
  if (it == pools_.end()) {
    pools_.emplace(key, std::move(pool));
    return;
  }
  // Appending to an existing pool keeps unconsumed records in order.
  Pool& dst = it->second;
  const std::size_t rb = key.record_bytes();
  dst.data.erase(dst.data.begin(), dst.data.begin() + static_cast<std::ptrdiff_t>(dst.cursor * rb));
  dst.count -= dst.cursor;
  dst.cursor = 0;
  dst.data.insert(dst.data.end(), pool.data.begin() + static_cast<std::ptrdiff_t>(pool.cursor * rb),
                  pool.data.end());
  dst.count += pool.count - pool.cursor;
}

std::span<const std::uint8_t> PoolStore::take(const PrecompKey& key, std::uint64_t count) {
  auto it = pools_.find(key);
  const std::uint64_t have = it == pools_.end() ? 0 : it->second.count - it->second.cursor;
  if (have < count) {
    throw PrecompExhausted("precomputation exhausted: " + key.describe() + " needs " +
                           std::to_string(count) + ", " + std::to_string(have) + " left (short by " +
                           std::to_string(count - have) + ")");
  }
  Pool& pool = it->second;
  const std::size_t rb = key.record_bytes();
  std::span<const std::uint8_t> out(pool.data.data() + pool.cursor * rb, count * rb);
  log_.push_back({key, pool.cursor, pool.cursor + count});
  pool.cursor += count;
  return out;
}

std::uint64_t PoolStore::remaining(const PrecompKey& key) const {
  auto it = pools_.find(key);
  return it == pools_.end() ? 0 : it->second.count - it->second.cursor;
}

namespace {

constexpr char kMagic[8] = {'M', 'P', 'F', 'X', 'P', 'R', 'E', '1'};
constexpr std::uint32_t kFileVersion = 1;
constexpr std::size_t kHeaderBytes = 8 + 4 * 4 + 3 * 8 + 3 * 8;

template <class V>
void put(std::vector<std::uint8_t>& out, V v) {
  for (std::size_t i = 0; i < sizeof(V); ++i) out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
}

template <class V>
V get(const std::uint8_t*& in) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(V); ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  in += sizeof(V);
  return static_cast<V>(v);
}

fs::path party_dir(const fs::path& dir, int party) { return dir / ("party" + std::to_string(party)); }

std::uint64_t read_cursor(const fs::path& file) {
  std::ifstream in(file.string() + ".cursor", std::ios::binary);
  if (!in) return 0;
  std::uint8_t buf[8] = {};
  in.read(reinterpret_cast<char*>(buf), 8);
  const std::uint8_t* p = buf;
  return get<std::uint64_t>(p);
}

}  // namespace

PoolStore PoolStore::load(const fs::path& dir, int party) {
  PoolStore store;
  const fs::path pdir = party_dir(dir, party);
  if (!fs::is_directory(pdir)) throw Error("no precomputation directory " + pdir.string());
  store.backing_dir_ = pdir;
  for (const auto& entry : fs::directory_iterator(pdir)) {
    if (entry.path().extension() != ".bin") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::vector<std::uint8_t> header(kHeaderBytes);
    in.read(reinterpret_cast<char*>(header.data()), static_cast<std::streamsize>(header.size()));
    if (!in || std::memcmp(header.data(), kMagic, 8) != 0) {
      throw Error("not a precomputation file: " + entry.path().string());
    }
    const std::uint8_t* p = header.data() + 8;
    if (get<std::uint32_t>(p) != kFileVersion) throw Error("unsupported file version: " + entry.path().string());
    Pool pool;
    pool.key.kind = static_cast<PrecompKind>(get<std::uint32_t>(p));
    pool.key.ring_bits = get<std::uint32_t>(p);
    pool.key.bit_length = get<std::uint32_t>(p);
    for (auto& d : pool.key.dims) d = get<std::uint64_t>(p);
    pool.count = get<std::uint64_t>(p);
    const auto file_party = get<std::uint64_t>(p);
    if (static_cast<int>(file_party) != party) throw Error("file belongs to another party: " + entry.path().string());
    pool.data.resize(pool.count * pool.key.record_bytes());
    in.read(reinterpret_cast<char*>(pool.data.data()), static_cast<std::streamsize>(pool.data.size()));
    if (!in) throw Error("truncated precomputation file: " + entry.path().string());
    pool.cursor = std::min(read_cursor(entry.path()), pool.count);
    store.pools_.emplace(pool.key, std::move(pool));
  }
  return store;
}

void PoolStore::save(const fs::path& dir, int party, int parties) const {
  const fs::path pdir = party_dir(dir, party);
  fs::create_directories(pdir);
  for (const auto& [key, pool] : pools_) {
    std::vector<std::uint8_t> header;
    header.insert(header.end(), kMagic, kMagic + 8);
    put<std::uint32_t>(header, kFileVersion);
    put<std::uint32_t>(header, static_cast<std::uint32_t>(key.kind));
    put<std::uint32_t>(header, key.ring_bits);
    put<std::uint32_t>(header, key.bit_length);
    for (auto d : key.dims) put<std::uint64_t>(header, d);
    put<std::uint64_t>(header, pool.count);
    put<std::uint64_t>(header, static_cast<std::uint64_t>(party));
    put<std::uint64_t>(header, static_cast<std::uint64_t>(parties));
    const fs::path file = pdir / key.file_name();
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(pool.data.data()), static_cast<std::streamsize>(pool.data.size()));
    if (!out) throw Error("failed to write " + file.string());
    fs::remove(file.string() + ".cursor");
  }
}

void PoolStore::persist_cursors() const {
  if (backing_dir_.empty()) return;
  for (const auto& [key, pool] : pools_) {
    std::vector<std::uint8_t> buf;
    put<std::uint64_t>(buf, pool.cursor);
    std::ofstream out((backing_dir_ / key.file_name()).string() + ".cursor", std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(buf.data()), 8);
  }
}

// --- DemandCounter ----------------------------------------------------------

std::span<const std::uint8_t> DemandCounter::take(const PrecompKey& key, std::uint64_t count) {
  demand_[key] += count;
  const std::size_t bytes = count * key.record_bytes();
  if (zeros_.size() < bytes) zeros_.assign(bytes, 0);
  return {zeros_.data(), bytes};
}

bool audit_single_use(const std::vector<ConsumptionRecord>& log, std::string* problem) {
  std::map<PrecompKey, std::vector<std::pair<std::uint64_t, std::uint64_t>>> ranges;
  for (const auto& r : log) ranges[r.key].emplace_back(r.begin, r.end);
  for (auto& [key, rs] : ranges) {
    std::sort(rs.begin(), rs.end());
    for (std::size_t i = 1; i < rs.size(); ++i) {
      if (rs[i].first < rs[i - 1].second) {
        if (problem) *problem = "record reused in pool " + key.describe();
        return false;
      }
    }
  }
  return true;
}

// --- Dealer -------------------------------------------------------------------

Dealer::Dealer(int parties, std::uint64_t seed) : parties_(parties), prg_(seed, 0xdea1e5) {
  if (parties < 2) throw ConfigError("dealer needs at least two parties");
}

namespace {

// Writes additive shares of `values` into field `offset` of every record.
template <RingWord T>
void write_arith(Prg& prg, std::span<const T> values, std::vector<Pool>& pools, std::size_t offset,
                 std::size_t stride_elems, std::size_t record_bytes, std::size_t elems_per_record) {
  const int n = static_cast<int>(pools.size());
  std::vector<T> last(values.begin(), values.end());
  std::vector<T> mask(values.size());
  for (int p = 0; p + 1 < n; ++p) {
    prg.fill<T>(mask);
    for (std::size_t i = 0; i < values.size(); ++i) last[i] -= mask[i];
    for (std::size_t rec = 0; rec * elems_per_record < values.size(); ++rec) {
      std::memcpy(pools[p].data.data() + rec * record_bytes + offset, mask.data() + rec * stride_elems,
                  elems_per_record * sizeof(T));
    }
  }
  for (std::size_t rec = 0; rec * elems_per_record < values.size(); ++rec) {
    std::memcpy(pools[n - 1].data.data() + rec * record_bytes + offset, last.data() + rec * stride_elems,
                elems_per_record * sizeof(T));
  }
}

// XOR shares of one word (or byte) field per record.
template <class W>
void write_xor(Prg& prg, std::span<const W> values, W mask_bits, std::vector<Pool>& pools, std::size_t offset,
               std::size_t record_bytes) {
  const int n = static_cast<int>(pools.size());
  std::vector<W> last(values.begin(), values.end());
  std::vector<W> mask(values.size());
  for (int p = 0; p + 1 < n; ++p) {
    prg.fill<W>(mask);
    for (std::size_t i = 0; i < values.size(); ++i) {
      mask[i] &= mask_bits;
      last[i] ^= mask[i];
      std::memcpy(pools[p].data.data() + i * record_bytes + offset, &mask[i], sizeof(W));
    }
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::memcpy(pools[n - 1].data.data() + i * record_bytes + offset, &last[i], sizeof(W));
  }
}

template <RingWord T>
void gen_triples(Prg& prg, std::uint64_t count, std::vector<Pool>& pools) {
  std::vector<T> a(count), b(count), c(count);
  prg.fill<T>(a);
  prg.fill<T>(b);
  for (std::size_t i = 0; i < count; ++i) c[i] = a[i] * b[i];
  const std::size_t rb = 3 * sizeof(T);
  write_arith<T>(prg, a, pools, 0, 1, rb, 1);
  write_arith<T>(prg, b, pools, sizeof(T), 1, rb, 1);
  write_arith<T>(prg, c, pools, 2 * sizeof(T), 1, rb, 1);
}

template <RingWord T>
void gen_matrix_triples(Prg& prg, const PrecompKey& key, std::uint64_t count, std::vector<Pool>& pools) {
  const std::size_t m = key.dims[0], k = key.dims[1], r = key.dims[2];
  const std::size_t rb = key.record_bytes();
  std::vector<T> a(count * m * k), b(count * k * r), c(count * m * r, 0);
  prg.fill<T>(a);
  prg.fill<T>(b);
  for (std::size_t rec = 0; rec < count; ++rec) {
    matmul_accumulate<T>(std::span<const T>(a).subspan(rec * m * k, m * k),
                         std::span<const T>(b).subspan(rec * k * r, k * r),
                         std::span<T>(c).subspan(rec * m * r, m * r), m, k, r);
  }
  write_arith<T>(prg, a, pools, 0, m * k, rb, m * k);
  write_arith<T>(prg, b, pools, m * k * sizeof(T), k * r, rb, k * r);
  write_arith<T>(prg, c, pools, (m * k + k * r) * sizeof(T), m * r, rb, m * r);
}

template <RingWord T>
void gen_dabits(Prg& prg, std::uint64_t count, std::vector<Pool>& pools) {
  std::vector<std::uint8_t> bits(count);
  prg.fill<std::uint8_t>(bits);
  std::vector<T> arith(count);
  for (std::size_t i = 0; i < count; ++i) {
    bits[i] &= 1;
    arith[i] = bits[i];
  }
  const std::size_t rb = sizeof(T) + 1;
  write_arith<T>(prg, arith, pools, 0, 1, rb, 1);
  write_xor<std::uint8_t>(prg, bits, 1, pools, sizeof(T), rb);
}

template <RingWord T>
void gen_edabits(Prg& prg, const PrecompKey& key, std::uint64_t count, std::vector<Pool>& pools) {
  if (key.bit_length == 0 || key.bit_length > kRingBits<T>) throw ConfigError("edaBit length exceeds ring width");
  const std::uint64_t m = low_mask(static_cast<int>(key.bit_length));
  std::vector<std::uint64_t> r(count);
  prg.fill<std::uint64_t>(r);
  std::vector<T> arith(count);
  for (std::size_t i = 0; i < count; ++i) {
    r[i] &= m;
    arith[i] = static_cast<T>(r[i]);
  }
  const std::size_t rb = sizeof(T) + 8;
  write_arith<T>(prg, arith, pools, 0, 1, rb, 1);
  write_xor<std::uint64_t>(prg, r, m, pools, sizeof(T), rb);
}

void gen_bit_triples(Prg& prg, std::uint64_t count, std::vector<Pool>& pools) {
  std::vector<std::uint64_t> a(count), b(count), c(count);
  prg.fill<std::uint64_t>(a);
  prg.fill<std::uint64_t>(b);
  for (std::size_t i = 0; i < count; ++i) c[i] = a[i] & b[i];
  write_xor<std::uint64_t>(prg, a, ~std::uint64_t{0}, pools, 0, 24);
  write_xor<std::uint64_t>(prg, b, ~std::uint64_t{0}, pools, 8, 24);
  write_xor<std::uint64_t>(prg, c, ~std::uint64_t{0}, pools, 16, 24);
}

template <class F>
void dispatch_width(std::uint32_t bits, F&& f) {
  if (bits == 32) {
    f(std::uint32_t{});
  } else if (bits == 64) {
    f(std::uint64_t{});
  } else {
    throw ConfigError("unsupported ring width " + std::to_string(bits));
  }
}

}  // namespace

std::vector<Pool> Dealer::generate(const PrecompKey& key, std::uint64_t count) {
  std::vector<Pool> pools(parties_);
  for (auto& p : pools) {
    p.key = key;
    p.count = count;
    p.data.assign(count * key.record_bytes(), 0);
  }
  if (count == 0) return pools;
  switch (key.kind) {
    case PrecompKind::kTriple:
      dispatch_width(key.ring_bits, [&]<class T>(T) { gen_triples<T>(prg_, count, pools); });
      break;
    case PrecompKind::kMatrixTriple:
      dispatch_width(key.ring_bits, [&]<class T>(T) { gen_matrix_triples<T>(prg_, key, count, pools); });
      break;
    case PrecompKind::kBitTriple:
      gen_bit_triples(prg_, count, pools);
      break;
    case PrecompKind::kDaBit:
      dispatch_width(key.ring_bits, [&]<class T>(T) { gen_dabits<T>(prg_, count, pools); });
      break;
    case PrecompKind::kEdaBit:
      dispatch_width(key.ring_bits, [&]<class T>(T) { gen_edabits<T>(prg_, key, count, pools); });
      break;
  }
  return pools;
}

std::vector<PoolStore> Dealer::generate(const Manifest& manifest) {
  std::vector<PoolStore> stores(parties_);
  for (const auto& [key, count] : manifest) {
    auto pools = generate(key, count);
    for (int p = 0; p < parties_; ++p) stores[p].add(std::move(pools[p]));
  }
  return stores;
}

// --- typed views ------------------------------------------------------------

template <RingWord T>
Triples<T> take_triples(PrecompSource& src, std::size_t n) {
  auto raw = src.take(PrecompKey::triple(kRingBits<T>), n);
  Triples<T> t{std::vector<T>(n), std::vector<T>(n), std::vector<T>(n)};
  const std::uint8_t* p = raw.data();
  for (std::size_t i = 0; i < n; ++i, p += 3 * sizeof(T)) {
    std::memcpy(&t.a[i], p, sizeof(T));
    std::memcpy(&t.b[i], p + sizeof(T), sizeof(T));
    std::memcpy(&t.c[i], p + 2 * sizeof(T), sizeof(T));
  }
  return t;
}

template <RingWord T>
MatrixTripleShares<T> take_matrix_triple(PrecompSource& src, std::size_t m, std::size_t k, std::size_t r) {
  auto raw = src.take(PrecompKey::matrix_triple(kRingBits<T>, m, k, r), 1);
  MatrixTripleShares<T> t{std::vector<T>(m * k), std::vector<T>(k * r), std::vector<T>(m * r)};
  const std::uint8_t* p = raw.data();
  std::memcpy(t.a.data(), p, m * k * sizeof(T));
  std::memcpy(t.b.data(), p + m * k * sizeof(T), k * r * sizeof(T));
  std::memcpy(t.c.data(), p + (m * k + k * r) * sizeof(T), m * r * sizeof(T));
  return t;
}

BitTriples take_bit_triples(PrecompSource& src, std::size_t words) {
  auto raw = src.take(PrecompKey::bit_triple(), words);
  BitTriples t{std::vector<std::uint64_t>(words), std::vector<std::uint64_t>(words),
               std::vector<std::uint64_t>(words)};
  const std::uint8_t* p = raw.data();
  for (std::size_t i = 0; i < words; ++i, p += 24) {
    std::memcpy(&t.a[i], p, 8);
    std::memcpy(&t.b[i], p + 8, 8);
    std::memcpy(&t.c[i], p + 16, 8);
  }
  return t;
}

template <RingWord T>
DaBits<T> take_dabits(PrecompSource& src, std::size_t n) {
  auto raw = src.take(PrecompKey::dabit(kRingBits<T>), n);
  DaBits<T> d{std::vector<T>(n), std::vector<std::uint8_t>(n)};
  const std::uint8_t* p = raw.data();
  for (std::size_t i = 0; i < n; ++i, p += sizeof(T) + 1) {
    std::memcpy(&d.arith[i], p, sizeof(T));
    d.bits[i] = p[sizeof(T)] & 1;
  }
  return d;
}

template <RingWord T>
EdaBits<T> take_edabits(PrecompSource& src, int bit_length, std::size_t n) {
  auto raw = src.take(PrecompKey::edabit(kRingBits<T>, bit_length), n);
  EdaBits<T> e{std::vector<T>(n), std::vector<std::uint64_t>(n)};
  const std::uint8_t* p = raw.data();
  for (std::size_t i = 0; i < n; ++i, p += sizeof(T) + 8) {
    std::memcpy(&e.arith[i], p, sizeof(T));
    std::memcpy(&e.bits[i], p + sizeof(T), 8);
  }
  return e;
}

template Triples<std::uint32_t> take_triples(PrecompSource&, std::size_t);
template Triples<std::uint64_t> take_triples(PrecompSource&, std::size_t);
template MatrixTripleShares<std::uint32_t> take_matrix_triple(PrecompSource&, std::size_t, std::size_t, std::size_t);
template MatrixTripleShares<std::uint64_t> take_matrix_triple(PrecompSource&, std::size_t, std::size_t, std::size_t);
template DaBits<std::uint32_t> take_dabits(PrecompSource&, std::size_t);
template DaBits<std::uint64_t> take_dabits(PrecompSource&, std::size_t);
template EdaBits<std::uint32_t> take_edabits(PrecompSource&, int, std::size_t);
template EdaBits<std::uint64_t> take_edabits(PrecompSource&, int, std::size_t);

}  // namespace mpfix
