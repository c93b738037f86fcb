#pragma once

// Input-independent correlated randomness: Beaver triples (element, matrix and
// over Z_2), daBits and edaBits. A trusted dealer produces one pool per party
// per key; the online engine only ever consumes its own pools, front to back.

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mpfix/prg.hpp"
#include "mpfix/tensor.hpp"

namespace mpfix {

enum class PrecompKind : std::uint32_t {
  kTriple = 1,
  kMatrixTriple = 2,
  kBitTriple = 3,
  kDaBit = 4,
  kEdaBit = 5,
};

const char* to_string(PrecompKind kind);
PrecompKind parse_precomp_kind(const std::string& s);

// Identifies one pool. ring_bits is the arithmetic ring width (unused for bit
// triples), bit_length the edaBit length, dims the matrix-triple shape m,k,r.
struct PrecompKey {
  PrecompKind kind = PrecompKind::kTriple;
  std::uint32_t ring_bits = 64;
  std::uint32_t bit_length = 0;
  std::array<std::uint64_t, 3> dims{0, 0, 0};

  auto operator<=>(const PrecompKey&) const = default;

  std::size_t record_bytes() const;
  std::string describe() const;
  std::string file_name() const;

  static PrecompKey triple(int ring_bits) { return {PrecompKind::kTriple, static_cast<std::uint32_t>(ring_bits), 0, {}}; }
  static PrecompKey bit_triple() { return {PrecompKind::kBitTriple, 0, 64, {}}; }
  static PrecompKey dabit(int ring_bits) { return {PrecompKind::kDaBit, static_cast<std::uint32_t>(ring_bits), 1, {}}; }
  static PrecompKey edabit(int ring_bits, int bits) {
    return {PrecompKind::kEdaBit, static_cast<std::uint32_t>(ring_bits), static_cast<std::uint32_t>(bits), {}};
  }
  static PrecompKey matrix_triple(int ring_bits, std::size_t m, std::size_t k, std::size_t r) {
    return {PrecompKind::kMatrixTriple, static_cast<std::uint32_t>(ring_bits), 0, {m, k, r}};
  }
};

// Demand or supply per pool.
using Manifest = std::map<PrecompKey, std::uint64_t>;

// One party's pool of records of a single key.
struct Pool {
  PrecompKey key;
  std::uint64_t count = 0;
  std::uint64_t cursor = 0;
  std::vector<std::uint8_t> data;  // count * key.record_bytes()
};

struct ConsumptionRecord {
  PrecompKey key;
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
};

class PrecompSource {
 public:
  virtual ~PrecompSource() = default;
  // Next `count` records of the pool, never handed out again.
  virtual std::span<const std::uint8_t> take(const PrecompKey& key, std::uint64_t count) = 0;
};

// Pools held in memory, optionally backed by a directory of dealer files.
class PoolStore final : public PrecompSource {
 public:
  PoolStore() = default;

  void add(Pool pool);
  std::span<const std::uint8_t> take(const PrecompKey& key, std::uint64_t count) override;

  std::uint64_t remaining(const PrecompKey& key) const;
  const std::vector<ConsumptionRecord>& log() const { return log_; }
  const std::map<PrecompKey, Pool>& pools() const { return pools_; }

  // Dealer file layout: <dir>/party<i>/<key file name>, cursor in "<file>.cursor".
  static PoolStore load(const std::filesystem::path& dir, int party);
  void save(const std::filesystem::path& dir, int party, int parties) const;
  void persist_cursors() const;

 private:
  std::map<PrecompKey, Pool> pools_;
  std::vector<ConsumptionRecord> log_;
  std::filesystem::path backing_dir_;
};

// Hands out zero records and tallies how many of each key were requested.
class DemandCounter final : public PrecompSource {
 public:
  std::span<const std::uint8_t> take(const PrecompKey& key, std::uint64_t count) override;
  const Manifest& demand() const { return demand_; }

 private:
  Manifest demand_;
  std::vector<std::uint8_t> zeros_;
};

// Checks that no record id was consumed twice and all stayed within supply.
bool audit_single_use(const std::vector<ConsumptionRecord>& log, std::string* problem = nullptr);

class Dealer {
 public:
  Dealer(int parties, std::uint64_t seed);

  // One pool per party, jointly satisfying the correlation of key.kind.
  std::vector<Pool> generate(const PrecompKey& key, std::uint64_t count);
  std::vector<PoolStore> generate(const Manifest& manifest);

  int parties() const { return parties_; }

 private:
  int parties_;
  Prg prg_;
};

// --- typed views --------------------------------------------------------

template <RingWord T>
struct Triples {
  std::vector<T> a, b, c;
};

template <RingWord T>
struct MatrixTripleShares {
  std::vector<T> a, b, c;  // m x k, k x r, m x r
};

struct BitTriples {
  std::vector<std::uint64_t> a, b, c;
};

template <RingWord T>
struct DaBits {
  std::vector<T> arith;
  std::vector<std::uint8_t> bits;
};

template <RingWord T>
struct EdaBits {
  std::vector<T> arith;
  std::vector<std::uint64_t> bits;
};

template <RingWord T>
Triples<T> take_triples(PrecompSource& src, std::size_t n);
template <RingWord T>
MatrixTripleShares<T> take_matrix_triple(PrecompSource& src, std::size_t m, std::size_t k, std::size_t r);
BitTriples take_bit_triples(PrecompSource& src, std::size_t words);
template <RingWord T>
DaBits<T> take_dabits(PrecompSource& src, std::size_t n);
template <RingWord T>
EdaBits<T> take_edabits(PrecompSource& src, int bit_length, std::size_t n);

}  // namespace mpfix
