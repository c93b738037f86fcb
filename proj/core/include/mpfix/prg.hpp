#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <memory>
#include <span>
#include <type_traits>
#include <vector>

namespace mpfix {

// Counter-mode AES-128 keystream. The key is derived from (seed, stream) so
// independent streams can be split off one logged seed.
class Prg {
 public:
  explicit Prg(std::uint64_t seed, std::uint64_t stream = 0);
  ~Prg();
  Prg(Prg&&) noexcept;
  Prg& operator=(Prg&&) noexcept;
  Prg(const Prg&) = delete;
  Prg& operator=(const Prg&) = delete;

  void fill_bytes(std::span<std::byte> out);

  template <class T>
    requires std::is_trivially_copyable_v<T>
  void fill(std::span<T> out) {
    fill_bytes(std::as_writable_bytes(out));
  }

  template <class T>
    requires std::is_trivially_copyable_v<T>
  T next() {
    T v;
    fill_bytes(std::as_writable_bytes(std::span<T, 1>(&v, 1)));
    return v;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next<std::uint64_t>() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

 private:
  void refill();

  struct Cipher;
  std::unique_ptr<Cipher> cipher_;
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::vector<std::byte> buffer_;
  std::size_t pos_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace mpfix
