#include "mpfix/prg.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <array>
#include <cmath>
#include <numbers>

#include "mpfix/errors.hpp"

namespace mpfix {

namespace {
constexpr std::size_t kBlockBytes = 1 << 14;
}

struct Prg::Cipher {
  EVP_CIPHER_CTX* ctx = nullptr;
  ~Cipher() { EVP_CIPHER_CTX_free(ctx); }
};

Prg::Prg(std::uint64_t seed, std::uint64_t stream)
    : cipher_(std::make_unique<Cipher>()), seed_(seed), stream_(stream), buffer_(kBlockBytes) {
  std::array<unsigned char, 16> material{};
  for (int i = 0; i < 8; ++i) {
    material[i] = static_cast<unsigned char>(seed >> (8 * i));
    material[8 + i] = static_cast<unsigned char>(stream >> (8 * i));
  }
  std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
  SHA256(material.data(), material.size(), digest.data());

  cipher_->ctx = EVP_CIPHER_CTX_new();
  std::array<unsigned char, 16> iv{};
  if (cipher_->ctx == nullptr ||
      EVP_EncryptInit_ex(cipher_->ctx, EVP_aes_128_ctr(), nullptr, digest.data(), iv.data()) != 1) {
    throw Error("failed to initialise AES-CTR keystream");
  }
  pos_ = buffer_.size();
}

Prg::~Prg() = default;
Prg::Prg(Prg&&) noexcept = default;
Prg& Prg::operator=(Prg&&) noexcept = default;

void Prg::refill() {
  static const std::vector<unsigned char> zeros(kBlockBytes, 0);
  int len = 0;
  if (EVP_EncryptUpdate(cipher_->ctx, reinterpret_cast<unsigned char*>(buffer_.data()), &len,
                        zeros.data(), static_cast<int>(kBlockBytes)) != 1) {
    throw Error("AES-CTR keystream failure");
  }
  ++counter_;
  pos_ = 0;
}

void Prg::fill_bytes(std::span<std::byte> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (pos_ == buffer_.size()) refill();
    const std::size_t n = std::min(out.size() - done, buffer_.size() - pos_);
    std::memcpy(out.data() + done, buffer_.data() + pos_, n);
    pos_ += n;
    done += n;
  }
}

double Prg::normal() {
  // Box-Muller; one draw per call keeps the stream position predictable.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace mpfix
