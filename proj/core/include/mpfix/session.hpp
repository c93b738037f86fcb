#pragma once

#include <cstdint>

#include "mpfix/precomp.hpp"
#include "mpfix/prg.hpp"
#include "mpfix/transport.hpp"

namespace mpfix {

// One party's handle on a protocol run: identity, channels, its own
// precomputation pools and a private randomness stream for input sharing.
class Session {
 public:
  Session(Network& net, PrecompSource& precomp, std::uint64_t seed)
      : net_(net), precomp_(precomp), prg_(seed, 0x5e55100 + static_cast<std::uint64_t>(net.party())) {}

  int party() const { return net_.party(); }
  int parties() const { return net_.parties(); }
  bool dry_run() const { return net_.is_dry_run(); }

  Network& net() { return net_; }
  PrecompSource& precomp() { return precomp_; }
  Prg& prg() { return prg_; }
  CommMetrics& metrics() { return net_.metrics(); }

 private:
  Network& net_;
  PrecompSource& precomp_;
  Prg prg_;
};

}  // namespace mpfix
