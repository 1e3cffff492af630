#include "opart/rng.hpp"

#include <cmath>
#include <limits>

#include "opart/error.hpp"

namespace opart {

ValidationError::ValidationError(std::vector<std::string> problems)
    : Error([&] {
        std::string msg = "validation failed";
        for (const auto& p : problems) msg += "\n  " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

double Rng::exponential() {
  // 1 - U lies in (0, 1], so the log is finite.
  return -std::log1p(-uniform());
}

std::uint64_t Rng::index(std::uint64_t n) {
  if (n == 0) throw Error("Rng::index: empty range");
  // Reject the tail so the modulo is unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

}  // namespace opart
