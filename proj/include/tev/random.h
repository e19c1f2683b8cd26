#ifndef TEV_RANDOM_H_
#define TEV_RANDOM_H_

#include <cstdint>
#include <random>
#include <vector>

namespace tev {

// Deterministic random source. The standard distributions are
// implementation-defined, so every draw is derived directly from the
// (fully specified) mt19937_64 bit stream.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  uint64_t index(uint64_t n);

  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T> &items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  template <typename T>
  const T &pick(const std::vector<T> &items) {
    return items[static_cast<size_t>(index(items.size()))];
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent stream seed from a master seed and a salt.
uint64_t derive_seed(uint64_t master, uint64_t salt);

}  // namespace tev

#endif  // TEV_RANDOM_H_
