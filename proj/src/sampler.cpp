#include "debsdf/sampler.hpp"

#include <algorithm>

#include "debsdf/errors.hpp"

namespace debsdf {

std::vector<double> build_ray_distribution(const RayPool& pool) {
  const std::size_t n = pool.entries.size();
  if (n == 0) throw ValidationError("ray pool is empty");
  std::vector<double> probs(n, 1.0 / static_cast<double>(n));
  if (pool.iteration < pool.warmup_steps) return probs;

  double total = 0.0;
  for (const RayPoolEntry& e : pool.entries) {
    if (!(e.a >= 0.0)) throw ValidationError("blend uncertainty must be >= 0");
    total += e.a;
  }
  if (total < 1e-12) return probs;
  for (std::size_t i = 0; i < n; ++i) probs[i] = pool.entries[i].a / total;
  return probs;
}

std::vector<std::size_t> draw_rays(std::span<const double> probs, std::size_t n, std::mt19937_64& rng) {
  if (probs.empty()) throw ValidationError("draw_rays needs a non-empty distribution");
  std::vector<double> cdf(probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0)) throw ValidationError("probabilities must be >= 0");
    acc += probs[i];
    cdf[i] = acc;
  }
  if (!(acc > 0.0)) throw ValidationError("probabilities sum to zero");

  std::vector<std::size_t> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    // 53-bit uniform in [0, 1), independent of the standard library's
    // distribution implementations.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t idx = static_cast<std::size_t>(it - cdf.begin());
    if (idx >= cdf.size()) {
      // Rounding pushed u to the total; take the last entry with mass.
      idx = cdf.size() - 1;
      while (idx > 0 && probs[idx] == 0.0) --idx;
    }
    out[k] = idx;
  }
  return out;
}

}  // namespace debsdf
