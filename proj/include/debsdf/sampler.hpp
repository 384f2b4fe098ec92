#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "debsdf/errors.hpp"

namespace debsdf {

struct RayPoolEntry {
  int view = 0;
  int pixel = 0;
  double a = 1.0;  // blend uncertainty, refreshed whenever the ray is rendered
};

struct RayPool {
  std::vector<RayPoolEntry> entries;
  std::int64_t iteration = 0;
  std::int64_t warmup_steps = 0;
};

// Uniform while iteration < warmup_steps or when Σ A < 1e-12, otherwise
// p_i = A_i / Σ A. Throws ValidationError on an empty pool or negative A.
std::vector<double> build_ray_distribution(const RayPool& pool);

// n i.i.d. categorical draws (with replacement) by inverse-CDF lookup.
std::vector<std::size_t> draw_rays(std::span<const double> probs, std::size_t n, std::mt19937_64& rng);

}  // namespace debsdf
