#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lazsl/error.hpp"
#include "lazsl/rng.hpp"

namespace lazsl {

/// Scale range and region-count range for random multi-scale square crops.
struct CropConfig {
  double alpha = 0.6;
  double beta = 1.0;
  std::uint32_t n_min = 60;
  std::uint32_t n_max = 90;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= beta && beta <= 1.0))
      raise(ErrorCode::InvalidArgument, "crop scales must satisfy 0 < alpha <= beta <= 1");
    if (n_min < 1 || n_min > n_max) raise(ErrorCode::InvalidArgument, "crop counts must satisfy 1 <= n_min <= n_max");
  }

  friend bool operator==(const CropConfig&, const CropConfig&) = default;
};

struct CropRect {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint32_t side = 0;

  friend bool operator==(const CropRect&, const CropRect&) = default;
};

struct CropPlan {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  CropConfig config;
  std::vector<CropRect> rects;
  std::vector<double> scales;  // gamma_i that produced rects[i]

  friend bool operator==(const CropPlan&, const CropPlan&) = default;
};

[[nodiscard]] inline std::uint32_t crop_side(double scale, std::uint32_t width, std::uint32_t height) {
  return static_cast<std::uint32_t>(std::floor(scale * static_cast<double>(std::min(width, height))));
}

/// Draw order from a single SplitMix64 stream seeded with config.seed:
/// the count N, then the N scales, then (x, y) for each rect in order.
[[nodiscard]] inline CropPlan generate_crop_plan(std::uint32_t width, std::uint32_t height, const CropConfig& config) {
  config.validate();
  if (width < 1 || height < 1) raise(ErrorCode::DegenerateImage, "image has zero extent");
  if (crop_side(config.alpha, width, height) < 1)
    raise(ErrorCode::DegenerateImage, "smallest crop would be empty for a " + std::to_string(width) + "x" +
                                          std::to_string(height) + " image");

  SplitMix64 rng(config.seed);
  CropPlan plan{width, height, config, {}, {}};
  const auto n = static_cast<std::size_t>(rng.uniform_int(config.n_min, config.n_max));

  plan.scales.reserve(n);
  for (std::size_t i = 0; i < n; ++i) plan.scales.push_back(rng.uniform(config.alpha, config.beta));

  plan.rects.reserve(n);
  for (double scale : plan.scales) {
    CropRect rect;
    rect.side = crop_side(scale, width, height);
    rect.x = static_cast<std::uint32_t>(rng.uniform_int(0, width - rect.side));
    rect.y = static_cast<std::uint32_t>(rng.uniform_int(0, height - rect.side));
    plan.rects.push_back(rect);
  }
  return plan;
}

struct PlanViolation {
  std::size_t rect_index;  // == rects.size() for plan-level violations
  std::string constraint;
};

/// Reports every broken invariant instead of throwing.
[[nodiscard]] inline std::vector<PlanViolation> validate_plan(const CropPlan& plan) {
  std::vector<PlanViolation> out;
  const std::size_t n = plan.rects.size();
  if (n < plan.config.n_min || n > plan.config.n_max)
    out.push_back({n, "count " + std::to_string(n) + " outside [" + std::to_string(plan.config.n_min) + ", " +
                          std::to_string(plan.config.n_max) + "]"});

  const std::uint32_t lo = crop_side(plan.config.alpha, plan.width, plan.height);
  const std::uint32_t hi = crop_side(plan.config.beta, plan.width, plan.height);
  for (std::size_t i = 0; i < n; ++i) {
    const CropRect& r = plan.rects[i];
    if (r.side == 0) out.push_back({i, "side is zero"});
    if (std::uint64_t{r.x} + r.side > plan.width)
      out.push_back({i, "out of bounds horizontally: x + side = " + std::to_string(std::uint64_t{r.x} + r.side) +
                            " > width " + std::to_string(plan.width)});
    if (std::uint64_t{r.y} + r.side > plan.height)
      out.push_back({i, "out of bounds vertically: y + side = " + std::to_string(std::uint64_t{r.y} + r.side) +
                            " > height " + std::to_string(plan.height)});
    if (r.side < lo || r.side > hi)
      out.push_back({i, "side " + std::to_string(r.side) + " outside scale range [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]"});
  }
  return out;
}

/// {"width","height","seed","rects":[{"x","y","side"},...]}
[[nodiscard]] inline nlohmann::json crop_plan_to_json(const CropPlan& plan) {
  nlohmann::json rects = nlohmann::json::array();
  for (const auto& r : plan.rects) rects.push_back({{"x", r.x}, {"y", r.y}, {"side", r.side}});
  return {{"width", plan.width}, {"height", plan.height}, {"seed", plan.config.seed}, {"rects", std::move(rects)}};
}

}  // namespace lazsl
