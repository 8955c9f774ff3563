#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "lazsl/bundle.hpp"
#include "lazsl/core.hpp"
#include "lazsl/error.hpp"
#include "lazsl/rng.hpp"

namespace lazsl {

/// Planted-attribute benchmark.
///
/// Each class y draws a random unit center z_y and m_attributes prototypes
///   q_yj = normalize(a * z_y + sqrt(1 - a^2) * e_yj),   a = class_coherence,
/// so attributes of one class are correlated the way prompt embeddings that
/// share a class name are. An item of class y has signal_regions_per_item
/// regions that are perturbed copies of prototypes of y. Each remaining region
/// is, with probability distractor_fraction, a perturbed prototype of some
/// other class (clutter), and otherwise an isotropic random unit vector.
/// Perturbations add N(0, sigma^2 / dim) per coordinate, so noise_sigma is the
/// expected perturbation norm. The global embedding is the normalized mean of
/// the regions. Region order is shuffled.
struct SynthConfig {
  std::size_t n_classes = 20;
  std::size_t m_attributes = 6;
  std::size_t n_regions = 16;
  std::size_t dim = 32;
  std::size_t signal_regions_per_item = 3;
  double noise_sigma = 0.35;  // expected norm of the perturbation added to a prototype
  double class_coherence = 0.8;
  double distractor_fraction = 0.75;
  std::size_t n_items = 200;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_classes < 1 || m_attributes < 1 || n_regions < 1 || n_items < 1)
      raise(ErrorCode::InvalidArgument, "synthetic sizes must be positive");
    if (dim < 2) raise(ErrorCode::InvalidArgument, "synthetic dim must be >= 2");
    if (signal_regions_per_item > n_regions)
      raise(ErrorCode::InvalidArgument, "signal regions exceed the region count");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
      raise(ErrorCode::InvalidArgument, "noise_sigma must be finite and >= 0");
    if (!(class_coherence >= 0.0 && class_coherence <= 1.0))
      raise(ErrorCode::InvalidArgument, "class_coherence must lie in [0, 1]");
    if (!(distractor_fraction >= 0.0 && distractor_fraction <= 1.0))
      raise(ErrorCode::InvalidArgument, "distractor_fraction must lie in [0, 1]");
  }
};

struct SynthBenchmark {
  EmbeddingBundle vision;
  EmbeddingBundle semantic;
  std::vector<std::string> labels;  // class id per vision entry
};

inline std::string synth_class_id(std::size_t y) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "class-%04zu", y);
  return buf;
}

inline std::string synth_item_id(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "item-%05zu", k);
  return buf;
}

namespace detail {

inline std::vector<double> gaussian_vector(SplitMix64& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.normal();
  return v;
}

inline std::vector<double> unit(std::vector<double> v) {
  const EmbeddingVector n = normalize(EmbeddingVector(std::move(v)));
  return {n.values().begin(), n.values().end()};
}

inline void append_f32(std::vector<float>& out, const std::vector<double>& v) {
  for (double x : v) out.push_back(static_cast<float>(x));
}

}  // namespace detail

/// Deterministic in config.seed. Items cycle through the classes in order so
/// the label distribution is balanced.
[[nodiscard]] inline SynthBenchmark synth_benchmark(const SynthConfig& config) {
  config.validate();
  SplitMix64 rng(config.seed);
  const std::size_t d = config.dim;

  std::vector<std::vector<std::vector<double>>> prototypes(config.n_classes);
  SynthBenchmark out;
  out.semantic.role = BundleRole::Semantic;
  out.semantic.dim = d;
  for (std::size_t y = 0; y < config.n_classes; ++y) {
    const auto center = detail::unit(detail::gaussian_vector(rng, d));
    BundleEntry e;
    e.id = synth_class_id(y);
    e.name = "synthetic class " + std::to_string(y);
    e.tensor = e.id + ".f32";
    e.rows = config.m_attributes;
    for (std::size_t j = 0; j < config.m_attributes; ++j) {
      auto own = detail::unit(detail::gaussian_vector(rng, d));
      const double a = config.class_coherence, b = std::sqrt(1.0 - a * a);
      for (std::size_t t = 0; t < d; ++t) own[t] = a * center[t] + b * own[t];
      prototypes[y].push_back(detail::unit(std::move(own)));
      e.attributes.push_back("attribute " + std::to_string(j) + " of class " + std::to_string(y));
      detail::append_f32(e.data, prototypes[y].back());
    }
    out.semantic.entries.push_back(std::move(e));
  }

  out.vision.role = BundleRole::Vision;
  out.vision.dim = d;
  const double per_coord_sigma = config.noise_sigma / std::sqrt(static_cast<double>(d));
  for (std::size_t k = 0; k < config.n_items; ++k) {
    const std::size_t y = k % config.n_classes;
    std::vector<std::vector<double>> regions;
    regions.reserve(config.n_regions);
    for (std::size_t s = 0; s < config.signal_regions_per_item; ++s) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, config.m_attributes - 1));
      std::vector<double> v = prototypes[y][j];
      if (config.noise_sigma > 0.0) {
        for (double& x : v) x += per_coord_sigma * rng.normal();
        v = detail::unit(std::move(v));
      }
      regions.push_back(std::move(v));
    }
    while (regions.size() < config.n_regions) {
      if (config.n_classes > 1 && rng.uniform01() < config.distractor_fraction) {
        auto oy = static_cast<std::size_t>(rng.uniform_int(0, config.n_classes - 2));
        if (oy >= y) ++oy;
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, config.m_attributes - 1));
        std::vector<double> v = prototypes[oy][j];
        for (double& x : v) x += per_coord_sigma * rng.normal();
        regions.push_back(detail::unit(std::move(v)));
      } else {
        regions.push_back(detail::unit(detail::gaussian_vector(rng, d)));
      }
    }

    // Fisher-Yates so signal regions do not sit at fixed positions.
    for (std::size_t i = regions.size(); i > 1; --i)
      std::swap(regions[i - 1], regions[static_cast<std::size_t>(rng.uniform_int(0, i - 1))]);

    std::vector<double> mean(d, 0.0);
    for (const auto& r : regions)
      for (std::size_t t = 0; t < d; ++t) mean[t] += r[t] / static_cast<double>(regions.size());

    BundleEntry e;
    e.id = synth_item_id(k);
    e.tensor = e.id + ".f32";
    e.rows = config.n_regions + 1;
    e.label = synth_class_id(y);
    detail::append_f32(e.data, detail::unit(std::move(mean)));
    for (const auto& r : regions) detail::append_f32(e.data, r);
    out.vision.entries.push_back(std::move(e));
    out.labels.push_back(synth_class_id(y));
  }
  return out;
}

}  // namespace lazsl
