#include "nrgnn/noise.hpp"

#include <algorithm>
#include <stdexcept>

#include "nrgnn/rng.hpp"

namespace nrgnn {

std::vector<int32_t> cyclic_pair_map(int64_t num_classes) {
  std::vector<int32_t> map(static_cast<size_t>(num_classes));
  for (int64_t c = 0; c < num_classes; ++c) {
    map[static_cast<size_t>(c)] = static_cast<int32_t>((c + 1) % num_classes);
  }
  return map;
}

std::vector<int32_t> corrupt(const std::vector<int32_t>& labels, std::span<const int32_t> mask,
                             const NoiseSpec& spec, int64_t num_classes) {
  if (spec.rate < 0.0 || spec.rate > 1.0) {
    throw std::invalid_argument("noise: rate must lie in [0,1], got " + std::to_string(spec.rate));
  }
  std::vector<int32_t> pair_map = spec.pair_map;
  if (spec.kind == NoiseKind::Pair) {
    if (pair_map.empty()) pair_map = cyclic_pair_map(num_classes);
    if (static_cast<int64_t>(pair_map.size()) != num_classes) {
      throw std::invalid_argument("noise: pair_map covers " + std::to_string(pair_map.size()) +
                                  " classes, expected " + std::to_string(num_classes));
    }
    if (spec.rate > 0.0) {
      for (int64_t c = 0; c < num_classes; ++c) {
        if (pair_map[static_cast<size_t>(c)] == c) {
          throw std::invalid_argument("noise: pair_map has fixed point at class " + std::to_string(c));
        }
      }
    }
  }

  std::vector<int32_t> out = labels;
  Rng rng(spec.seed);
  // Masked nodes are visited in ascending order so the draw sequence is
  // reproducible regardless of how the mask was assembled.
  std::vector<int32_t> ordered(mask.begin(), mask.end());
  std::sort(ordered.begin(), ordered.end());
  for (const int32_t v : ordered) {
    const int32_t y = labels[static_cast<size_t>(v)];
    if (y < 0 || y >= num_classes) {
      throw std::invalid_argument("noise: label " + std::to_string(y) + " at node " +
                                  std::to_string(v) + " outside [0," + std::to_string(num_classes) + ")");
    }
    if (!rng.bernoulli(spec.rate)) continue;
    if (spec.kind == NoiseKind::Uniform) {
      // Uniform over the other C-1 classes.
      const int64_t shift = 1 + rng.index(num_classes - 1);
      out[static_cast<size_t>(v)] = static_cast<int32_t>((y + shift) % num_classes);
    } else {
      out[static_cast<size_t>(v)] = pair_map[static_cast<size_t>(y)];
    }
  }
  return out;
}

LabelSplit apply_noise(LabelSplit split, const NoiseSpec& spec, int64_t num_classes) {
  std::vector<int32_t> mask;
  mask.reserve(split.train.size() + split.val.size());
  mask.insert(mask.end(), split.train.begin(), split.train.end());
  mask.insert(mask.end(), split.val.begin(), split.val.end());
  const std::vector<int32_t> corrupted = corrupt(split.true_labels, mask, spec, num_classes);
  split.noisy_labels.assign(split.true_labels.size(), -1);
  for (const int32_t v : mask) {
    split.noisy_labels[static_cast<size_t>(v)] = corrupted[static_cast<size_t>(v)];
  }
  return split;
}

}  // namespace nrgnn
