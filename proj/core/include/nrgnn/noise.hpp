#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nrgnn/graph.hpp"

namespace nrgnn {

enum class NoiseKind { Uniform, Pair };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Uniform;
  double rate = 0.0;
  // Pair noise only. Empty selects the default cyclic shift c -> (c+1) mod C.
  std::vector<int32_t> pair_map;
  uint64_t seed = 0;
};

std::vector<int32_t> cyclic_pair_map(int64_t num_classes);

// Flips each masked label with probability spec.rate: uniformly to one of the
// other C-1 classes, or to pair_map[c]. Unmasked labels pass through.
std::vector<int32_t> corrupt(const std::vector<int32_t>& labels, std::span<const int32_t> mask,
                             const NoiseSpec& spec, int64_t num_classes);

// Applies one corruption pass over train ∪ val and blanks noisy labels
// elsewhere, matching the protocol of corrupting training and validation sets.
LabelSplit apply_noise(LabelSplit split, const NoiseSpec& spec, int64_t num_classes);

}  // namespace nrgnn
