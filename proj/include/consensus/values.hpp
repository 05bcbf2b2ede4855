#pragma once

#include <array>
#include <cstddef>

#include "consensus/errors.hpp"

namespace consensus {

// Canonical order of the ten Schwartz basic-value dimensions. Every
// ValueVector, judge rubric and VSC comparison uses exactly this order.
inline constexpr std::array<const char*, 10> kSchwartzValues = {
    "self-direction", "stimulation", "hedonism",  "achievement", "power",
    "security",       "conformity",  "tradition", "benevolence", "universalism",
};

// A stance vector over the Schwartz dimensions: -1 contrary, 0 neutral,
// +1 aligned.
struct ValueVector {
  std::array<int, 10> stances{};

  void validate() const;  // every entry in {-1, 0, +1}
};

}  // namespace consensus
