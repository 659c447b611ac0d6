#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace linforms {

// Per-slot conjugation signs: +1 plain, -1 conjugated.
struct ConjugationPattern {
  std::vector<int> signs;

  std::size_t size() const { return signs.size(); }
  bool conjugated(std::size_t a) const { return signs[a] < 0; }

  // (-1)^{|v|} for the cube system rows: slot index bits are v.
  static ConjugationPattern alternating(std::size_t t);
  static ConjugationPattern plain(std::size_t t);
};

// "+,-,-,+" or "alt"; `t` is needed to expand "alt".
ConjugationPattern parse_pattern(const std::string& text, std::size_t t);

}  // namespace linforms
