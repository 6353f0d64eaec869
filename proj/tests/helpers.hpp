#pragma once

#include <functional>
#include <string>
#include <tuple>
#include <vector>

#include "spreadlab/embedding.hpp"

namespace spreadlab::testing {

inline bool starts_with(const std::string& text, const std::string& prefix) {
  return text.rfind(prefix, 0) == 0;
}

/// True when fn() throws a std::exception whose message starts with prefix.
template <class Fn>
bool throws_prefix(Fn&& fn, const std::string& prefix) {
  try {
    fn();
  } catch (const std::exception& e) {
    return std::string(e.what()).rfind(prefix, 0) == 0;
  }
  return false;
}

/// Applies the same sequence of plane rotations to every point: a cheap
/// stand-in for an arbitrary global orthogonal transform.
inline EmbeddingConfig rotate_config(const EmbeddingConfig& config,
                                     const std::vector<std::tuple<int, int, double>>& rotations) {
  EmbeddingConfig out = config;
  for (auto& p : out.points)
    for (const auto& [i, j, theta] : rotations) p = rotate_in_plane(p, i, j, theta);
  return out;
}

}  // namespace spreadlab::testing
