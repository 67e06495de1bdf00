#pragma once

#include <optional>
#include <string>

#include "dircon/reachability.hpp"

namespace dircon {
namespace test {

/// Corrupts one certificate step so that the claim it makes is false:
///   crossing step: the reached saddle is swapped for its antipode;
///   flooding step (variant 0): the region keeps the source side of the chord;
///   flooding step (variant 1): the region moves to the antipodal triangle.
/// Returns a description of the corruption.
inline std::string corrupt_step(Step& step, int variant) {
  if (auto* ft = std::get_if<FirstTypeStep>(&step)) {
    ft->entry.saddle = -ft->entry.saddle;
    ft->entry.sign = -ft->entry.sign;
    return "crossing step aimed at the antipodal saddle";
  }
  auto& st = std::get<SecondTypeStep>(step);
  if (variant % 2 == 0) {
    st.region.keep_vertex = st.region.triangle.v[0];
    return "flooding region moved to the source side of the chord";
  }
  for (auto& v : st.region.triangle.v) v = -v;
  for (auto& s : st.region.triangle.signs) s = -s;
  st.region.keep_vertex = -st.region.keep_vertex;
  return "flooding region moved to the antipodal triangle";
}

/// Copy of a Controllable verdict with one step corrupted.
inline Verdict corrupt_verdict(const Verdict& v, int closure, int step, int variant) {
  Verdict out = v;
  auto& c = std::get<Controllable>(out);
  corrupt_step(c.closures.at(closure).certificate.at(step), variant);
  return out;
}

}  // namespace test
}  // namespace dircon
