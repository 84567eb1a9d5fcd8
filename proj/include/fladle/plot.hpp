#pragma once

#include <string>

#include "fladle/ladle.hpp"

namespace fladle {

// Three side-by-side panels g(l), f(l), h(l) with a dotted marker at d_hat.
std::string ladle_svg(const LadleResult& result);

}  // namespace fladle
