#include "fracpme/params.hpp"

#include <cmath>

#include "fracpme/error.hpp"
#include "fracpme/field.hpp"

namespace fracpme {

void ModelParams::validate() const {
  require(std::isfinite(m) && m >= 1.0, "m must be >= 1");
  require(s > 0.0 && s < 1.0, "s must lie in (0,1)");
  require(delta >= 0.0 && mu >= 0.0 && eps >= 0.0, "regularization parameters must be >= 0");
  require(R > 0.0, "R must be > 0");
}

std::string describe(const ModelParams& p) {
  return "m=" + format_double(p.m) + " s=" + format_double(p.s) + " delta=" +
         format_double(p.delta) + " mu=" + format_double(p.mu) + " eps=" + format_double(p.eps) +
         " R=" + format_double(p.R);
}

}  // namespace fracpme
