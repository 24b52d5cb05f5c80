#pragma once

#include <string>

namespace fracpme {

// (m, s) plus the regularization of the approximate problem.
struct ModelParams {
  double m = 1.5;
  double s = 0.25;
  double delta = 0.0;
  double mu = 0.0;
  double eps = 0.0;
  double R = 50.0;

  double alpha() const { return 1.0 - s; }
  // Throws PreconditionError on m < 1, s outside (0,1), negative
  // regularization or R <= 0.
  void validate() const;
};

std::string describe(const ModelParams& p);

}  // namespace fracpme
