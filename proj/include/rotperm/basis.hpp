#pragma once

#include <string>
#include <string_view>

namespace rotperm {

enum class BasisId {
  linear1,   // (1, y)
  normal2,   // (1, y, y^2)
  gamma2,    // (1, log y, y), requires y > 0
  general3,  // (1, log|y|, y, y^2), requires y != 0
};

// A member of the fixed basis catalog for the density ratio model. The
// first component is always 1 (the normalization slot).
struct BasisFunction {
  BasisId id = BasisId::normal2;
  int dim = 3;

  std::string name() const;
  // Writes q(y) into out[0..dim); throws BasisDomainError outside the
  // basis domain.
  void eval(double y, double* out) const;

  static BasisFunction make(BasisId id);
  static BasisFunction from_name(std::string_view name);
};

}  // namespace rotperm
