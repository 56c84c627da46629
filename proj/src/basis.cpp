#include "rotperm/basis.hpp"

#include <cmath>

#include "rotperm/errors.hpp"

namespace rotperm {

std::string BasisFunction::name() const {
  switch (id) {
    case BasisId::linear1: return "linear1";
    case BasisId::normal2: return "normal2";
    case BasisId::gamma2: return "gamma2";
    case BasisId::general3: return "general3";
  }
  return "?";
}

void BasisFunction::eval(double y, double* out) const {
  out[0] = 1.0;
  switch (id) {
    case BasisId::linear1:
      out[1] = y;
      return;
    case BasisId::normal2:
      out[1] = y;
      out[2] = y * y;
      return;
    case BasisId::gamma2:
      if (!(y > 0.0))
        throw BasisDomainError("basis domain error: gamma2 needs y > 0");
      out[1] = std::log(y);
      out[2] = y;
      return;
    case BasisId::general3:
      if (y == 0.0)
        throw BasisDomainError("basis domain error: general3 needs y != 0");
      out[1] = std::log(std::fabs(y));
      out[2] = y;
      out[3] = y * y;
      return;
  }
  throw BasisDomainError("unknown basis");
}

BasisFunction BasisFunction::make(BasisId id) {
  switch (id) {
    case BasisId::linear1: return {id, 2};
    case BasisId::normal2: return {id, 3};
    case BasisId::gamma2: return {id, 3};
    case BasisId::general3: return {id, 4};
  }
  throw BasisDomainError("unknown basis");
}

BasisFunction BasisFunction::from_name(std::string_view name) {
  if (name == "linear1") return make(BasisId::linear1);
  if (name == "normal2") return make(BasisId::normal2);
  if (name == "gamma2") return make(BasisId::gamma2);
  if (name == "general3") return make(BasisId::general3);
  throw ParseError("unknown basis '" + std::string(name) +
                   "' (expected linear1|normal2|gamma2|general3)");
}

}  // namespace rotperm
