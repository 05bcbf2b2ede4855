#include "consensus/values.hpp"

#include "consensus/errors.hpp"

namespace consensus {

void ValueVector::validate() const {
  for (int s : stances) {
    if (s != -1 && s != 0 && s != 1) {
      throw InvalidInputError("ValueVector: stances must be -1, 0, or +1");
    }
  }
}

}  // namespace consensus
