#include "qosgp/errors.hpp"

namespace qosgp {

void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidInput(message);
}

}  // namespace qosgp
