#include "shadowblow/error.hpp"

#include <utility>

namespace shadowblow {

ValidationError::ValidationError(std::string field, const std::string& what)
    : Error(field + ": " + what), field_(std::move(field)) {}

}  // namespace shadowblow
