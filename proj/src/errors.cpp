#include "addgxe/errors.hpp"

#include <utility>

namespace addgxe {

SchemaError::SchemaError(const std::string& column, const std::string& what)
    : Error(what), column_(column) {}

ValidationError::ValidationError(std::size_t row, const std::string& what)
    : Error(row > 0 ? "row " + std::to_string(row) + ": " + what : what), row_(row) {}

DivergenceError::DivergenceError(const std::string& what, std::vector<double> iterate)
    : Error(what), iterate_(std::move(iterate)) {}

}  // namespace addgxe
