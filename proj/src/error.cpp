#include "rankselect/error.hpp"

namespace rankselect {

DegenerateTailError::DegenerateTailError(int rank, int numerical_rank)
    : DegenerateTailError("degenerate tail: rank " + std::to_string(rank) +
                              " leaves no positive tail eigenvalue (numerical rank " +
                              std::to_string(numerical_rank) + ")",
                          rank, numerical_rank) {}

DegenerateTailError::DegenerateTailError(const std::string& message, int rank,
                                         int numerical_rank)
    : std::runtime_error(message), rank_(rank), numerical_rank_(numerical_rank) {}

}  // namespace rankselect
