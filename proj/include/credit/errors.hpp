#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace credit {

// Thrown when a joint action has the wrong arity or an action index is
// outside the environment's action set.
struct InvalidAction : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown by step() once an episode has terminated.
struct EpisodeFinished : std::runtime_error {
  EpisodeFinished() : std::runtime_error("episode already finished") {}
};

// Thrown by reset() when entities cannot be placed without overlap.
struct InfeasibleScenario : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scenario-name grammar violation. `offset` is the byte position of the
// first character that failed to parse.
struct ParseError : std::runtime_error {
  std::size_t offset;
  ParseError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what + " (at byte " + std::to_string(byte_offset) + ")"),
        offset(byte_offset) {}
};

// Exact Shapley is capped; exceeding the cap is an explicit error.
struct TooManyAgents : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A correlation input with zero variance.
struct DegenerateSeries : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The absolute metric needs a stored policy snapshot for the best interval.
struct MissingSnapshot : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace credit
