#pragma once

#include <stdexcept>
#include <string>

namespace multilens {

// Base class for everything this library throws on purpose.
struct error : std::runtime_error {
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// A ray passed within the obstruction tolerance of a point mass.
// Plane and mass are 0-based indices; plane is -1 when the caller
// only knows the plane-local context.
struct obstruction_error : error {
  int plane;
  int mass;
  obstruction_error(int plane_index, int mass_index)
      : error("ray obstructed by mass " + std::to_string(mass_index) +
              " in plane " + std::to_string(plane_index)),
        plane(plane_index),
        mass(mass_index) {}
};

struct unsupported_error : error {
  explicit unsupported_error(const std::string& msg) : error(msg) {}
};

// Finite-difference step would straddle a pole.
struct step_error : error {
  explicit step_error(const std::string& msg) : error(msg) {}
};

// Degree cap or checked integer arithmetic exceeded.
struct overflow_error : error {
  explicit overflow_error(const std::string& msg) : error(msg) {}
};

struct zero_polynomial_error : error {
  explicit zero_polynomial_error(const std::string& msg) : error(msg) {}
};

struct degenerate_ensemble_error : error {
  explicit degenerate_ensemble_error(const std::string& msg) : error(msg) {}
};

// Two redundant computations of the same quantity disagreed.
struct internal_mismatch_error : error {
  explicit internal_mismatch_error(const std::string& msg) : error(msg) {}
};

struct cap_exceeded_error : error {
  explicit cap_exceeded_error(const std::string& msg) : error(msg) {}
};

struct ill_conditioned_error : error {
  explicit ill_conditioned_error(const std::string& msg) : error(msg) {}
};

struct non_generic_error : error {
  explicit non_generic_error(const std::string& msg) : error(msg) {}
};

struct method_disagreement_error : error {
  explicit method_disagreement_error(const std::string& msg) : error(msg) {}
};

// An image count exceeded the proven bound: always a software bug.
struct bound_violation_error : error {
  explicit bound_violation_error(const std::string& msg) : error(msg) {}
};

struct empty_result_error : error {
  explicit empty_result_error(const std::string& msg) : error(msg) {}
};

}  // namespace multilens
