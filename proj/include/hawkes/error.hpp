#pragma once

#include <stdexcept>
#include <string>

namespace hawkes {

// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A stated precondition (e.g. the average-gap condition) does not hold.
class PreconditionError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Gradient requested for a parameter that does not enter smoothly.
class UnsupportedParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Simulation exceeded its event cap.
class ExplosionError : public std::runtime_error {
 public:
  ExplosionError(double time_reached, std::size_t events)
      : std::runtime_error("event cap exceeded (" + std::to_string(events) +
                           " events) at t=" + std::to_string(time_reached)),
        time_reached_(time_reached),
        events_(events) {}

  double time_reached() const noexcept { return time_reached_; }
  std::size_t events() const noexcept { return events_; }

 private:
  double time_reached_;
  std::size_t events_;
};

}  // namespace hawkes
