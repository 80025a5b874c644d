#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eclaire {

// Base of every error the library throws. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid hyperparameters, unknown method names, bad grids.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data and model/rule files.
class DataError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::size_t epoch)
      : Error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

// Raised by the term-wise baselines when the number of materialized rules
// crosses the configured cap.
class ExplosionError : public Error {
 public:
  ExplosionError(std::size_t count, std::size_t cap, std::size_t layer)
      : Error("rule count " + std::to_string(count) + " exceeds cap " +
              std::to_string(cap) + " while substituting layer " +
              std::to_string(layer)),
        count_(count),
        cap_(cap),
        layer_(layer) {}

  std::size_t count() const noexcept { return count_; }
  std::size_t cap() const noexcept { return cap_; }
  std::size_t layer() const noexcept { return layer_; }

 private:
  std::size_t count_;
  std::size_t cap_;
  std::size_t layer_;
};

}  // namespace eclaire
