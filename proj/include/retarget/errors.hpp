#pragma once

#include <stdexcept>
#include <string>

namespace retarget {

/// A vector or matrix argument has the wrong length for the model or layer it is used with.
class DimensionError : public std::invalid_argument {
 public:
  DimensionError(const std::string& what, std::size_t expected, std::size_t actual)
      : std::invalid_argument(what + ": expected dimension " + std::to_string(expected) +
                              ", got " + std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

/// A frame name did not resolve against a model.
class UnknownFrameError : public std::invalid_argument {
 public:
  explicit UnknownFrameError(const std::string& frame)
      : std::invalid_argument("unknown frame '" + frame + "'"), frame_(frame) {}
  const std::string& frame() const noexcept { return frame_; }

 private:
  std::string frame_;
};

inline void check_dimension(const std::string& what, std::size_t expected, std::size_t actual) {
  if (expected != actual) throw DimensionError(what, expected, actual);
}

}  // namespace retarget
