#pragma once

#include <stdexcept>
#include <string>

namespace selfcalib {

// Input data admits no (or no stable) solution: coincident points, rank-deficient
// design matrices, vanishing elimination pivots.
class DegenerateError : public std::runtime_error {
  public:
    explicit DegenerateError(const std::string& what) : std::runtime_error(what) {}
};

// None of the pose candidates places a majority of points in front of both cameras.
class CheiralityError : public std::runtime_error {
  public:
    explicit CheiralityError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file.
class ParseError : public std::runtime_error {
  public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace selfcalib
