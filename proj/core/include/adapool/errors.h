#pragma once

#include <stdexcept>
#include <string>

namespace adapool {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible extents between a map, a geometry, a beta map or a target.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Vectors of unequal channel count passed to a distance or similarity.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// A backward or unpool call was given a result that lacks the saved state it
// needs (weight masks, input statistics, beta).
class MissingState : public Error {
 public:
  using Error::Error;
};

// Non-finite activations, malformed operator names and similar.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed or corrupted serialized data (mask files, images, CSV rows).
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace adapool
