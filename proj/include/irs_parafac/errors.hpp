// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace irs_parafac {

/// Dimension mismatch, bad mode index, malformed configuration.
class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Input carries no usable information (all-zero matrix, zero tensor, zero column).
class DegenerateInput : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// A least-squares system is not full column rank within tolerance.
class RankDeficiency : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// An algorithm was called outside its operating conditions
/// (identifiability violated, training design does not admit a shortcut).
class PreconditionError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace irs_parafac
