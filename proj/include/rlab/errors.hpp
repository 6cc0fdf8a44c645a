#pragma once

#include <stdexcept>
#include <string>

namespace rlab {

/// Base for all typed numeric and configuration failures. `name()` is the
/// stable identifier surfaced by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what)
      : std::runtime_error(what), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

#define RLAB_DEFINE_ERROR(Type)                                          \
  class Type : public Error {                                            \
   public:                                                               \
    explicit Type(const std::string& what) : Error(#Type, what) {}      \
  };

RLAB_DEFINE_ERROR(DegenerateMatrix)
RLAB_DEFINE_ERROR(NotHyperbolic)
RLAB_DEFINE_ERROR(InvalidArgument)
RLAB_DEFINE_ERROR(NewtonDivergence)
RLAB_DEFINE_ERROR(BranchCollision)
RLAB_DEFINE_ERROR(OutsideBasin)
RLAB_DEFINE_ERROR(TreeBudgetExceeded)
RLAB_DEFINE_ERROR(CandidateBudgetExceeded)
RLAB_DEFINE_ERROR(GridTooCoarse)
RLAB_DEFINE_ERROR(WeakHyperbolicity)
RLAB_DEFINE_ERROR(InsufficientMass)
RLAB_DEFINE_ERROR(UnsupportedSystem)
RLAB_DEFINE_ERROR(ConfigError)

#undef RLAB_DEFINE_ERROR

}  // namespace rlab
