#pragma once

#include <stdexcept>
#include <string>

namespace crashforge {

// Every failure the library reports derives from Error. Subclasses map one to
// one onto the documented failure kinds so callers (and the CLI's exit-code
// mapping) can dispatch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CRASHFORGE_ERROR(Name)            \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

CRASHFORGE_ERROR(ConfigError);
CRASHFORGE_ERROR(UnknownBehaviorRule);
CRASHFORGE_ERROR(UnknownScenario);
CRASHFORGE_ERROR(NonConvergent);
CRASHFORGE_ERROR(NonFinite);
CRASHFORGE_ERROR(EmptyTrace);
CRASHFORGE_ERROR(IoError);
CRASHFORGE_ERROR(ParseError);
CRASHFORGE_ERROR(EmptyManifest);
CRASHFORGE_ERROR(InsufficientEpisodes);
CRASHFORGE_ERROR(ShapeMismatch);
CRASHFORGE_ERROR(NonFiniteLoss);
CRASHFORGE_ERROR(ChecksumMismatch);
CRASHFORGE_ERROR(SpecHashMismatch);
CRASHFORGE_ERROR(EmptyTestSet);

#undef CRASHFORGE_ERROR

}  // namespace crashforge
