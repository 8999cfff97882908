#pragma once

#include <stdexcept>
#include <string>

namespace vclink {

// Input or configuration rejected before any work was done. The CLI maps
// this to exit status 1; everything else that escapes is a runtime error.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace vclink
