#pragma once
#include <stdexcept>
#include <string>

namespace mrgl {

// Invalid inputs: bad parameters, shape mismatches, out-of-domain values.
struct input_error : std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};

// A requested computation is outside what can be certified (e.g. grid
// search on a design that is too large).
struct certification_error : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg)
{
    if (!cond) throw input_error(msg);
}

} // namespace mrgl
