#pragma once

namespace liepose {

// Plain doubles report their own value. The dual-number scalar overloads this
// so templated numeric code can take branch decisions on values alone.
inline double value_of(double x) { return x; }

}  // namespace liepose
