#pragma once

#include <cstdint>

namespace bapusim {

// Virtual time in integer microseconds. All delivery times are computed with
// integer arithmetic so repeated runs cannot drift.
using SimTime = int64_t;

// Link and sending rates in bits per second.
using Rate = int64_t;

using NodeId = int32_t;

constexpr SimTime kUsPerMs = 1000;
constexpr SimTime kUsPerSec = 1'000'000;

constexpr SimTime usec(int64_t v) { return v; }
constexpr SimTime msec(int64_t v) { return v * kUsPerMs; }
constexpr SimTime sec(int64_t v) { return v * kUsPerSec; }

constexpr double to_seconds(SimTime t) { return static_cast<double>(t) / kUsPerSec; }

// Time to clock `bytes` onto a link of `rate` bps, rounded up to a whole tick.
constexpr SimTime serialization_us(int64_t bytes, Rate rate) {
  return (bytes * 8 * kUsPerSec + rate - 1) / rate;
}

}  // namespace bapusim
