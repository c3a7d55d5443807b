#pragma once

namespace pinflow {

inline constexpr double kLeakySlope = 0.1;     // LeakyReLU negative slope
inline constexpr double kLogSigmaClamp = 7.0;  // |log sigma| bound before exp
inline constexpr double kLogTwoPi = 1.8378770664093453;  // ln(2*pi)

}  // namespace pinflow
