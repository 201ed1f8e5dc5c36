#pragma once

// Physical constants of the classic-control tasks, pinned to the CartPole-v1,
// MountainCar-v0 and Acrobot-v1 definitions of the Gym classic-control suite.

#include <numbers>

namespace m2dqn::constants {

namespace cartpole {
inline constexpr double kGravity = 9.8;
inline constexpr double kMassCart = 1.0;
inline constexpr double kMassPole = 0.1;
inline constexpr double kTotalMass = kMassPole + kMassCart;
/// Half the pole length.
inline constexpr double kLength = 0.5;
inline constexpr double kPoleMassLength = kMassPole * kLength;
inline constexpr double kForceMag = 10.0;
/// Seconds between state updates (explicit Euler).
inline constexpr double kTau = 0.02;
/// Pole angle at which the episode terminates: 12 degrees in radians.
inline constexpr double kThetaThreshold = 12.0 * 2.0 * std::numbers::pi / 360.0;
inline constexpr double kXThreshold = 2.4;
/// Each reset coordinate is uniform in [-kInitBound, kInitBound].
inline constexpr double kInitBound = 0.05;
inline constexpr int kMaxEpisodeSteps = 500;
inline constexpr double kSolveThreshold = 495.0;
}  // namespace cartpole

namespace mountaincar {
inline constexpr double kMinPosition = -1.2;
inline constexpr double kMaxPosition = 0.6;
inline constexpr double kMaxSpeed = 0.07;
inline constexpr double kGoalPosition = 0.5;
inline constexpr double kGoalVelocity = 0.0;
inline constexpr double kForce = 0.001;
inline constexpr double kGravity = 0.0025;
inline constexpr double kInitLow = -0.6;
inline constexpr double kInitHigh = -0.4;
inline constexpr int kMaxEpisodeSteps = 200;
inline constexpr double kSolveThreshold = -110.0;
}  // namespace mountaincar

namespace acrobot {
/// Integration interval; one RK4 step spans the whole interval.
inline constexpr double kDt = 0.2;
inline constexpr double kLinkLength1 = 1.0;
inline constexpr double kLinkMass1 = 1.0;
inline constexpr double kLinkMass2 = 1.0;
inline constexpr double kLinkComPos1 = 0.5;
inline constexpr double kLinkComPos2 = 0.5;
inline constexpr double kLinkMoi = 1.0;
inline constexpr double kGravity = 9.8;
inline constexpr double kMaxVel1 = 4.0 * std::numbers::pi;
inline constexpr double kMaxVel2 = 9.0 * std::numbers::pi;
/// Torque applied for actions 0, 1, 2.
inline constexpr double kTorques[3] = {-1.0, 0.0, 1.0};
inline constexpr double kInitBound = 0.1;
inline constexpr int kMaxEpisodeSteps = 500;
}  // namespace acrobot

namespace lunarlander {
inline constexpr double kSolveThreshold = 200.0;
}  // namespace lunarlander

}  // namespace m2dqn::constants
