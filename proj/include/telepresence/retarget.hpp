#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "telepresence/geometry.hpp"
#include "telepresence/placement.hpp"
#include "telepresence/state_machine.hpp"

namespace telepresence {

enum class Side : std::uint8_t { Left, Right };

/// Avatar proportions. Offsets are relative to the root (pelvis) with +x right, +y up, +z forward.
struct Skeleton {
    double spine = 0.5;
    double neck = 0.15;
    double upper_arm = 0.3;
    double forearm = 0.28;
    double hand = 0.08;
    double thigh = 0.45;
    double shin = 0.45;
    Vec3 left_shoulder{-0.18, 0.42, 0.0};
    Vec3 right_shoulder{0.18, 0.42, 0.0};
    Vec3 left_hip{-0.1, -0.05, 0.0};
    Vec3 right_hip{0.1, -0.05, 0.0};

    friend bool operator==(const Skeleton&, const Skeleton&) = default;

    void validate() const;
    double arm_reach() const { return upper_arm + forearm; }
    double leg_reach() const { return thigh + shin; }
    Vec3 neck_base() const { return {0.0, spine, 0.0}; }
    Vec3 shoulder(Side side) const { return side == Side::Left ? left_shoulder : right_shoulder; }
    /// Root height when standing with straight legs.
    double standing_root_height() const { return leg_reach() - left_hip.y; }
    /// Sum of the vertical chain lengths; used for calibration ratios.
    double stature() const { return spine + neck + thigh + shin; }
};

struct EffectorGoal {
    Vec3 position;  // root-relative
    Quat rotation;  // root-relative

    friend bool operator==(const EffectorGoal&, const EffectorGoal&) = default;
};

struct IkGoals {
    Transform root;  // world
    EffectorGoal head;
    EffectorGoal left_hand;
    EffectorGoal right_hand;
    EffectorGoal left_foot;
    EffectorGoal right_foot;
    std::vector<float> fingers;

    EffectorGoal& hand(Side s) { return s == Side::Left ? left_hand : right_hand; }
    const EffectorGoal& hand(Side s) const { return s == Side::Left ? left_hand : right_hand; }
};

enum class Bone : std::uint8_t {
    Neck,
    Head,
    LeftUpperArm,
    LeftForearm,
    LeftHand,
    RightUpperArm,
    RightForearm,
    RightHand,
    LeftThigh,
    LeftShin,
    LeftFoot,
    RightThigh,
    RightShin,
    RightFoot,
};
inline constexpr std::size_t kBoneCount = 14;

/// Whole-body pose stored as world-space bone orientations; lengths come from the skeleton.
struct AvatarPose {
    Transform root;
    std::array<Quat, kBoneCount> bones{};
    std::vector<float> fingers;

    Quat& bone(Bone b) { return bones[static_cast<std::size_t>(b)]; }
    const Quat& bone(Bone b) const { return bones[static_cast<std::size_t>(b)]; }
};

struct JointPositions {
    Vec3 neck_base;
    Vec3 head;
    Vec3 left_shoulder, left_elbow, left_wrist, left_hand_tip;
    Vec3 right_shoulder, right_elbow, right_wrist, right_hand_tip;
    Vec3 left_hip, left_knee, left_ankle;
    Vec3 right_hip, right_knee, right_ankle;

    const Vec3& shoulder(Side s) const { return s == Side::Left ? left_shoulder : right_shoulder; }
    const Vec3& elbow(Side s) const { return s == Side::Left ? left_elbow : right_elbow; }
    const Vec3& wrist(Side s) const { return s == Side::Left ? left_wrist : right_wrist; }
};

JointPositions forward_kinematics(const Skeleton& skeleton, const AvatarPose& pose);

/// Goals that reproduce the skeleton's rest pose (arms and legs straight down).
IkGoals rest_goals(const Skeleton& skeleton, const Transform& root);

/// Root-relative goals from tracked data, scaled about the root by `calibration` (avatar / user size).
IkGoals goals_from_snapshot(const UserSnapshot& snapshot, double calibration = 1.0);

struct TwoBoneSolution {
    Vec3 elbow;
    Vec3 wrist;
};

/// Analytic two-segment limb. `hint` is a pole direction selecting the bend plane. Targets
/// outside the reachable shell are clamped onto it.
TwoBoneSolution solve_two_bone(const Vec3& shoulder, double upper, double fore, const Vec3& target, const Vec3& hint);

AvatarPose solve_full_body(const Skeleton& skeleton, const IkGoals& goals);

/// Root transform for an avatar standing or sitting at `placement`.
Transform placement_root(const Placement& placement, const Skeleton& skeleton, double seat_height = 0.0);

/// Limbs follow the goals while the root stays at `frozen_root`.
AvatarPose walk_in_place(const Skeleton& skeleton, IkGoals goals, const Transform& frozen_root);

/// Aims one arm at `target_point`, keeping the user's shoulder-to-wrist distance and hand up vector.
/// `avatar_root` is the avatar's world root; the returned goals are root-relative.
IkGoals retarget_pointing(const Skeleton& skeleton, const Transform& avatar_root, IkGoals goals,
                          const Vec3& target_point, Side side);

/// Head goal looking at `target_point`, keeping the user's head up vector.
IkGoals aim_head(const Skeleton& skeleton, const Transform& avatar_root, IkGoals goals, const Vec3& target_point);

/// Raises the elevation of `target_point` seen from `eye` by `elevation_offset` radians at fixed
/// horizontal position. Elevations past the zenith clamp to the point straight above the eye.
Vec3 vertical_compensation(const Vec3& target_point, const Vec3& eye, double elevation_offset);

/// Great-circle interpolation of unit directions.
Vec3 interp_head(const Vec3& current_forward, const Vec3& desired_forward, double t);

/// Cubic Bezier from `current_pos` to `desired_pos` with the forward vectors as end tangents.
Vec3 interp_hand(const Vec3& current_pos, const Vec3& current_forward, const Vec3& desired_pos,
                 const Vec3& desired_forward, double t);

struct RetargetConfig {
    double interp_speed = 2.0;      // transitions per second
    double elevation_offset = 0.0;  // radians
};

struct EffectorInterp {
    bool initialized = false;
    std::string source;  // target object id, empty while mirroring the user
    Vec3 start_pos, start_forward;
    Vec3 current_pos, current_forward;  // world
    double t = 1.0;
};

struct InterpState {
    std::array<EffectorInterp, 3> effectors;

    EffectorInterp& at(Effector e) { return effectors[static_cast<std::size_t>(e)]; }
    const EffectorInterp& at(Effector e) const { return effectors[static_cast<std::size_t>(e)]; }
};

struct AimTarget {
    std::string object_id;
    Vec3 point;  // world, in the avatar's room
};

struct AvatarInputs {
    IkGoals goals;          // user goals, root-relative and calibrated
    Transform avatar_root;  // world root at the avatar's placement
    std::array<std::optional<AimTarget>, 3> targets;  // indexed by Effector
    double dt = 1.0 / 60.0;
};

/// One frame of the avatar: mirroring in Solo, walk-in-place in Locomotion, deictic retargeting
/// with interpolated transitions in Interaction.
AvatarPose avatar_tick(UserState mode, const Skeleton& skeleton, const AvatarInputs& inputs, InterpState& state,
                       const RetargetConfig& cfg = {});

/// Distance from `point` to the ray starting at `origin` through `through`.
double distance_to_ray(const Vec3& point, const Vec3& origin, const Vec3& through);

}  // namespace telepresence
