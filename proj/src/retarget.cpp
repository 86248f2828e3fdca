#include "telepresence/retarget.hpp"

#include <algorithm>

#include "telepresence/error.hpp"

namespace telepresence {

namespace {

constexpr Vec3 kDown{0.0, -1.0, 0.0};

Quat segment_rotation(const Quat& root, const Vec3& rest_dir, const Vec3& actual) {
    return Quat::from_to(root.rotate(rest_dir), actual.normalized()) * root;
}

Vec3 any_perpendicular(const Vec3& v) {
    Vec3 p = v.cross(kUp);
    if (p.norm() < 1e-9) p = v.cross(Vec3{1.0, 0.0, 0.0});
    return p.normalized();
}

struct LimbHints {
    Vec3 left_arm{-0.3, -0.2, -1.0};
    Vec3 right_arm{0.3, -0.2, -1.0};
    Vec3 leg{0.0, 0.0, 1.0};
};

void solve_arm(const Skeleton& skel, const Transform& root, const EffectorGoal& goal, Side side, AvatarPose& pose) {
    const LimbHints hints;
    const Vec3 shoulder = root.apply(skel.shoulder(side));
    const Vec3 target = root.apply(goal.position);
    const Vec3 hint = root.rotation.rotate(side == Side::Left ? hints.left_arm : hints.right_arm);
    const TwoBoneSolution s = solve_two_bone(shoulder, skel.upper_arm, skel.forearm, target, hint);
    const bool left = side == Side::Left;
    pose.bone(left ? Bone::LeftUpperArm : Bone::RightUpperArm) = segment_rotation(root.rotation, kDown, s.elbow - shoulder);
    pose.bone(left ? Bone::LeftForearm : Bone::RightForearm) = segment_rotation(root.rotation, kDown, s.wrist - s.elbow);
    pose.bone(left ? Bone::LeftHand : Bone::RightHand) = (root.rotation * goal.rotation).normalized();
}

void solve_leg(const Skeleton& skel, const Transform& root, const EffectorGoal& goal, Side side, AvatarPose& pose) {
    const LimbHints hints;
    const bool left = side == Side::Left;
    const Vec3 hip = root.apply(left ? skel.left_hip : skel.right_hip);
    const Vec3 target = root.apply(goal.position);
    const TwoBoneSolution s = solve_two_bone(hip, skel.thigh, skel.shin, target, root.rotation.rotate(hints.leg));
    pose.bone(left ? Bone::LeftThigh : Bone::RightThigh) = segment_rotation(root.rotation, kDown, s.elbow - hip);
    pose.bone(left ? Bone::LeftShin : Bone::RightShin) = segment_rotation(root.rotation, kDown, s.wrist - s.elbow);
    pose.bone(left ? Bone::LeftFoot : Bone::RightFoot) = (root.rotation * goal.rotation).normalized();
}

}  // namespace

void Skeleton::validate() const {
    for (const double l : {spine, neck, upper_arm, forearm, hand, thigh, shin}) {
        if (!(l > 0.0)) throw Error(ErrorCode::InvalidConfig, "skeleton bone lengths must be positive");
    }
}

JointPositions forward_kinematics(const Skeleton& skel, const AvatarPose& pose) {
    const Transform& root = pose.root;
    JointPositions j;
    j.neck_base = root.apply(skel.neck_base());
    j.head = j.neck_base + pose.bone(Bone::Neck).rotate(kUp) * skel.neck;

    j.left_shoulder = root.apply(skel.left_shoulder);
    j.left_elbow = j.left_shoulder + pose.bone(Bone::LeftUpperArm).rotate(kDown) * skel.upper_arm;
    j.left_wrist = j.left_elbow + pose.bone(Bone::LeftForearm).rotate(kDown) * skel.forearm;
    j.left_hand_tip = j.left_wrist + pose.bone(Bone::LeftHand).rotate(kForward) * skel.hand;

    j.right_shoulder = root.apply(skel.right_shoulder);
    j.right_elbow = j.right_shoulder + pose.bone(Bone::RightUpperArm).rotate(kDown) * skel.upper_arm;
    j.right_wrist = j.right_elbow + pose.bone(Bone::RightForearm).rotate(kDown) * skel.forearm;
    j.right_hand_tip = j.right_wrist + pose.bone(Bone::RightHand).rotate(kForward) * skel.hand;

    j.left_hip = root.apply(skel.left_hip);
    j.left_knee = j.left_hip + pose.bone(Bone::LeftThigh).rotate(kDown) * skel.thigh;
    j.left_ankle = j.left_knee + pose.bone(Bone::LeftShin).rotate(kDown) * skel.shin;

    j.right_hip = root.apply(skel.right_hip);
    j.right_knee = j.right_hip + pose.bone(Bone::RightThigh).rotate(kDown) * skel.thigh;
    j.right_ankle = j.right_knee + pose.bone(Bone::RightShin).rotate(kDown) * skel.shin;
    return j;
}

IkGoals rest_goals(const Skeleton& skel, const Transform& root) {
    IkGoals g;
    g.root = root;
    g.head = {skel.neck_base() + kUp * skel.neck, Quat::identity()};
    g.left_hand = {skel.left_shoulder + kDown * skel.arm_reach(), Quat::identity()};
    g.right_hand = {skel.right_shoulder + kDown * skel.arm_reach(), Quat::identity()};
    g.left_foot = {skel.left_hip + kDown * skel.leg_reach(), Quat::identity()};
    g.right_foot = {skel.right_hip + kDown * skel.leg_reach(), Quat::identity()};
    return g;
}

IkGoals goals_from_snapshot(const UserSnapshot& snapshot, double calibration) {
    const Transform inv = snapshot.root.inverse();
    auto rel = [&](const Transform& world) {
        const Transform local = inv * world;
        return EffectorGoal{local.position * calibration, local.rotation.normalized()};
    };
    IkGoals g;
    g.root = snapshot.root;
    g.head = rel(snapshot.head);
    g.left_hand = rel(snapshot.left_hand.pose);
    g.right_hand = rel(snapshot.right_hand.pose);
    g.left_foot = rel(snapshot.left_foot);
    g.right_foot = rel(snapshot.right_foot);
    g.fingers = snapshot.fingers;
    return g;
}

TwoBoneSolution solve_two_bone(const Vec3& shoulder, double upper, double fore, const Vec3& target, const Vec3& hint) {
    if (!(upper > 0.0 && fore > 0.0)) throw Error(ErrorCode::InvalidConfig, "limb segments must be positive");
    const Vec3 d = target - shoulder;
    const double dist = d.norm();
    if (dist < 1e-9) {
        Vec3 h = hint.normalized();
        if (h.norm() < 0.5) h = kDown;
        const Vec3 elbow = shoulder + h * upper;
        return {elbow, elbow - h * fore};
    }
    const Vec3 dir = d / dist;
    const double reach = std::clamp(dist, std::abs(upper - fore), upper + fore);
    const Vec3 wrist = shoulder + dir * reach;

    const double along = (upper * upper + reach * reach - fore * fore) / (2.0 * reach);
    const double out = std::sqrt(std::max(0.0, upper * upper - along * along));
    Vec3 pole = hint - dir * hint.dot(dir);
    pole = pole.norm() < 1e-9 ? any_perpendicular(dir) : pole.normalized();
    return {shoulder + dir * along + pole * out, wrist};
}

AvatarPose solve_full_body(const Skeleton& skel, const IkGoals& goals) {
    AvatarPose pose;
    pose.root = goals.root;
    pose.fingers = goals.fingers;
    const Transform& root = goals.root;

    const Vec3 neck_base = root.apply(skel.neck_base());
    Vec3 to_head = root.apply(goals.head.position) - neck_base;
    if (to_head.norm() < 1e-9) to_head = root.rotation.rotate(kUp);
    pose.bone(Bone::Neck) = segment_rotation(root.rotation, kUp, to_head);
    pose.bone(Bone::Head) = (root.rotation * goals.head.rotation).normalized();

    solve_arm(skel, root, goals.left_hand, Side::Left, pose);
    solve_arm(skel, root, goals.right_hand, Side::Right, pose);
    solve_leg(skel, root, goals.left_foot, Side::Left, pose);
    solve_leg(skel, root, goals.right_foot, Side::Right, pose);
    return pose;
}

Transform placement_root(const Placement& placement, const Skeleton& skel, double seat_height) {
    const double height = placement.pose == Pose::Sitting ? seat_height + 0.1 : skel.standing_root_height();
    return {{placement.x, height, placement.z}, Quat::from_yaw(placement.yaw)};
}

AvatarPose walk_in_place(const Skeleton& skel, IkGoals goals, const Transform& frozen_root) {
    goals.root = frozen_root;
    return solve_full_body(skel, goals);
}

IkGoals retarget_pointing(const Skeleton& skel, const Transform& avatar_root, IkGoals goals,
                          const Vec3& target_point, Side side) {
    if (!target_point.finite()) throw Error(ErrorCode::DegenerateTarget, "pointing target must be finite");
    EffectorGoal& hand = goals.hand(side);
    const double flexion = std::min((hand.position - skel.shoulder(side)).norm(), skel.arm_reach());
    const Vec3 shoulder = avatar_root.apply(skel.shoulder(side));
    const Vec3 aim = target_point - shoulder;
    if (aim.norm() < 1e-9) throw Error(ErrorCode::DegenerateTarget, "pointing target coincides with the shoulder");
    const Vec3 dir = aim.normalized();
    const Vec3 up = avatar_root.rotation.rotate(hand.rotation.up());
    const Quat world = Quat::look_rotation(dir, up);
    hand.position = avatar_root.apply_inverse(shoulder + dir * flexion);
    hand.rotation = (avatar_root.rotation.conjugate() * world).normalized();
    return goals;
}

IkGoals aim_head(const Skeleton&, const Transform& avatar_root, IkGoals goals, const Vec3& target_point) {
    const Vec3 eye = avatar_root.apply(goals.head.position);
    const Vec3 look = target_point - eye;
    if (look.norm() < 1e-9) return goals;
    const Vec3 up = avatar_root.rotation.rotate(goals.head.rotation.up());
    goals.head.rotation = (avatar_root.rotation.conjugate() * Quat::look_rotation(look, up)).normalized();
    return goals;
}

Vec3 vertical_compensation(const Vec3& target_point, const Vec3& eye, double elevation_offset) {
    if (!(elevation_offset >= 0.0)) throw Error(ErrorCode::InvalidConfig, "elevation offset must be nonnegative");
    if (elevation_offset == 0.0) return target_point;
    const Vec3 v = target_point - eye;
    const double horizontal = v.horizontal_norm();
    if (horizontal < 1e-12) return target_point;
    const double elevation = std::atan2(v.y, horizontal) + elevation_offset;
    if (elevation >= kPi / 2.0) return eye + kUp * v.norm();
    return {target_point.x, eye.y + horizontal * std::tan(elevation), target_point.z};
}

Vec3 interp_head(const Vec3& current_forward, const Vec3& desired_forward, double t) {
    if (t <= 0.0) return current_forward;
    if (t >= 1.0) return desired_forward;
    const Vec3 a = current_forward.normalized();
    const Vec3 b = desired_forward.normalized();
    const double theta = angle_between(a, b);
    if (theta < 1e-9) return b;
    if (theta > kPi - 1e-9) {
        Vec3 axis = kUp.cross(a);
        if (axis.norm() < 1e-9) axis = Vec3{1.0, 0.0, 0.0}.cross(a);
        return Quat::from_axis_angle(axis, theta * t).rotate(a).normalized();
    }
    const double s = std::sin(theta);
    return (a * (std::sin((1.0 - t) * theta) / s) + b * (std::sin(t * theta) / s)).normalized();
}

Vec3 interp_hand(const Vec3& current_pos, const Vec3& current_forward, const Vec3& desired_pos,
                 const Vec3& desired_forward, double t) {
    if (t <= 0.0) return current_pos;
    if (t >= 1.0) return desired_pos;
    const double k = (desired_pos - current_pos).norm() / 3.0;
    const Vec3 p0 = current_pos;
    const Vec3 p1 = current_pos + current_forward.normalized() * k;
    const Vec3 p2 = desired_pos - desired_forward.normalized() * k;
    const Vec3 p3 = desired_pos;
    const double u = 1.0 - t;
    return p0 * (u * u * u) + p1 * (3.0 * u * u * t) + p2 * (3.0 * u * t * t) + p3 * (t * t * t);
}

AvatarPose avatar_tick(UserState mode, const Skeleton& skel, const AvatarInputs& in, InterpState& state,
                       const RetargetConfig& cfg) {
    IkGoals goals = in.goals;
    const Transform& root = in.avatar_root;
    goals.root = root;
    if (mode == UserState::Locomotion) {
        state = InterpState{};
        return walk_in_place(skel, std::move(goals), root);
    }

    const IkGoals& user = in.goals;
    const Quat inv_root = root.rotation.conjugate();
    for (const Effector e : {Effector::Head, Effector::LeftHand, Effector::RightHand}) {
        const bool is_head = e == Effector::Head;
        const Side side = e == Effector::LeftHand ? Side::Left : Side::Right;
        const EffectorGoal& user_goal = is_head ? user.head : user.hand(side);
        const Vec3 up = root.rotation.rotate(user_goal.rotation.up());

        Vec3 desired_pos = root.apply(user_goal.position);
        Vec3 desired_fwd = root.rotation.rotate(user_goal.rotation.forward());
        std::string source;
        const auto& target = in.targets[static_cast<std::size_t>(e)];
        if (mode == UserState::Interaction && target) {
            source = target->object_id;
            if (is_head) {
                const IkGoals aimed = aim_head(skel, root, user, target->point);
                desired_fwd = root.rotation.rotate(aimed.head.rotation.forward());
            } else {
                Vec3 point = target->point;
                if (cfg.elevation_offset > 0.0) {
                    point = vertical_compensation(point, root.apply(user.head.position), cfg.elevation_offset);
                }
                const IkGoals aimed = retarget_pointing(skel, root, user, point, side);
                desired_pos = root.apply(aimed.hand(side).position);
                desired_fwd = root.rotation.rotate(aimed.hand(side).rotation.forward());
            }
        }

        EffectorInterp& s = state.at(e);
        if (!s.initialized) {
            s = {true, source, desired_pos, desired_fwd, desired_pos, desired_fwd, 1.0};
        } else if (source != s.source) {
            s.source = source;
            s.start_pos = s.current_pos;
            s.start_forward = s.current_forward;
            s.t = 0.0;
        }
        s.t = std::min(1.0, s.t + in.dt * cfg.interp_speed);
        const Vec3 pos = is_head ? desired_pos : interp_hand(s.start_pos, s.start_forward, desired_pos, desired_fwd, s.t);
        const Vec3 fwd = interp_head(s.start_forward, desired_fwd, s.t);
        s.current_pos = pos;
        s.current_forward = fwd;

        const Quat rotation = (inv_root * Quat::look_rotation(fwd, up)).normalized();
        if (is_head) {
            goals.head.rotation = rotation;
        } else {
            goals.hand(side) = {root.apply_inverse(pos), rotation};
        }
    }
    return solve_full_body(skel, goals);
}

double distance_to_ray(const Vec3& point, const Vec3& origin, const Vec3& through) {
    const Vec3 dir = (through - origin).normalized();
    const Vec3 w = point - origin;
    const double s = std::max(0.0, w.dot(dir));
    return (w - dir * s).norm();
}

}  // namespace telepresence
