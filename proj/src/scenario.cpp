#include "telepresence/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "telepresence/error.hpp"

namespace telepresence {

namespace {

constexpr double kPointFlexion = 0.5;  // shoulder-to-wrist distance while pointing
constexpr double kStepFrequency = 1.8;  // Hz
constexpr double kWalkRamp = 0.25;      // seconds to reach walking speed

double smoothstep(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

Vec3 lerp(const Vec3& a, const Vec3& b, double t) { return a + (b - a) * t; }

Vec3 nlerp(const Vec3& a, const Vec3& b, double t) {
    const Vec3 v = lerp(a, b, t);
    return v.norm() > 1e-9 ? v.normalized() : b;
}

int tick_count(double seconds, double rate) { return std::max(0, static_cast<int>(std::lround(seconds * rate))); }

SceneObject box(std::string id, ObjectCategory category, Vec3 center, Vec3 size, double yaw = 0.0) {
    SceneObject o;
    o.id = std::move(id);
    o.category = category;
    o.position = center;
    o.size = size;
    o.yaw = yaw;
    return o;
}

SceneObject seat(std::string id, ObjectCategory category, Vec3 center, Vec3 size, double sit_height) {
    SceneObject o = box(std::move(id), category, center, size);
    o.sittable = true;
    o.sit_height = sit_height;
    return o;
}

SceneObject paired(SceneObject o) {
    o.pair_id = o.id;
    return o;
}

}  // namespace

MotionScript::MotionScript(Skeleton skeleton, double tick_rate, Vec2 start, double yaw)
    : position_(start), yaw_(wrap_two_pi(yaw)) {
    skeleton.validate();
    if (!(tick_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "tick rate must be positive");
    trace_.tick_rate = tick_rate;
    trace_.skeleton = skeleton;
    root_height_ = skeleton.standing_root_height();
    head_dir_ = yaw_forward(yaw_);
    look_from_ = head_dir_;
}

Vec3 MotionScript::rest_hand(Side side) const {
    const Skeleton& s = trace_.skeleton;
    const double swing = 0.12 * std::sin(gait_phase_) * gait_amount_ * (side == Side::Left ? 1.0 : -1.0);
    return s.shoulder(side) + Vec3{0.0, -0.97 * s.arm_reach(), 0.05 + swing};
}

void MotionScript::emit() {
    const Skeleton& s = trace_.skeleton;
    UserSnapshot snap;
    snap.tick = static_cast<std::int64_t>(trace_.snapshots.size());
    snap.root = {{position_.x, root_height_, position_.z}, Quat::from_yaw(yaw_)};

    const Vec3 head_pos = snap.root.apply(s.neck_base() + Vec3{0.0, s.neck, 0.0});
    const Vec3 goal_dir = look_ ? (*look_ - head_pos).normalized() : yaw_forward(yaw_);
    head_dir_ = nlerp(look_from_, goal_dir, smoothstep(look_blend_));
    snap.head = {head_pos, Quat::look_rotation(head_dir_, kUp)};

    const Quat inv = snap.root.rotation.conjugate();
    auto hand = [&](Side side, const HandState& h) {
        const Vec3 shoulder_world = snap.root.apply(s.shoulder(side));
        const Vec3 rest = rest_hand(side);
        const Vec3 rest_fwd = Vec3{0.0, -1.0, 0.25}.normalized();
        Vec3 pos = rest;
        Vec3 fwd = rest_fwd;
        if (h.blend > 0.0) {
            const Vec3 dir = inv.rotate((h.point - shoulder_world).normalized());
            const double b = smoothstep(h.blend);
            pos = lerp(rest, s.shoulder(side) + dir * kPointFlexion, b);
            fwd = nlerp(rest_fwd, dir, b);
        }
        const Transform world = snap.root * Transform{pos, Quat::look_rotation(fwd, kUp)};
        return TrackedHand{world, hand_lifted(snap.root, world, StateMachineConfig{})};
    };
    snap.left_hand = hand(Side::Left, left_);
    snap.right_hand = hand(Side::Right, right_);

    const double standing = s.standing_root_height();
    const double sit_amount = std::clamp((standing - root_height_) / 0.4, 0.0, 1.0);
    auto foot = [&](Side side) {
        const Vec3 hip = side == Side::Left ? s.left_hip : s.right_hip;
        const double sign = side == Side::Left ? 1.0 : -1.0;
        const double stride = 0.15 * std::sin(gait_phase_) * gait_amount_ * sign;
        const double lift = 0.05 * std::max(0.0, std::sin(gait_phase_) * sign) * gait_amount_;
        const Vec3 local{hip.x, 0.05 + lift - root_height_, 0.45 * sit_amount + stride};
        return snap.root * Transform{local, Quat::from_yaw(0.0)};
    };
    snap.left_foot = foot(Side::Left);
    snap.right_foot = foot(Side::Right);

    snap.fingers.resize(10);
    for (std::size_t i = 0; i < snap.fingers.size(); ++i) {
        snap.fingers[i] = static_cast<float>(0.1 * static_cast<double>(i) + 0.05 * std::sin(0.05 * static_cast<double>(snap.tick)));
    }
    trace_.snapshots.push_back(std::move(snap));
}

MotionScript& MotionScript::idle(double seconds) {
    const int n = tick_count(seconds, trace_.tick_rate);
    for (int i = 0; i < n; ++i) emit();
    return *this;
}

MotionScript& MotionScript::look_at(const Vec3& point, double seconds) {
    look_from_ = head_dir_;
    look_ = point;
    look_blend_ = 0.0;
    const int n = std::max(1, tick_count(seconds, trace_.tick_rate));
    for (int i = 1; i <= n; ++i) {
        look_blend_ = static_cast<double>(i) / n;
        emit();
    }
    return *this;
}

MotionScript& MotionScript::look_ahead(double seconds) {
    look_from_ = head_dir_;
    look_.reset();
    look_blend_ = 0.0;
    const int n = std::max(1, tick_count(seconds, trace_.tick_rate));
    for (int i = 1; i <= n; ++i) {
        look_blend_ = static_cast<double>(i) / n;
        emit();
    }
    return *this;
}

MotionScript& MotionScript::turn_to(double yaw, double seconds) {
    const double from = yaw_;
    const double delta = wrap_pi(yaw - from);
    const int n = std::max(1, tick_count(seconds, trace_.tick_rate));
    for (int i = 1; i <= n; ++i) {
        yaw_ = wrap_two_pi(from + delta * smoothstep(static_cast<double>(i) / n));
        if (!look_) look_from_ = yaw_forward(yaw_);
        emit();
    }
    return *this;
}

MotionScript& MotionScript::walk_to(Vec2 dest, double speed) {
    if (!(speed > 0.0)) throw Error(ErrorCode::InvalidConfig, "walking speed must be positive");
    const double dx = dest.x - position_.x;
    const double dz = dest.z - position_.z;
    const double dist = std::hypot(dx, dz);
    if (dist < 1e-9) return *this;
    const double heading = std::atan2(dx, dz);
    if (std::abs(wrap_pi(heading - yaw_)) > 1e-6) turn_to(heading, 0.4);

    const double dt = 1.0 / trace_.tick_rate;
    const double total = dist / speed + kWalkRamp;
    const Vec2 start = position_;
    double travelled = 0.0;
    for (double t = dt; travelled < dist; t += dt) {
        const double v = speed * std::clamp(std::min(t / kWalkRamp, (total - t) / kWalkRamp), 0.0, 1.0);
        travelled = (t >= total) ? dist : std::min(dist, travelled + v * dt);
        position_ = {start.x + dx * travelled / dist, start.z + dz * travelled / dist};
        gait_amount_ = v / speed;
        gait_phase_ += kTwoPi * kStepFrequency * dt;
        emit();
    }
    position_ = dest;
    gait_amount_ = 0.0;
    return *this;
}

MotionScript& MotionScript::sit(double seat_height, double seconds) {
    const double from = root_height_;
    const double to = seat_height + 0.1;
    const int n = std::max(1, tick_count(seconds, trace_.tick_rate));
    for (int i = 1; i <= n; ++i) {
        root_height_ = from + (to - from) * smoothstep(static_cast<double>(i) / n);
        emit();
    }
    return *this;
}

MotionScript& MotionScript::stand_up(double seconds) {
    const double from = root_height_;
    const double to = trace_.skeleton.standing_root_height();
    const int n = std::max(1, tick_count(seconds, trace_.tick_rate));
    for (int i = 1; i <= n; ++i) {
        root_height_ = from + (to - from) * smoothstep(static_cast<double>(i) / n);
        emit();
    }
    return *this;
}

MotionScript& MotionScript::raise_hand(Side side, const Vec3& point, double seconds) {
    HandState& h = side == Side::Left ? left_ : right_;
    h.point = point;
    const int n = std::max(1, tick_count(seconds, trace_.tick_rate));
    const double from = h.blend;
    for (int i = 1; i <= n; ++i) {
        h.blend = from + (1.0 - from) * static_cast<double>(i) / n;
        emit();
    }
    return *this;
}

MotionScript& MotionScript::lower_hand(Side side, double seconds) {
    HandState& h = side == Side::Left ? left_ : right_;
    const int n = std::max(1, tick_count(seconds, trace_.tick_rate));
    const double from = h.blend;
    for (int i = 1; i <= n; ++i) {
        h.blend = from * (1.0 - static_cast<double>(i) / n);
        emit();
    }
    return *this;
}

Room office_a_room() {
    Room r;
    r.id = "office_a";
    r.extents = {{0.0, 0.0}, {5.0, 4.0}};
    r.objects = {
        paired(box("screen", ObjectCategory::Screen, {2.5, 1.3, 3.95}, {2.0, 1.2, 0.1})),
        paired(box("table", ObjectCategory::Table, {2.5, 0.375, 1.2}, {1.6, 0.75, 0.8})),
        seat("chair", ObjectCategory::Chair, {2.5, 0.45, 0.5}, {0.5, 0.9, 0.5}, 0.45),
        box("cabinet", ObjectCategory::Other, {0.3, 0.6, 2.0}, {0.5, 1.2, 1.0}),
        seat("sofa", ObjectCategory::Sofa, {4.5, 0.4, 1.5}, {0.8, 0.8, 1.8}, 0.42),
        box("plant", ObjectCategory::Other, {4.6, 0.5, 3.6}, {0.4, 1.0, 0.4}),
    };
    return r;
}

Room office_b_room() {
    Room r;
    r.id = "office_b";
    r.extents = {{0.0, 0.0}, {4.0, 4.5}};
    r.objects = {
        paired(box("screen", ObjectCategory::Screen, {3.95, 1.4, 2.25}, {4.0, 1.5, 0.1}, kPi / 2.0)),
        paired(box("table", ObjectCategory::Table, {1.5, 0.375, 2.2}, {1.2, 0.75, 2.0})),
        seat("chair", ObjectCategory::Chair, {0.5, 0.45, 2.2}, {0.5, 0.9, 0.5}, 0.45),
        seat("chair2", ObjectCategory::Chair, {2.6, 0.45, 0.6}, {0.5, 0.9, 0.5}, 0.45),
        box("bookcase", ObjectCategory::Other, {0.2, 1.0, 4.2}, {0.4, 2.0, 0.5}),
    };
    return r;
}

Room livingroom_room() {
    Room r;
    r.id = "livingroom";
    r.extents = {{0.0, 0.0}, {4.5, 5.0}};
    r.objects = {
        paired(box("screen", ObjectCategory::Screen, {0.05, 1.1, 2.5}, {1.6, 0.9, 0.1}, kPi / 2.0)),
        paired(box("table", ObjectCategory::Table, {1.6, 0.2, 2.5}, {0.6, 0.4, 1.0})),
        seat("sofa", ObjectCategory::Sofa, {3.0, 0.4, 2.5}, {0.9, 0.8, 2.0}, 0.42),
        seat("armchair", ObjectCategory::Chair, {1.8, 0.45, 4.3}, {0.7, 0.9, 0.7}, 0.45),
        box("shelf", ObjectCategory::Other, {4.25, 0.9, 0.7}, {0.4, 1.8, 1.0}),
        box("rug", ObjectCategory::Floor, {1.8, 0.005, 2.5}, {2.4, 0.01, 2.4}),
    };
    return r;
}

namespace {

MotionTrace office_a_trace(double rate) {
    const Vec3 first{2.0, 1.3, 3.9};
    const Vec3 second{3.0, 1.0, 3.9};
    return MotionScript({}, rate, {1.2, 2.2}, 0.0)
        .idle(0.5)
        .look_at(first, 0.3)
        .idle(0.8)
        .raise_hand(Side::Right, first, 0.6)
        .idle(1.5)
        .lower_hand(Side::Right, 0.5)
        .look_ahead(0.3)
        .walk_to({3.6, 2.6}, 0.9)
        .idle(0.8)
        .look_at(second, 0.3)
        .idle(0.7)
        .raise_hand(Side::Left, second, 0.6)
        .idle(1.5)
        .lower_hand(Side::Left, 0.5)
        .look_ahead(0.3)
        .idle(0.5)
        .build();
}

MotionTrace office_b_trace(double rate) {
    const Vec3 first{3.9, 1.4, 3.0};
    const Vec3 second{3.9, 1.4, 1.5};
    return MotionScript({}, rate, {2.8, 3.6}, kPi / 2.0)
        .idle(0.5)
        .look_at(first, 0.3)
        .idle(1.0)
        .raise_hand(Side::Right, first, 0.6)
        .idle(1.2)
        .lower_hand(Side::Right, 0.5)
        .look_ahead(0.3)
        .walk_to({2.6, 0.6}, 0.8)
        .turn_to(kPi / 2.0, 0.4)
        .sit(0.45, 0.8)
        .look_at(second, 0.3)
        .idle(1.0)
        .raise_hand(Side::Right, second, 0.6)
        .idle(1.2)
        .lower_hand(Side::Right, 0.5)
        .idle(0.5)
        .build();
}

MotionTrace livingroom_trace(double rate) {
    const Vec3 first{0.1, 1.1, 2.2};
    const Vec3 second{0.1, 1.0, 2.8};
    return MotionScript({}, rate, {2.0, 1.0}, 1.5 * kPi)
        .idle(0.5)
        .look_at(first, 0.3)
        .idle(0.9)
        .raise_hand(Side::Right, first, 0.6)
        .idle(1.3)
        .lower_hand(Side::Right, 0.5)
        .look_ahead(0.3)
        .walk_to({3.0, 2.2}, 0.8)
        .turn_to(1.5 * kPi, 0.5)
        .sit(0.42, 0.8)
        .look_at(second, 0.3)
        .idle(1.0)
        .raise_hand(Side::Left, second, 0.6)
        .idle(1.2)
        .lower_hand(Side::Left, 0.5)
        .idle(0.5)
        .build();
}

}  // namespace

std::vector<std::string> scenario_names() { return {"office", "livingroom", "mirror"}; }

Scenario make_scenario(const std::string& name, double tick_rate) {
    Scenario s;
    s.name = name;
    if (name == "office") {
        s.room_a = office_a_room();
        s.room_b = office_b_room();
        s.trace_a = office_a_trace(tick_rate);
        s.trace_b = office_b_trace(tick_rate);
    } else if (name == "livingroom") {
        s.room_a = office_a_room();
        s.room_b = livingroom_room();
        s.trace_a = office_a_trace(tick_rate);
        s.trace_b = livingroom_trace(tick_rate);
    } else if (name == "mirror") {
        s.room_a = office_a_room();
        s.room_b = office_a_room();
        s.trace_a = office_a_trace(tick_rate);
        s.trace_b = s.trace_a;
    } else {
        throw Error(ErrorCode::InvalidConfig, "unknown scenario '" + name + "'");
    }
    return s;
}

}  // namespace telepresence
