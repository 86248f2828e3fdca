#include "telepresence/state_machine.hpp"

#include <cmath>

#include "telepresence/error.hpp"

namespace telepresence {

namespace {

constexpr double kTimeSlack = 1e-12;

std::int64_t ticks_for(double seconds, double tick_rate) {
    return std::max<std::int64_t>(1, std::llround(seconds * tick_rate));
}

/// Least-squares slope of value over time.
template <typename Value>
double ls_slope(const ConvergenceWindow& window, Value value) {
    const auto& s = window.samples();
    const double n = static_cast<double>(s.size());
    double mean_t = 0.0;
    double mean_y = 0.0;
    for (const auto& e : s) {
        mean_t += static_cast<double>(e.tick) / window.tick_rate();
        mean_y += value(e);
    }
    mean_t /= n;
    mean_y /= n;
    double num = 0.0;
    double den = 0.0;
    for (const auto& e : s) {
        const double dt = static_cast<double>(e.tick) / window.tick_rate() - mean_t;
        num += dt * (value(e) - mean_y);
        den += dt * dt;
    }
    return num / den;
}

void require_full(const ConvergenceWindow& window) {
    if (!window.full()) {
        throw Error(ErrorCode::InsufficientSamples, "convergence window does not span the condition period");
    }
}

EffectorFixation cleared() { return {}; }

}  // namespace

std::string_view to_string(UserState state) {
    switch (state) {
        case UserState::Solo: return "Solo";
        case UserState::Locomotion: return "Locomotion";
        case UserState::Interaction: return "Interaction";
    }
    return "?";
}

std::string_view to_string(Effector effector) {
    switch (effector) {
        case Effector::Head: return "head";
        case Effector::LeftHand: return "left_hand";
        case Effector::RightHand: return "right_hand";
    }
    return "?";
}

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::StartWIP: return "StartWIP";
        case EventKind::RequestPlacement: return "RequestPlacement";
        case EventKind::Teleport: return "Teleport";
        case EventKind::StateChanged: return "StateChanged";
        case EventKind::TargetChanged: return "TargetChanged";
    }
    return "?";
}

void StateMachineConfig::validate() const {
    if (!(tick_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "tick_rate must be positive");
    if (!(speed_window > 0.0)) throw Error(ErrorCode::InvalidConfig, "speed_window must be positive");
    if (!(locomotion_threshold > stop_threshold && stop_threshold > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "need locomotion_threshold > stop_threshold > 0");
    }
    if (!(fixation_threshold > 0.0)) throw Error(ErrorCode::InvalidConfig, "fixation_threshold must be positive");
    if (!(v_threshold < 0.0) || !(omega_threshold < 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "convergence thresholds must be negative");
    }
    if (!(condition_period > 0.0)) throw Error(ErrorCode::InvalidConfig, "condition_period must be positive");
}

bool hand_lifted(const Transform& root, const Transform& hand, const StateMachineConfig& cfg) {
    if (hand.position.y - root.position.y >= cfg.lifted_height) return true;
    const Vec3 f = hand.rotation.forward();
    return std::asin(std::clamp(f.y, -1.0, 1.0)) > cfg.lifted_pitch;
}

SpeedWindow::SpeedWindow(double tick_rate, double span_seconds)
    : tick_rate_(tick_rate), span_ticks_(ticks_for(span_seconds, tick_rate)) {}

void SpeedWindow::push(std::int64_t tick, const Vec3& root_position) {
    if (!samples_.empty() && tick <= samples_.back().tick) {
        throw Error(ErrorCode::TickRegression, "speed window ticks must increase");
    }
    samples_.push_back({tick, root_position});
    while (samples_.front().tick < tick - span_ticks_) samples_.pop_front();
}

double pelvis_speed(const SpeedWindow& window) {
    const auto& s = window.samples();
    if (s.size() < 2) throw Error(ErrorCode::InsufficientSamples, "speed needs two samples");
    const Vec3 d = s.back().position - s.front().position;
    const double elapsed = static_cast<double>(s.back().tick - s.front().tick) / window.tick_rate();
    return d.horizontal_norm() / elapsed;
}

LocomotionStep step_locomotion(UserState state, double speed, const StateMachineConfig& cfg) {
    cfg.validate();
    if (state == UserState::Locomotion) {
        if (speed < cfg.stop_threshold) {
            return {UserState::Solo, {EventKind::RequestPlacement, EventKind::Teleport}};
        }
        return {UserState::Locomotion, {}};
    }
    if (speed > cfg.locomotion_threshold) return {UserState::Locomotion, {EventKind::StartWIP}};
    return {UserState::Solo, {}};
}

FixationTracker update_fixation(FixationTracker tracker, Effector effector, const std::optional<Ray>& ray,
                                const Room& room, double dt, const StateMachineConfig& cfg) {
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidConfig, "fixation dt must be positive");
    EffectorFixation& fix = tracker.at(effector);
    if (!ray) {
        fix = cleared();
        return tracker;
    }
    const auto hit = raycast(room, *ray);
    const SceneObject* object = hit ? room.find(hit->object_id) : nullptr;
    if (!object || !object->pair_id) {
        fix = cleared();
        return tracker;
    }
    if (object->id != fix.candidate) {
        fix = cleared();
        fix.candidate = object->id;
    }
    fix.accumulated += dt;
    if (fix.accumulated + kTimeSlack >= cfg.fixation_threshold) {
        fix.target = normalize_hit(*object, hit->world_point);
    }
    return tracker;
}

ConvergenceWindow::ConvergenceWindow(double tick_rate, double period_seconds)
    : tick_rate_(tick_rate), span_ticks_(ticks_for(period_seconds, tick_rate)) {}

void ConvergenceWindow::push(std::int64_t tick, double distance, double angle) {
    if (!samples_.empty() && tick != samples_.back().tick + 1) samples_.clear();
    samples_.push_back({tick, distance, angle});
    while (samples_.front().tick < tick - span_ticks_) samples_.pop_front();
}

bool ConvergenceWindow::full() const {
    return samples_.size() >= 2 && samples_.back().tick - samples_.front().tick >= span_ticks_;
}

bool check_distance_condition(const ConvergenceWindow& window, const StateMachineConfig& cfg) {
    require_full(window);
    const double rate = ls_slope(window, [](const ConvergenceWindow::Sample& s) { return s.distance; });
    return rate < cfg.v_threshold && cfg.v_threshold < 0.0;
}

bool check_angle_condition(const ConvergenceWindow& window, const StateMachineConfig& cfg) {
    require_full(window);
    const double rate = ls_slope(window, [](const ConvergenceWindow::Sample& s) { return s.angle; });
    return rate < cfg.omega_threshold && cfg.omega_threshold < 0.0;
}

EffectorTargets acquire_targets(const FixationTracker& tracker, const UserSnapshot& snapshot, const Room& room,
                                AcquisitionState& state, const StateMachineConfig& cfg) {
    EffectorTargets out;
    out.at(Effector::Head) = tracker.at(Effector::Head).target;
    const auto& head = out.at(Effector::Head);

    const std::string gaze = head ? head->object_id : std::string{};
    if (gaze != state.gaze_object) {
        state.gaze_object = gaze;
        state.left.clear();
        state.right.clear();
        state.left_latched = false;
        state.right_latched = false;
    }

    const SceneObject* gaze_object = head ? room.find(head->object_id) : nullptr;
    for (const Effector hand : {Effector::LeftHand, Effector::RightHand}) {
        const TrackedHand& tracked = hand == Effector::LeftHand ? snapshot.left_hand : snapshot.right_hand;
        auto own = tracker.at(hand).target;
        bool& latched = state.latched(hand);
        ConvergenceWindow& window = state.window(hand);

        if (!gaze_object) {
            out.at(hand) = own;
            continue;
        }
        const Vec3 gaze_point = denormalize_hit(*gaze_object, *head);
        const Vec3 to_target = gaze_point - tracked.pose.position;
        window.push(snapshot.tick, to_target.norm(), angle_between(tracked.pose.rotation.forward(), to_target));

        if (own && own->object_id == gaze) {
            latched = false;
            out.at(hand) = own;
            continue;
        }
        if (own) latched = false;  // the hand fixated something else on its own
        if (latched && window.full()) {
            const double rate = ls_slope(window, [](const ConvergenceWindow::Sample& s) { return s.distance; });
            if (rate > -cfg.v_threshold) latched = false;
        }
        if (!latched && window.full() && check_distance_condition(window, cfg) &&
            check_angle_condition(window, cfg)) {
            latched = true;
        }
        out.at(hand) = latched ? head : own;
    }
    return out;
}

UserState classify_state(UserState locomotion_state, const EffectorTargets& targets) {
    if (locomotion_state == UserState::Locomotion) return UserState::Locomotion;
    return targets.any() ? UserState::Interaction : UserState::Solo;
}

UserStateMachine::UserStateMachine(StateMachineConfig cfg)
    : cfg_(cfg), speed_window_(cfg.tick_rate, cfg.speed_window), acquisition_(cfg) {
    cfg_.validate();
}

TickOutput UserStateMachine::step(const UserSnapshot& snapshot, const Room& room) {
    if (last_tick_ && snapshot.tick <= *last_tick_) {
        throw Error(ErrorCode::TickRegression, "snapshot ticks must strictly increase");
    }
    last_tick_ = snapshot.tick;

    TickOutput out;
    speed_window_.push(snapshot.tick, snapshot.root.position);
    out.speed = speed_window_.samples().size() >= 2 ? pelvis_speed(speed_window_) : 0.0;

    const LocomotionStep loco = step_locomotion(locomotion_, out.speed, cfg_);
    locomotion_ = loco.state;
    for (const EventKind kind : loco.events) out.events.push_back({snapshot.tick, kind, {}});

    const double dt = cfg_.dt();
    tracker_ = update_fixation(std::move(tracker_), Effector::Head,
                               Ray::through(snapshot.head.position, snapshot.head.rotation.forward()), room, dt,
                               cfg_);
    for (const Effector hand : {Effector::LeftHand, Effector::RightHand}) {
        const TrackedHand& tracked = hand == Effector::LeftHand ? snapshot.left_hand : snapshot.right_hand;
        std::optional<Ray> ray;
        if (tracked.lifted) ray = Ray::through(tracked.pose.position, tracked.pose.rotation.forward());
        tracker_ = update_fixation(std::move(tracker_), hand, ray, room, dt, cfg_);
    }

    out.targets = acquire_targets(tracker_, snapshot, room, acquisition_, cfg_);
    out.state = classify_state(locomotion_, out.targets);
    if (out.state != state_) {
        out.events.push_back({snapshot.tick, EventKind::StateChanged, std::string(to_string(out.state))});
    }
    for (const Effector e : {Effector::Head, Effector::LeftHand, Effector::RightHand}) {
        const auto& before = targets_.at(e);
        const auto& now = out.targets.at(e);
        const std::string before_id = before ? before->object_id : std::string{};
        const std::string now_id = now ? now->object_id : std::string{};
        if (before_id != now_id) {
            out.events.push_back({snapshot.tick, EventKind::TargetChanged, std::string(to_string(e)) + ":" + now_id});
        }
    }
    state_ = out.state;
    targets_ = out.targets;
    return out;
}

}  // namespace telepresence
