#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "telepresence/geometry.hpp"
#include "telepresence/scene.hpp"

namespace telepresence {

struct TrackedHand {
    Transform pose;
    bool lifted = false;
};

/// One tick of tracked user data in room coordinates.
struct UserSnapshot {
    std::int64_t tick = 0;
    Transform root;
    Transform head;
    TrackedHand left_hand;
    TrackedHand right_hand;
    Transform left_foot;
    Transform right_foot;
    std::vector<float> fingers;  // opaque glove rotations, passed through untouched
};

enum class UserState : std::uint8_t { Solo, Locomotion, Interaction };
enum class Effector : std::uint8_t { Head, LeftHand, RightHand };

std::string_view to_string(UserState state);
std::string_view to_string(Effector effector);

struct StateMachineConfig {
    double tick_rate = 60.0;
    double speed_window = 0.166;        // seconds
    double locomotion_threshold = 0.4;  // m/s
    double stop_threshold = 0.15;       // m/s
    double fixation_threshold = 0.5;    // seconds
    double v_threshold = -0.2;          // m/s
    double omega_threshold = deg_to_rad(-20.0);  // rad/s
    double condition_period = 0.3;      // seconds
    double lifted_height = 0.35;        // hand above root, meters
    double lifted_pitch = deg_to_rad(-30.0);

    /// Throws InvalidConfig unless locomotion_threshold > stop_threshold > 0 and the
    /// convergence thresholds are negative.
    void validate() const;
    double dt() const { return 1.0 / tick_rate; }
};

/// Hand height above the root reaches `lifted_height`, or the hand forward pitch exceeds `lifted_pitch`.
bool hand_lifted(const Transform& root, const Transform& hand, const StateMachineConfig& cfg);

/// Ring buffer of root positions covering the speed window.
class SpeedWindow {
public:
    struct Sample {
        std::int64_t tick;
        Vec3 position;
    };

    SpeedWindow(double tick_rate, double span_seconds);

    void push(std::int64_t tick, const Vec3& root_position);
    const std::deque<Sample>& samples() const { return samples_; }
    double tick_rate() const { return tick_rate_; }
    /// Ticks spanned by a full window.
    std::int64_t span_ticks() const { return span_ticks_; }

private:
    double tick_rate_;
    std::int64_t span_ticks_;
    std::deque<Sample> samples_;
};

/// Horizontal endpoint displacement over the window divided by its duration.
double pelvis_speed(const SpeedWindow& window);

enum class EventKind : std::uint8_t {
    StartWIP,
    RequestPlacement,
    Teleport,
    StateChanged,
    TargetChanged,
};

std::string_view to_string(EventKind kind);

struct Event {
    std::int64_t tick = 0;
    EventKind kind = EventKind::StateChanged;
    std::string payload;

    friend bool operator==(const Event&, const Event&) = default;
};

struct LocomotionStep {
    UserState state = UserState::Solo;
    std::vector<EventKind> events;
};

/// Solo/Locomotion hysteresis. Interaction counts as not moving.
LocomotionStep step_locomotion(UserState state, double speed, const StateMachineConfig& cfg);

struct EffectorFixation {
    std::string candidate;  // empty: no candidate under the ray
    double accumulated = 0.0;
    std::optional<NormalizedHit> target;
};

struct FixationTracker {
    std::array<EffectorFixation, 3> effectors;

    EffectorFixation& at(Effector e) { return effectors[static_cast<std::size_t>(e)]; }
    const EffectorFixation& at(Effector e) const { return effectors[static_cast<std::size_t>(e)]; }
};

/// Dwell-time fixation on paired objects. `ray` is empty when the effector is inactive
/// (a lowered hand), which clears it like a miss.
FixationTracker update_fixation(FixationTracker tracker, Effector effector, const std::optional<Ray>& ray,
                                const Room& room, double dt, const StateMachineConfig& cfg);

/// Hand-to-gaze-target distance and angle samples, contiguous in tick.
class ConvergenceWindow {
public:
    struct Sample {
        std::int64_t tick;
        double distance;  // meters
        double angle;     // radians
    };

    ConvergenceWindow(double tick_rate, double period_seconds);

    void push(std::int64_t tick, double distance, double angle);
    void clear() { samples_.clear(); }
    const std::deque<Sample>& samples() const { return samples_; }
    double tick_rate() const { return tick_rate_; }
    bool full() const;

private:
    double tick_rate_;
    std::int64_t span_ticks_;
    std::deque<Sample> samples_;
};

/// Mean rate of hand-to-target distance change (least-squares slope) below v_threshold.
bool check_distance_condition(const ConvergenceWindow& window, const StateMachineConfig& cfg);
/// Mean rate of hand-to-target angle change (least-squares slope) below omega_threshold.
bool check_angle_condition(const ConvergenceWindow& window, const StateMachineConfig& cfg);

struct EffectorTargets {
    std::array<std::optional<NormalizedHit>, 3> targets;

    std::optional<NormalizedHit>& at(Effector e) { return targets[static_cast<std::size_t>(e)]; }
    const std::optional<NormalizedHit>& at(Effector e) const { return targets[static_cast<std::size_t>(e)]; }
    bool any() const { return targets[0] || targets[1] || targets[2]; }

    friend bool operator==(const EffectorTargets&, const EffectorTargets&) = default;
};

/// Per-hand gaze-convergence bookkeeping carried between ticks.
struct AcquisitionState {
    explicit AcquisitionState(const StateMachineConfig& cfg)
        : left(cfg.tick_rate, cfg.condition_period), right(cfg.tick_rate, cfg.condition_period) {}

    ConvergenceWindow left;
    ConvergenceWindow right;
    bool left_latched = false;
    bool right_latched = false;
    std::string gaze_object;

    ConvergenceWindow& window(Effector hand) { return hand == Effector::LeftHand ? left : right; }
    bool& latched(Effector hand) { return hand == Effector::LeftHand ? left_latched : right_latched; }
};

/// Head and hand targets for this tick. A hand converging on the gaze target (distance and
/// angle conditions both true) takes the head's target and keeps it until the head target
/// changes, the hand fixates something else, or the hand retracts.
EffectorTargets acquire_targets(const FixationTracker& tracker, const UserSnapshot& snapshot, const Room& room,
                                AcquisitionState& state, const StateMachineConfig& cfg);

/// Locomotion dominates; otherwise Interaction iff any effector has a target.
UserState classify_state(UserState locomotion_state, const EffectorTargets& targets);

struct TickOutput {
    UserState state = UserState::Solo;
    double speed = 0.0;
    EffectorTargets targets;
    std::vector<Event> events;
};

/// Per-user classifier: speed window, locomotion hysteresis, fixation and target acquisition.
class UserStateMachine {
public:
    explicit UserStateMachine(StateMachineConfig cfg = {});

    /// `room` is the user's own room, optionally augmented with the partner avatar head.
    TickOutput step(const UserSnapshot& snapshot, const Room& room);

    UserState state() const { return state_; }
    const StateMachineConfig& config() const { return cfg_; }

private:
    StateMachineConfig cfg_;
    SpeedWindow speed_window_;
    UserState locomotion_ = UserState::Solo;
    UserState state_ = UserState::Solo;
    FixationTracker tracker_;
    AcquisitionState acquisition_;
    EffectorTargets targets_;
    std::optional<std::int64_t> last_tick_;
};

}  // namespace telepresence
