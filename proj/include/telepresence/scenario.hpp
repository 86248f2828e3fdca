#pragma once

#include <string>
#include <vector>

#include "telepresence/scene.hpp"
#include "telepresence/trace.hpp"

namespace telepresence {

/// Builds synthetic tracking traces from a sequence of scripted actions.
class MotionScript {
public:
    MotionScript(Skeleton skeleton, double tick_rate, Vec2 start, double yaw);

    MotionScript& idle(double seconds);
    /// Turns the head toward `point` over `seconds`, then holds.
    MotionScript& look_at(const Vec3& point, double seconds);
    MotionScript& look_ahead(double seconds);
    MotionScript& turn_to(double yaw, double seconds);
    /// Turns toward `dest`, walks there at `speed`, then comes to rest.
    MotionScript& walk_to(Vec2 dest, double speed);
    MotionScript& sit(double seat_height, double seconds);
    MotionScript& stand_up(double seconds);
    /// Raises one hand from rest until it points at `point`.
    MotionScript& raise_hand(Side side, const Vec3& point, double seconds);
    MotionScript& lower_hand(Side side, double seconds);

    MotionTrace build() const { return trace_; }
    std::size_t ticks() const { return trace_.snapshots.size(); }

private:
    struct HandState {
        double blend = 0.0;  // 0 rest, 1 pointing
        Vec3 point;
    };

    void emit();
    Vec3 rest_hand(Side side) const;

    MotionTrace trace_;
    Vec2 position_;
    double yaw_ = 0.0;
    double root_height_ = 0.0;
    Vec3 head_dir_;
    Vec3 look_from_;
    std::optional<Vec3> look_;
    double look_blend_ = 0.0;
    HandState left_, right_;
    double gait_phase_ = 0.0;
    double gait_amount_ = 0.0;
};

struct Scenario {
    std::string name;
    Room room_a;
    Room room_b;
    MotionTrace trace_a;
    MotionTrace trace_b;
};

Room office_a_room();
Room office_b_room();
Room livingroom_room();

/// Named scenarios: "office" (two dissimilar offices), "livingroom" (office vs living room),
/// "mirror" (identical offices, identical traces).
Scenario make_scenario(const std::string& name, double tick_rate = 60.0);
std::vector<std::string> scenario_names();

}  // namespace telepresence
