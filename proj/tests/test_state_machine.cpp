#include <doctest.h>

#include <cmath>
#include <random>

#include "telepresence/error.hpp"
#include "telepresence/state_machine.hpp"

using namespace telepresence;

namespace {

SceneObject make_box(std::string id, ObjectCategory cat, Vec3 center, Vec3 size, bool paired = true) {
    SceneObject o;
    o.id = std::move(id);
    o.category = cat;
    o.position = center;
    o.size = size;
    if (paired) o.pair_id = o.id;
    return o;
}

// Screen ahead on the +z wall, table to the right.
Room test_room() {
    Room r;
    r.id = "test";
    r.extents = {{-3, -3}, {3, 3}};
    r.objects.push_back(make_box("screen", ObjectCategory::Screen, {0, 1.5, 2.95}, {2, 1, 0.1}));
    r.objects.push_back(make_box("table", ObjectCategory::Table, {1.5, 0.35, 0.5}, {0.8, 0.7, 0.8}));
    r.objects.push_back(make_box("lamp", ObjectCategory::Other, {-1.5, 0.5, 0.5}, {0.3, 1.0, 0.3}, false));
    return r;
}

Transform aim(const Vec3& from, const Vec3& at) { return {from, Quat::look_rotation((at - from).normalized(), kUp)}; }

UserSnapshot standing(std::int64_t tick, Vec3 root = {0, 0.95, 0}) {
    UserSnapshot s;
    s.tick = tick;
    s.root = {root, Quat{}};
    s.head = {root + Vec3{0, 0.65, 0}, Quat{}};
    // hands hang at the sides, pointing at the floor
    s.left_hand = {aim(root + Vec3{-0.2, -0.15, 0.05}, root + Vec3{-0.2, -1.0, 0.3}), false};
    s.right_hand = {aim(root + Vec3{0.2, -0.15, 0.05}, root + Vec3{0.2, -1.0, 0.3}), false};
    s.left_foot = {root + Vec3{-0.1, -0.9, 0}, Quat{}};
    s.right_foot = {root + Vec3{0.1, -0.9, 0}, Quat{}};
    return s;
}

ConvergenceWindow window_of(const std::vector<double>& d, const std::vector<double>& a, double rate = 60.0) {
    ConvergenceWindow w(rate, 0.3);
    for (std::size_t i = 0; i < d.size(); ++i) w.push(static_cast<std::int64_t>(i), d[i], a[i]);
    return w;
}

// Rates are least-squares slopes; this is an independent closed-form version for checking.
double slope(const std::vector<double>& y, double dt) {
    const double n = static_cast<double>(y.size());
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double t = static_cast<double>(i) * dt;
        st += t;
        sy += y[i];
        stt += t * t;
        sty += t * y[i];
    }
    return (n * sty - st * sy) / (n * stt - st * st);
}

}  // namespace

TEST_CASE("pelvis speed examples") {
    SpeedWindow w(1000.0, 0.166);
    CHECK(w.span_ticks() == 166);
    for (int i = 0; i <= 166; ++i) w.push(i, {0.1 * i / 166.0, 0.95, 0});
    CHECK(pelvis_speed(w) == doctest::Approx(0.10 / 0.166).epsilon(1e-9));
    CHECK(pelvis_speed(w) == doctest::Approx(0.602).epsilon(1e-3));

    SpeedWindow still(60.0, 0.166);
    for (int i = 0; i < 20; ++i) still.push(i, {1, 0.95, 1});
    CHECK(pelvis_speed(still) == 0.0);

    // a full circle of radius 0.3 m inside the window: fast motion, no net displacement
    SpeedWindow circle(1000.0, 0.166);
    for (int i = 0; i <= 166; ++i) {
        const double a = kTwoPi * i / 166.0;
        circle.push(i, {0.3 * std::sin(a), 0.95, 0.3 - 0.3 * std::cos(a)});
    }
    CHECK(pelvis_speed(circle) < 0.05);

    SpeedWindow one(60.0, 0.166);
    one.push(0, {0, 0, 0});
    CHECK_THROWS_AS(pelvis_speed(one), Error);
    CHECK_THROWS_AS(one.push(0, {0, 0, 0}), Error);
}

TEST_CASE("speed window keeps the configured span") {
    SpeedWindow w(60.0, 0.166);
    CHECK(w.span_ticks() == 10);
    for (int i = 0; i < 100; ++i) {
        w.push(i, {0, 0, 0});
        CHECK(w.samples().back().tick - w.samples().front().tick <= 10);
        if (i >= 10) CHECK(w.samples().back().tick - w.samples().front().tick == 10);
    }
}

TEST_CASE("locomotion hysteresis examples") {
    const StateMachineConfig cfg;
    const auto start = step_locomotion(UserState::Solo, 0.6, cfg);
    CHECK(start.state == UserState::Locomotion);
    CHECK(start.events == std::vector<EventKind>{EventKind::StartWIP});

    const auto stop = step_locomotion(UserState::Locomotion, 0.10, cfg);
    CHECK(stop.state == UserState::Solo);
    CHECK(stop.events == std::vector<EventKind>{EventKind::RequestPlacement, EventKind::Teleport});

    const auto band = step_locomotion(UserState::Locomotion, 0.3, cfg);
    CHECK(band.state == UserState::Locomotion);
    CHECK(band.events.empty());
    CHECK(step_locomotion(UserState::Solo, 0.3, cfg).state == UserState::Solo);
    // thresholds are strict
    CHECK(step_locomotion(UserState::Solo, 0.4, cfg).state == UserState::Solo);
    CHECK(step_locomotion(UserState::Locomotion, 0.15, cfg).state == UserState::Locomotion);

    StateMachineConfig bad;
    bad.stop_threshold = 0.5;
    CHECK_THROWS_AS(step_locomotion(UserState::Solo, 0.1, bad), Error);
}

TEST_CASE("fixation registers after the threshold and clears on a miss") {
    const Room room = test_room();
    const StateMachineConfig cfg;
    const Ray at_screen = Ray::through({0, 1.6, 0}, {0, 0, 1});
    FixationTracker t;
    for (int i = 0; i < 29; ++i) t = update_fixation(t, Effector::Head, at_screen, room, cfg.dt(), cfg);
    CHECK_FALSE(t.at(Effector::Head).target);
    t = update_fixation(t, Effector::Head, at_screen, room, cfg.dt(), cfg);
    REQUIRE(t.at(Effector::Head).target);
    CHECK(t.at(Effector::Head).accumulated + 1e-12 >= cfg.fixation_threshold);
    for (int i = 0; i < 6; ++i) t = update_fixation(t, Effector::Head, at_screen, room, cfg.dt(), cfg);
    REQUIRE(t.at(Effector::Head).target);
    CHECK(t.at(Effector::Head).target->object_id == "screen");
    CHECK(t.at(Effector::Head).target->u == doctest::Approx(0.5));
    CHECK(t.at(Effector::Head).target->v == doctest::Approx(0.6));

    FixationTracker short_look;
    for (int i = 0; i < 24; ++i) short_look = update_fixation(short_look, Effector::Head, at_screen, room, cfg.dt(), cfg);
    short_look = update_fixation(short_look, Effector::Head, Ray::through({0, 1.6, 0}, {0, 0, -1}), room, cfg.dt(), cfg);
    CHECK(short_look.at(Effector::Head).candidate.empty());
    CHECK(short_look.at(Effector::Head).accumulated == 0.0);
    CHECK_FALSE(short_look.at(Effector::Head).target);

    // switching candidates restarts the clock
    FixationTracker sw;
    for (int i = 0; i < 20; ++i) sw = update_fixation(sw, Effector::Head, at_screen, room, cfg.dt(), cfg);
    sw = update_fixation(sw, Effector::Head, Ray::through({0, 1.6, 0}, Vec3{1.5, -1.25, 0.5}), room, cfg.dt(), cfg);
    CHECK(sw.at(Effector::Head).candidate == "table");
    CHECK(sw.at(Effector::Head).accumulated == doctest::Approx(cfg.dt()));

    // unpaired objects are not interaction candidates
    FixationTracker lamp;
    for (int i = 0; i < 60; ++i) {
        lamp = update_fixation(lamp, Effector::Head, Ray::through({0, 0.5, 0.5}, {-1, 0, 0}), room, cfg.dt(), cfg);
    }
    CHECK_FALSE(lamp.at(Effector::Head).target);
}

TEST_CASE("fixation never registers below the threshold") {
    const Room room = test_room();
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    StateMachineConfig cfg;
    for (int trial = 0; trial < 200; ++trial) {
        cfg.fixation_threshold = 0.05 + 0.5 * std::abs(u(rng));
        const double dt = 0.005 + 0.03 * std::abs(u(rng));
        FixationTracker t;
        for (int i = 0; i < 80; ++i) {
            const Ray r = Ray::through({0, 1.5, 0}, {u(rng) * 0.5, 0.2 * u(rng), 1.0});
            t = update_fixation(t, Effector::Head, r, room, dt, cfg);
            const auto& f = t.at(Effector::Head);
            if (f.target) CHECK(f.accumulated + 1e-12 >= cfg.fixation_threshold);
        }
    }
}

TEST_CASE("a lowered hand grazing a table never accumulates") {
    const Room room = test_room();
    UserStateMachine sm;
    for (int i = 0; i < 120; ++i) {
        UserSnapshot s = standing(i);
        s.right_hand = {aim({0.6, 0.7, 0.3}, {1.5, 0.6, 0.5}), false};
        const TickOutput out = sm.step(s, room);
        CHECK_FALSE(out.targets.at(Effector::RightHand));
    }
    UserStateMachine lifted;
    bool got = false;
    for (int i = 0; i < 120; ++i) {
        UserSnapshot s = standing(i);
        s.right_hand = {aim({0.6, 0.7, 0.3}, {1.5, 0.6, 0.5}), true};
        got = got || lifted.step(s, room).targets.at(Effector::RightHand).has_value();
    }
    CHECK(got);
}

TEST_CASE("distance condition examples") {
    const StateMachineConfig cfg;
    std::vector<double> shrinking, flat, v_shape, zeros(19, 0.0);
    for (int i = 0; i <= 18; ++i) {
        const double t = i / 60.0;
        shrinking.push_back(1.0 - 0.5 * t);
        flat.push_back(0.8);
        v_shape.push_back(i <= 9 ? 1.0 - 0.3 * t : 1.0 - 0.3 * (18 / 60.0 - t));
    }
    CHECK(check_distance_condition(window_of(shrinking, zeros), cfg));
    CHECK_FALSE(check_distance_condition(window_of(flat, zeros), cfg));
    CHECK(slope(v_shape, 1 / 60.0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK_FALSE(check_distance_condition(window_of(v_shape, zeros), cfg));

    const std::vector<double> few(shrinking.begin(), shrinking.begin() + 18);
    CHECK_THROWS_AS(check_distance_condition(window_of(few, std::vector<double>(18, 0.0)), cfg), Error);
}

TEST_CASE("angle condition examples") {
    const StateMachineConfig cfg;
    std::vector<double> closing, flat, wobble, ones(19, 1.0);
    for (int i = 0; i <= 18; ++i) {
        const double t = i / 60.0;
        closing.push_back(deg_to_rad(60.0) - deg_to_rad(30.0) * t);
        flat.push_back(deg_to_rad(25.0));
        // one full period, symmetric about the window center
        wobble.push_back(deg_to_rad(10.0) * std::cos(kTwoPi * (i - 9) / 18.0));
    }
    CHECK(check_angle_condition(window_of(ones, closing), cfg));
    CHECK_FALSE(check_angle_condition(window_of(ones, flat), cfg));
    CHECK(std::abs(slope(wobble, 1 / 60.0)) < 1e-9);
    CHECK_FALSE(check_angle_condition(window_of(ones, wobble), cfg));
}

TEST_CASE("conditions are false whenever the rate is nonnegative") {
    const StateMachineConfig cfg;
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> step(0.0, 0.05);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> d{1.0}, a{0.5};
        for (int i = 1; i <= 18; ++i) {
            d.push_back(d.back() + step(rng));
            a.push_back(a.back() + step(rng));
        }
        const auto w = window_of(d, a);
        CHECK_FALSE(check_distance_condition(w, cfg));
        CHECK_FALSE(check_angle_condition(w, cfg));
    }
}

TEST_CASE("convergence window stays contiguous") {
    ConvergenceWindow w(60.0, 0.3);
    for (int i = 0; i < 30; ++i) w.push(i, 1.0, 1.0);
    CHECK(w.full());
    w.push(40, 1.0, 1.0);
    CHECK(w.samples().size() == 1);
    CHECK_FALSE(w.full());
}

namespace {

struct ScriptedUser {
    Room room = test_room();
    UserStateMachine sm;
    std::int64_t tick = 0;
    std::vector<TickOutput> outputs;

    const TickOutput& step(const UserSnapshot& s) {
        outputs.push_back(sm.step(s, room));
        ++tick;
        return outputs.back();
    }
};

UserSnapshot gazing(std::int64_t tick) {
    UserSnapshot s = standing(tick);
    s.head = aim({0, 1.6, 0}, {0.5, 1.5, 2.9});
    return s;
}

}  // namespace

TEST_CASE("a hand converging on the gaze target takes it over") {
    // Hand approaches the gaze point at 0.5 m/s while turning toward it at 30 deg/s; its own ray
    // points away from every object so only the convergence rule can give it a target.
    const Vec3 gaze_point{0.5, 1.5, 2.95 - 0.05};
    const Vec3 start{0.4, 1.2, 0.2};
    const Vec3 dir = (gaze_point - start).normalized();
    const Vec3 side = kUp.cross(dir).normalized();
    auto hand_at = [&](int k) {
        const Vec3 pos = start + dir * (0.5 * k / 60.0);
        const double off = deg_to_rad(80.0) - deg_to_rad(30.0) * k / 60.0;
        const Vec3 fwd = (dir * std::cos(off) - side * std::sin(off)).normalized();
        return TrackedHand{{pos, Quat::look_rotation(fwd, kUp)}, true};
    };

    ScriptedUser user;
    for (int i = 0; i < 40; ++i) {
        UserSnapshot s = gazing(user.tick);
        s.right_hand = hand_at(0);
        CHECK_FALSE(user.step(s).targets.at(Effector::RightHand));
    }
    REQUIRE(user.outputs.back().targets.at(Effector::Head));
    CHECK(user.outputs.back().state == UserState::Interaction);

    std::optional<std::int64_t> assigned;
    const std::int64_t t0 = user.tick;
    for (int k = 1; k <= 40; ++k) {
        UserSnapshot s = gazing(user.tick);
        s.right_hand = hand_at(k);
        const TickOutput& out = user.step(s);
        if (!assigned && out.targets.at(Effector::RightHand)) {
            assigned = user.tick - t0;
            CHECK(out.targets.at(Effector::RightHand)->object_id == "screen");
            CHECK(*out.targets.at(Effector::RightHand) == *out.targets.at(Effector::Head));
        }
    }
    REQUIRE(assigned);
    CHECK(*assigned <= 19);
}

TEST_CASE("head and hand keep independent targets without convergence") {
    ScriptedUser user;
    for (int i = 0; i < 60; ++i) {
        UserSnapshot s = gazing(user.tick);
        s.right_hand = {aim({0.6, 0.9, 0.3}, {1.5, 0.6, 0.5}), true};
        user.step(s);
    }
    const auto& targets = user.outputs.back().targets;
    REQUIRE(targets.at(Effector::Head));
    REQUIRE(targets.at(Effector::RightHand));
    CHECK(targets.at(Effector::Head)->object_id == "screen");
    CHECK(targets.at(Effector::RightHand)->object_id == "table");
}

TEST_CASE("no fixation anywhere leaves the user solo") {
    ScriptedUser user;
    for (int i = 0; i < 60; ++i) {
        UserSnapshot s = standing(user.tick);
        s.head = aim({0, 1.6, 0}, {0, 1.6, -2});
        user.step(s);
    }
    CHECK_FALSE(user.outputs.back().targets.any());
    CHECK(user.outputs.back().state == UserState::Solo);
}

TEST_CASE("classify_state precedence") {
    EffectorTargets with_head;
    with_head.at(Effector::Head) = NormalizedHit{"screen", 0.5, 0.5, 0.5};
    CHECK(classify_state(UserState::Locomotion, with_head) == UserState::Locomotion);
    CHECK(classify_state(UserState::Solo, with_head) == UserState::Interaction);
    CHECK(classify_state(UserState::Solo, EffectorTargets{}) == UserState::Solo);

    // walking quickly while gazing at the screen stays in locomotion
    ScriptedUser user;
    for (int i = 0; i < 90; ++i) {
        UserSnapshot s = gazing(user.tick);
        const Vec3 root{0.0, 0.95, -1.0 + 0.8 * i / 60.0};
        s.root.position = root;
        s.head = aim(root + Vec3{0, 0.65, 0}, {0.5, 1.5, 2.9});
        user.step(s);
    }
    CHECK(user.outputs.back().state == UserState::Locomotion);
    CHECK(user.outputs.back().targets.at(Effector::Head));
}

namespace {

std::vector<UserSnapshot> random_walk(std::uint64_t seed, int ticks) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<UserSnapshot> out;
    Vec3 root{0, 0.95, -1};
    double speed = 0.0;
    double heading = 0.0;
    for (int i = 0; i < ticks; ++i) {
        if (i % 30 == 0) {
            speed = u(rng) < 0.5 ? 0.0 : 1.0 * u(rng);
            heading = kTwoPi * u(rng);
        }
        root = root + Vec3{std::sin(heading), 0, std::cos(heading)} * (speed / 60.0);
        root.x = std::clamp(root.x, -2.5, 2.5);
        root.z = std::clamp(root.z, -2.5, 2.5);
        UserSnapshot s = standing(i, root);
        s.head = {root + Vec3{0, 0.65, 0}, Quat::from_yaw(heading + 0.3 * u(rng))};
        out.push_back(s);
    }
    return out;
}

}  // namespace

TEST_CASE("identical streams give identical outputs") {
    const auto stream = random_walk(99, 600);
    ScriptedUser a, b;
    for (const auto& s : stream) {
        const TickOutput& x = a.step(s);
        const TickOutput& y = b.step(s);
        CHECK(x.state == y.state);
        CHECK(x.speed == y.speed);
        CHECK(x.targets == y.targets);
        CHECK(x.events == y.events);
    }
}

TEST_CASE("exactly one teleport per locomotion episode") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        ScriptedUser user;
        int open = 0, episodes = 0;
        for (const auto& s : random_walk(seed, 900)) {
            for (const Event& e : user.step(s).events) {
                if (e.kind == EventKind::StartWIP) {
                    CHECK(open == 0);
                    open = 1;
                    ++episodes;
                } else if (e.kind == EventKind::Teleport) {
                    CHECK(open == 1);
                    open = 0;
                }
            }
        }
        CHECK(episodes > 0);
    }
}

TEST_CASE("ticks must increase") {
    ScriptedUser user;
    user.step(standing(5));
    CHECK_THROWS_AS(user.sm.step(standing(5), user.room), Error);
}
