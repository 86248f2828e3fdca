#include <doctest.h>

#include <cmath>
#include <random>

#include "telepresence/error.hpp"
#include "placement_oracle.hpp"
#include "telepresence/placement.hpp"

using namespace telepresence;

using oracle::random_room;

namespace {

SceneObject make_box(std::string id, ObjectCategory cat, Vec3 center, Vec3 size, double yaw = 0.0) {
    SceneObject o;
    o.id = std::move(id);
    o.category = cat;
    o.position = center;
    o.size = size;
    o.yaw = yaw;
    return o;
}

SceneObject make_seat(std::string id, Vec3 center, Vec3 size, double sit_height, ObjectCategory cat = ObjectCategory::Chair) {
    SceneObject o = make_box(std::move(id), cat, center, size);
    o.sittable = true;
    o.sit_height = sit_height;
    return o;
}

Room empty_room(double w, double d, std::string id = "room") {
    Room r;
    r.id = std::move(id);
    r.extents = {{0, 0}, {w, d}};
    return r;
}

/// Scores a candidate by how close its placement (recovered from the interpersonal feature
/// against a known partner) is to a fixed optimum.
class TargetScorer final : public SimilarityScorer {
public:
    TargetScorer(Placement partner, Placement optimum) : partner_(partner), optimum_(optimum) {}

    double score(const FeatureVector&, const FeatureVector& cand) const override {
        if (!cand.interpersonal) return 0.0;
        const double yaw = partner_.yaw - cand.interpersonal->facing;
        const Vec2 back = rotate_yaw(cand.interpersonal->offset, yaw);
        return value(partner_.x - back.x, partner_.z - back.z, yaw);
    }

    double value(double x, double z, double yaw) const {
        const double dx = x - optimum_.x, dz = z - optimum_.z, dy = wrap_pi(yaw - optimum_.yaw);
        return std::exp(-(dx * dx + dz * dz) / 0.25 - dy * dy / 0.5);
    }

private:
    Placement partner_;
    Placement optimum_;
};

/// Depends only on the distance to the partner.
class DistanceScorer final : public SimilarityScorer {
public:
    double score(const FeatureVector&, const FeatureVector& cand) const override {
        if (!cand.interpersonal) return 0.0;
        const double d = std::hypot(cand.interpersonal->offset.x, cand.interpersonal->offset.z);
        return std::exp(-std::abs(d - 1.0));
    }
};

}  // namespace

TEST_CASE("feature extraction examples") {
    Room room = empty_room(6, 6);
    const Placement subject{3, 2, 0, Pose::Standing};
    const FeatureVector f = extract_features(room, subject, Placement{3, 3, kPi, Pose::Standing});
    REQUIRE(f.interpersonal);
    CHECK(f.interpersonal->offset.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(f.interpersonal->offset.z == doctest::Approx(1.0));
    CHECK(std::abs(f.interpersonal->facing) == doctest::Approx(kPi));

    // partner to the subject's right when the subject faces +x
    const FeatureVector turned = extract_features(room, {3, 3, kPi / 2, Pose::Standing}, Placement{3, 2, 0, Pose::Standing});
    CHECK(turned.interpersonal->offset.x == doctest::Approx(1.0));
    CHECK(turned.interpersonal->offset.z == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(turned.interpersonal->facing == doctest::Approx(-kPi / 2));

    CHECK_FALSE(extract_features(room, subject, std::nullopt).interpersonal);
    const HeightMap& hm = f.pose_accommodation;
    CHECK(hm.radius == 0.5);
    for (std::size_t i = 0; i < hm.heights.size(); ++i) CHECK(hm.heights[i] == 0.0);
    CHECK(f.visual_attention.empty());

    room.objects.push_back(make_box("tv", ObjectCategory::Screen, {3, 1.2, 4}, {1.2, 0.7, 0.1}));
    const FeatureVector g = extract_features(room, subject, std::nullopt);
    REQUIRE(g.visual_attention.count(ObjectCategory::Screen));
    CHECK(g.visual_attention.at(ObjectCategory::Screen) == doctest::Approx(2.0));
    CHECK(g.spatial.at(ObjectCategory::Screen) == doctest::Approx(2.0));

    try {
        extract_features(room, {7, 1, 0, Pose::Standing}, std::nullopt);
        FAIL("expected SubjectOutsideRoom");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SubjectOutsideRoom);
    }
}

TEST_CASE("feature distances ignore object size") {
    Room room = empty_room(6, 6);
    room.objects.push_back(make_box("tv", ObjectCategory::Screen, {3.3, 1.2, 4.5}, {1.0, 0.6, 0.1}));
    room.objects.push_back(make_box("desk", ObjectCategory::Table, {2.0, 0.4, 3.5}, {1.0, 0.8, 0.6}));
    const Placement subject{3, 2, 0.1, Pose::Standing};
    const FeatureVector before = extract_features(room, subject, std::nullopt);
    room.objects[0].size = room.objects[0].size * 2.0;
    const FeatureVector after = extract_features(room, subject, std::nullopt);
    CHECK(before.visual_attention == after.visual_attention);
    CHECK(before.spatial == after.spatial);
}

TEST_CASE("default scorer closed forms") {
    Room room = empty_room(6, 6);
    room.objects.push_back(make_box("tv", ObjectCategory::Screen, {3, 1.2, 4}, {1.2, 0.7, 0.1}));
    room.objects.push_back(make_seat("chair", {3.4, 0.45, 2.2}, {0.5, 0.9, 0.5}, 0.45));
    const Placement subject{3, 2, 0, Pose::Standing};
    const FeatureVector f = extract_features(room, subject, Placement{3, 3, kPi, Pose::Standing});
    const DefaultScorer scorer;
    CHECK(scorer.score(f, f) == doctest::Approx(1.0).epsilon(1e-12));

    FeatureVector shifted = f;
    shifted.interpersonal->offset.x += 1.0;  // exactly sigma_p
    CHECK(scorer.score(f, shifted) == doctest::Approx(0.25 * std::exp(-1.0) + 0.75).epsilon(1e-12));

    FeatureVector blind = f;
    blind.visual_attention.clear();
    CHECK(scorer.score(f, blind) == doctest::Approx(0.75).epsilon(1e-12));

    FeatureVector lonely = f;
    lonely.interpersonal.reset();
    CHECK(scorer.score(f, lonely) == doctest::Approx(0.75).epsilon(1e-12));

    SimilarityParams bad;
    bad.weights = {0.5, 0.5, 0.5, 0.0};
    CHECK_THROWS_AS(DefaultScorer{bad}, Error);
    bad.weights = {1.5, -0.5, 0.0, 0.0};
    CHECK_THROWS_AS(default_similarity(f, f, bad), Error);
}

TEST_CASE("scorer identity on random features") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const DefaultScorer scorer;
    for (int i = 0; i < 200; ++i) {
        const Room room = random_room(rng, i);
        const Placement p{room.extents.max.x * u(rng), room.extents.max.z * u(rng), kTwoPi * u(rng), Pose::Standing};
        std::optional<Placement> partner;
        if (u(rng) < 0.5) partner = Placement{room.extents.max.x * u(rng), room.extents.max.z * u(rng), kTwoPi * u(rng)};
        const FeatureVector f = extract_features(room, p, partner);
        CHECK(std::abs(scorer.score(f, f) - 1.0) <= 1e-9);
    }
}

TEST_CASE("feasibility examples") {
    Room room = empty_room(4, 4);
    CHECK(feasible(room, {2, 2, 0, Pose::Standing}));
    CHECK_FALSE(feasible(room, {2, 2, 0, Pose::Sitting}));
    CHECK_FALSE(feasible(room, {0.05, 2, 0, Pose::Standing}));
    CHECK_FALSE(feasible(room, {5, 2, 0, Pose::Standing}));

    room.objects.push_back(make_box("table", ObjectCategory::Table, {2.35, 0.35, 2}, {0.6, 0.7, 0.6}));
    CHECK_FALSE(feasible(room, {2, 2, 0, Pose::Standing}));  // footprint reaches the table edge at x = 2.05
    CHECK(feasible(room, {1.5, 2, 0, Pose::Standing}));
    CHECK_FALSE(feasible(room, {2.35, 2, 0, Pose::Sitting}));

    room.objects.push_back(make_seat("sofa", {1, 0.4, 3.2}, {1.6, 0.8, 0.7}, 0.45, ObjectCategory::Sofa));
    CHECK(feasible(room, {1, 3.2, 0, Pose::Sitting}));
    CHECK(supporting_seat(room, {1, 3.2, 0, Pose::Sitting})->id == "sofa");
    CHECK_FALSE(feasible(room, {1, 2.8, 0, Pose::Sitting}));  // ring spills off the seat
    CHECK_FALSE(feasible(room, {1, 3.2, 0, Pose::Standing}));

    Room high = empty_room(4, 4);
    high.objects.push_back(make_seat("bar", {2, 0.5, 2}, {1, 1, 1}, 0.95));
    CHECK_FALSE(feasible(high, {2, 2, 0, Pose::Sitting}));
}

TEST_CASE("grid enumeration counts") {
    const Room room = empty_room(4, 3);
    CHECK(grid_candidates(room, Pose::Standing).size() == 16u * 12u * 24u);
    CHECK(grid_candidates(room, Pose::Sitting).size() == 4608u);
    const auto c = grid_candidates(room, Pose::Standing);
    CHECK(c.front().x == doctest::Approx(0.125));
    CHECK(c.front().yaw == 0.0);
    CHECK(c[1].yaw == doctest::Approx(deg_to_rad(15.0)));
    CHECK(c.back().x == doctest::Approx(3.875));
    CHECK(c.back().z == doctest::Approx(2.875));
}

TEST_CASE("grid search with no feasible cell fails") {
    Room room = empty_room(2, 2);
    room.objects.push_back(make_box("t1", ObjectCategory::Table, {0.5, 0.35, 1}, {1.0, 0.7, 2.0}));
    room.objects.push_back(make_box("t2", ObjectCategory::Table, {1.5, 0.35, 1}, {1.0, 0.7, 2.0}));
    const FeatureVector f = extract_features(empty_room(2, 2), {1, 1, 0, Pose::Standing}, std::nullopt);
    try {
        grid_search(room, f, std::nullopt, DefaultScorer{});
        FAIL("expected NoFeasiblePlacement");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoFeasiblePlacement);
    }
}

TEST_CASE("grid search ties go to the least grid tuple") {
    const Room room = empty_room(3, 3);
    const Placement partner{1.5, 1.5, 0, Pose::Standing};
    const FeatureVector user = extract_features(room, {1.5, 0.5, 0, Pose::Standing}, partner);
    const DistanceScorer scorer;
    const oracle::Best best = oracle::exhaustive(room, user, partner, scorer);
    const ScoredPlacement got = grid_search(room, user, partner, scorer);
    CHECK(got.placement == best.placement);
    CHECK(got.score == best.score);
    // several cells sit at the same distance from the centre; the least x wins
    CHECK(got.placement.x == doctest::Approx(0.625));
}

TEST_CASE("grid search matches exhaustive evaluation for any shard count") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const DefaultScorer scorer;
    for (int i = 0; i < 4; ++i) {
        const Room room = random_room(rng, i);
        const Room source = random_room(rng, 100 + i);
        const Placement subject{source.extents.max.x * u(rng), source.extents.max.z * u(rng), kTwoPi * u(rng)};
        const Placement partner{room.extents.max.x * u(rng), room.extents.max.z * u(rng), kTwoPi * u(rng)};
        const FeatureVector user = extract_features(source, subject, partner);
        const oracle::Best best = oracle::exhaustive(room, user, partner, scorer);
        for (int shards : {1, 2, 3, 7}) {
            const ScoredPlacement got = grid_search(room, user, partner, scorer, GridConfig{0.25, 24, shards});
            CHECK(got.placement == best.placement);
            CHECK(got.score == best.score);
        }
    }
}

TEST_CASE("PSO with zero iterations returns the seed") {
    const Room room = empty_room(4, 4);
    const FeatureVector user = extract_features(room, {2, 2, 0, Pose::Standing}, std::nullopt);
    PsoConfig cfg;
    cfg.iterations = 0;
    const Placement seed{1.125, 2.375, deg_to_rad(45), Pose::Standing};
    const ScoredPlacement r = pso_refine(room, seed, user, std::nullopt, DefaultScorer{}, cfg);
    CHECK(r.placement == seed);

    cfg.particles = 0;
    CHECK_THROWS_AS(pso_refine(room, seed, user, std::nullopt, DefaultScorer{}, cfg), Error);
}

TEST_CASE("PSO finds an off-grid optimum") {
    const Room room = empty_room(4, 4);
    const Placement partner{2.0, 3.0, kPi, Pose::Standing};
    const Placement optimum{1.225, 1.475, deg_to_rad(20.0), Pose::Standing};
    const TargetScorer scorer(partner, optimum);
    const FeatureVector user = extract_features(room, {2, 2, 0, Pose::Standing}, partner);
    const ScoredPlacement grid = grid_search(room, user, partner, scorer);

    // 1 cm exhaustive oracle over the PSO search box
    double best = -1.0;
    Vec2 best_xz;
    for (double x = grid.placement.x - 0.5; x <= grid.placement.x + 0.5 + 1e-9; x += 0.01) {
        for (double z = grid.placement.z - 0.5; z <= grid.placement.z + 0.5 + 1e-9; z += 0.01) {
            for (int deg = -30; deg <= 30; ++deg) {
                const double v = scorer.value(x, z, grid.placement.yaw + deg_to_rad(deg));
                if (v > best) {
                    best = v;
                    best_xz = {x, z};
                }
            }
        }
    }
    const ScoredPlacement refined = pso_refine(room, grid.placement, user, partner, scorer);
    CHECK(refined.score >= grid.score);
    CHECK(std::hypot(refined.placement.x - best_xz.x, refined.placement.z - best_xz.z) <= 0.02);
    CHECK(std::hypot(refined.placement.x - optimum.x, refined.placement.z - optimum.z) <= 0.02);

    const ScoredPlacement again = pso_refine(room, grid.placement, user, partner, scorer);
    CHECK(again.placement == refined.placement);
    CHECK(again.score == refined.score);
}

TEST_CASE("PSO never scores below its seed") {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const DefaultScorer scorer;
    for (int i = 0; i < 6; ++i) {
        const Room room = random_room(rng, i);
        const Placement partner{room.extents.max.x * u(rng), room.extents.max.z * u(rng), kTwoPi * u(rng)};
        const FeatureVector user = extract_features(random_room(rng, 50 + i), {1, 1, kTwoPi * u(rng)}, partner);
        const ScoredPlacement grid = grid_search(room, user, partner, scorer);
        PsoConfig cfg;
        cfg.seed = 1000 + i;
        const ScoredPlacement r = pso_refine(room, grid.placement, user, partner, scorer, cfg);
        CHECK(r.score >= grid.score);
        CHECK(feasible(room, r.placement));
        CHECK(r.placement.pose == grid.placement.pose);
    }
}

TEST_CASE("sitting user lands on the free chair facing the partner") {
    Room local = empty_room(4, 4, "local");
    local.objects.push_back(make_seat("chair", {1.0, 0.45, 1.0}, {0.5, 0.9, 0.5}, 0.45));
    const Placement user_place{1.0, 1.0, 0.0, Pose::Sitting};
    const Placement local_partner{1.0, 2.5, kPi, Pose::Standing};
    const FeatureVector user = extract_features(local, user_place, local_partner);

    Room remote = empty_room(5, 4, "remote");
    remote.objects.push_back(make_seat("chair", {3.0, 0.45, 1.5}, {0.5, 0.9, 0.5}, 0.45));
    remote.objects.push_back(make_box("plant", ObjectCategory::Other, {0.5, 0.5, 3.5}, {0.4, 1.0, 0.4}));
    const Placement remote_partner{3.0, 3.0, kPi, Pose::Standing};

    const DefaultScorer scorer;
    const oracle::Best best = oracle::exhaustive(remote, user, remote_partner, scorer);
    const PlacementResult r = find_placement(remote, user, remote_partner, scorer);
    CHECK(r.grid_placement == best.placement);
    CHECK(r.grid_score == best.score);
    CHECK(r.placement.pose == Pose::Sitting);
    REQUIRE(supporting_seat(remote, r.placement));
    CHECK(supporting_seat(remote, r.placement)->id == "chair");
    CHECK(std::abs(wrap_pi(r.placement.yaw)) < deg_to_rad(20.0));
    CHECK(r.pso_score >= r.grid_score);
    CHECK(r.grid_ms >= 0.0);
    CHECK(r.pso_ms >= 0.0);
}

TEST_CASE("standing user faces the paired screen on the opposite wall") {
    Room local = empty_room(4, 4, "local");
    local.objects.push_back(make_box("screen", ObjectCategory::Screen, {2.0, 1.3, 3.95}, {2.0, 1.2, 0.1}));
    const FeatureVector user = extract_features(local, {2.0, 1.95, 0.0, Pose::Standing}, std::nullopt);

    Room remote = empty_room(5, 4, "remote");
    remote.objects.push_back(make_box("screen", ObjectCategory::Screen, {2.5, 1.3, 0.05}, {4.0, 1.5, 0.1}, kPi));
    const DefaultScorer scorer;
    const oracle::Best best = oracle::exhaustive(remote, user, std::nullopt, scorer);
    const PlacementResult r = find_placement(remote, user, std::nullopt, scorer);
    CHECK(r.grid_placement == best.placement);
    const double to_screen = std::atan2(2.5 - r.placement.x, 0.05 - r.placement.z);
    CHECK(std::abs(wrap_pi(to_screen - r.placement.yaw)) <= deg_to_rad(15.0));
}

TEST_CASE("find_placement is deterministic") {
    const Room a = empty_room(2, 2, "a");
    const Room b = empty_room(2, 2, "b");
    const Placement partner{1, 1, 0, Pose::Standing};
    const FeatureVector user = extract_features(a, {1, 0.4, 0, Pose::Standing}, partner);
    const PlacementResult x = find_placement(b, user, partner, DefaultScorer{});
    const PlacementResult y = find_placement(b, user, partner, DefaultScorer{});
    CHECK(x.placement == y.placement);
    CHECK(x.pso_score == y.pso_score);
    CHECK(feasible(b, x.placement));
}
