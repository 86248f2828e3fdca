#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "telepresence/error.hpp"
#include "telepresence/scenario.hpp"
#include "telepresence/sim.hpp"

using namespace telepresence;

namespace {

SimConfig config_for(const std::string& scenario, std::uint64_t seed = 1) {
    const std::string rooms = "data/rooms/";
    const std::string traces = "data/traces/";
    const Scenario s = make_scenario(scenario);
    SimConfig cfg;
    cfg.room_a = load_room_file(rooms + s.room_a.id + ".json");
    cfg.room_b = load_room_file(rooms + s.room_b.id + ".json");
    cfg.trace_a = load_trace_file(traces + scenario + "_a.jsonl");
    cfg.trace_b = load_trace_file(traces + scenario + "_b.jsonl");
    cfg.seed = seed;
    return cfg;
}

/// Completed locomotion episodes in a trace, from endpoint speeds over a 10-tick window.
int locomotion_episodes(const MotionTrace& trace) {
    const auto& s = trace.snapshots;
    bool walking = false;
    int episodes = 0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        const std::size_t first = i >= 10 ? i - 10 : 0;
        const Vec3 d = s[i].root.position - s[first].root.position;
        const double speed = std::hypot(d.x, d.z) * trace.tick_rate / static_cast<double>(i - first);
        if (!walking && speed > 0.4) walking = true;
        if (walking && speed < 0.15) {
            walking = false;
            ++episodes;
        }
    }
    return episodes;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("tpsim_test_" + name)).string();
}

}  // namespace

TEST_CASE("checked-in data matches the scenario generator") {
    for (const std::string& name : scenario_names()) {
        const Scenario s = make_scenario(name);
        CHECK(room_hash(load_room_file("data/rooms/" + s.room_a.id + ".json")) == room_hash(s.room_a));
        CHECK(room_hash(load_room_file("data/rooms/" + s.room_b.id + ".json")) == room_hash(s.room_b));
        const MotionTrace a = load_trace_file("data/traces/" + name + "_a.jsonl");
        CHECK(a.snapshots.size() == s.trace_a.snapshots.size());
        CHECK(trace_to_jsonl(a) == trace_to_jsonl(s.trace_a));
    }
}

TEST_CASE("trace jsonl round trip and validation") {
    const MotionTrace t = make_scenario("office").trace_a;
    const MotionTrace back = load_trace(trace_to_jsonl(t));
    CHECK(back.snapshots.size() == t.snapshots.size());
    CHECK(back.skeleton == t.skeleton);
    CHECK(trace_to_jsonl(back) == trace_to_jsonl(t));
    CHECK(back.snapshots[100].left_hand.lifted == t.snapshots[100].left_hand.lifted);

    std::string text = trace_to_jsonl(t);
    const auto tick1 = text.find('\n', text.find('\n') + 1) + 1;
    const auto tick2 = text.find('\n', tick1) + 1;
    text.erase(tick1, tick2 - tick1);  // leaves a gap after tick 0
    CHECK_THROWS_AS(load_trace(text), Error);
    CHECK_THROWS_AS(load_trace("{\"tick_rate\": 60}\n{\"tick\": 0}"), Error);
    CHECK_THROWS_AS(load_trace_file("data/traces/missing.jsonl"), Error);
}

TEST_CASE("scorer config parsing") {
    const ScorerConfig c = load_scorer_config(R"({
        "weights": [0.4, 0.2, 0.2, 0.2], "sigma_position": 0.5,
        "grid": {"spacing": 0.5, "orientations": 12, "shards": 2},
        "pso": {"particles": 8, "iterations": 5}
    })");
    CHECK(c.similarity.weights[0] == 0.4);
    CHECK(c.similarity.sigma_position == 0.5);
    CHECK(c.placement.grid.orientations == 12);
    CHECK(c.placement.grid.shards == 2);
    CHECK(c.placement.pso.particles == 8);
    CHECK(c.placement.pso.iterations == 5);
    CHECK(c.placement.pso.inertia == PsoConfig{}.inertia);
    CHECK_THROWS_AS(load_scorer_config(R"({"weights": [1, 1, 1, 1]})"), Error);

    // the checked-in file spells out the defaults
    const ScorerConfig file = load_scorer_config_file("data/scorer.json");
    const ScorerConfig defaults;
    CHECK(file.similarity.weights == defaults.similarity.weights);
    CHECK(file.similarity.sigma_facing == defaults.similarity.sigma_facing);
    CHECK(file.similarity.sigma_height == defaults.similarity.sigma_height);
    CHECK(file.placement.pso.yaw_radius == doctest::Approx(defaults.placement.pso.yaw_radius).epsilon(1e-15));
    CHECK(file.placement.pso.particles == defaults.placement.pso.particles);
    CHECK(file.placement.grid.spacing == defaults.placement.grid.spacing);
    CHECK_THROWS_AS(load_scorer_config(R"({"weights": [1, 0]})"), Error);
    CHECK_THROWS_AS(load_scorer_config("not json"), Error);
}

TEST_CASE("office run is deterministic and replayable") {
    const SimConfig cfg = config_for("office", 7);
    const SimResult one = run_simulation(cfg);
    const SimResult two = run_simulation(cfg);
    CHECK(one.report.to_json() == two.report.to_json());
    CHECK(one.transcript.serialize() == two.transcript.serialize());

    const std::string path = temp_path("office.tdlg");
    save_transcript_file(one.transcript, path);
    const Transcript loaded = load_transcript_file(path);
    std::filesystem::remove(path);
    CHECK(loaded == one.transcript);
    CHECK(replay_transcript(loaded, cfg).to_json() == one.report.to_json());

    const std::string with_timing = one.report.to_json(true);
    CHECK(with_timing.find("grid_ms") != std::string::npos);
    CHECK(one.report.to_json().find("grid_ms") == std::string::npos);

    for (const PeerReport& p : one.report.peers) {
        CHECK(p.placements.size() >= 2u);
        for (const PlacementRecord& r : p.placements) {
            CHECK(r.feasible);
            CHECK(r.pso_score >= r.grid_score);
        }
    }
    CHECK(one.report.traffic[0].by_type.at("PoseUpdate") == one.report.ticks - 1);
}

TEST_CASE("the seed only reaches the grid through earlier refined placements") {
    const SimResult a = run_simulation(config_for("office", 1));
    const SimResult b = run_simulation(config_for("office", 2));
    for (int p = 0; p < 2; ++p) {
        const PlacementRecord& x = a.report.peers[p].placements.front();
        const PlacementRecord& y = b.report.peers[p].placements.front();
        REQUIRE(x.trigger == "initial");
        CHECK(x.grid_placement == y.grid_placement);
        CHECK(x.grid_score == y.grid_score);
    }
}

TEST_CASE("locomotion episodes map to placement requests") {
    for (const std::string& name : {std::string("office"), std::string("livingroom")}) {
        const SimConfig cfg = config_for(name);
        const SimResult r = run_simulation(cfg);
        // peer A hosts user B's avatar and the reverse
        const std::array<const MotionTrace*, 2> hosted{&cfg.trace_b, &cfg.trace_a};
        for (int p = 0; p < 2; ++p) {
            const PeerReport& peer = r.report.peers[p];
            const auto moves = std::count_if(peer.placements.begin(), peer.placements.end(),
                                             [](const PlacementRecord& x) { return x.trigger == "locomotion"; });
            const int expected = locomotion_episodes(*hosted[p]);
            CHECK(expected >= 1);
            CHECK(moves == expected);
            CHECK(peer.locomotion_episodes == static_cast<std::uint64_t>(expected));
            CHECK(peer.wip_ticks > 0u);
            CHECK(peer.wip_max_root_drift == 0.0);
        }
    }
}

TEST_CASE("livingroom announcements are feasible in the host room") {
    const SimConfig cfg = config_for("livingroom");
    const SimResult r = run_simulation(cfg);
    const std::array<const Room*, 2> host{&cfg.room_a, &cfg.room_b};
    for (int p = 0; p < 2; ++p) {
        CHECK_FALSE(r.report.peers[p].placements.empty());
        for (const PlacementRecord& rec : r.report.peers[p].placements) {
            CHECK(feasible(*host[p], rec.placement));
            CHECK(feasible(*host[p], rec.grid_placement));
        }
    }
}

TEST_CASE("mirror scenario points exactly") {
    const SimConfig cfg = config_for("mirror");
    const SimResult r = run_simulation(cfg);
    std::size_t samples = 0;
    for (const PeerReport& p : r.report.peers) {
        for (const PointingSample& s : p.pointing) {
            CHECK(s.error <= 1e-3);
            ++samples;
        }
    }
    CHECK(samples > 0u);
}

TEST_CASE("latency delays delivery without changing placements") {
    SimConfig cfg = config_for("office");
    const SimResult base = run_simulation(cfg);
    cfg.latency_ticks = 3;
    const SimResult late = run_simulation(cfg);
    CHECK(late.transcript.latency_ticks == 3);
    // the Hello and the first feature packet each take the extra ticks
    CHECK(late.report.peers[0].placements.front().tick == base.report.peers[0].placements.front().tick + 6);
    CHECK(late.report.peers[0].placements.front().grid_placement == base.report.peers[0].placements.front().grid_placement);
    CHECK(replay_transcript(late.transcript, cfg).to_json() == late.report.to_json());
}

TEST_CASE("transcript parsing rejects damage") {
    const SimResult r = run_simulation(config_for("mirror"));
    wire::Bytes bytes = r.transcript.serialize();
    CHECK(Transcript::parse(bytes) == r.transcript);
    wire::Bytes cut(bytes.begin(), bytes.end() - 3);
    CHECK_THROWS_AS(Transcript::parse(cut), Error);
    bytes[0] = 'X';
    CHECK_THROWS_AS(Transcript::parse(bytes), Error);
}

TEST_CASE("placement benchmark") {
    const Room office = office_a_room();
    const FeatureVector f = extract_features(office_b_room(), {2.0, 2.0, 0.0, Pose::Standing}, std::nullopt);
    const DefaultScorer scorer;
    CHECK_THROWS_AS(bench_placement(office, f, std::nullopt, scorer, {}, 0), Error);

    Room small;
    small.id = "small";
    small.extents = {{0, 0}, {1, 1}};
    Room large;
    large.id = "large";
    large.extents = {{0, 0}, {4, 3}};
    const BenchSummary s = bench_placement(small, f, std::nullopt, scorer, {}, 5);
    const BenchSummary l = bench_placement(large, f, std::nullopt, scorer, {}, 5);
    CHECK(s.candidates == 2u * 16u * 24u);
    CHECK(l.candidates == 2u * 4608u);
    CHECK(s.grid_min_ms < l.grid_min_ms);
    CHECK(l.grid_min_ms <= l.grid_mean_ms);
    CHECK(l.grid_mean_ms <= l.grid_max_ms);
    CHECK(l.pso_mean_ms > 0.0);
    const std::string json = l.to_json();
    CHECK(json.find("\"grid_ms\"") != std::string::npos);
    CHECK(json.find("\"pso_ms\"") != std::string::npos);
}

TEST_CASE("feature packet files") {
    const FeatureVector f = extract_features(office_a_room(), {2.5, 2.0, 0.3, Pose::Standing},
                                             Placement{2.5, 3.0, kPi, Pose::Standing});
    const std::string path = temp_path("features.bin");
    save_feature_packet_file(f, path);
    const FeatureVector g = load_feature_packet_file(path);
    std::filesystem::remove(path);
    REQUIRE(g.interpersonal);
    CHECK(g.interpersonal->offset.z == doctest::Approx(f.interpersonal->offset.z).epsilon(1e-6));
    CHECK(g.visual_attention.size() == f.visual_attention.size());
    CHECK(g.pose_accommodation.heights.size() == f.pose_accommodation.heights.size());
    CHECK_THROWS_AS(load_feature_packet(wire::encode(wire::Bye{})), Error);
}

TEST_CASE("user placement from a snapshot") {
    const Skeleton skel;
    UserSnapshot s;
    s.root = {{1, skel.standing_root_height(), 2}, Quat::from_yaw(1.0)};
    const Placement p = user_placement(s, skel);
    CHECK(p.pose == Pose::Standing);
    CHECK(p.yaw == doctest::Approx(1.0));
    s.root.position.y = 0.55;
    CHECK(user_placement(s, skel).pose == Pose::Sitting);
    CHECK(placement_seed(1, 10, 0) != placement_seed(1, 10, 1));
    CHECK(placement_seed(1, 10, 0) == placement_seed(1, 10, 0));
}
