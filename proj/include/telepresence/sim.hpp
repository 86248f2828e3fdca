#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "telepresence/placement.hpp"
#include "telepresence/protocol.hpp"
#include "telepresence/retarget.hpp"
#include "telepresence/scene.hpp"
#include "telepresence/state_machine.hpp"
#include "telepresence/trace.hpp"

namespace telepresence {

/// Scorer weights and optimizer settings, loadable from JSON.
struct ScorerConfig {
    SimilarityParams similarity;
    PlacementConfig placement;
};

ScorerConfig load_scorer_config(std::string_view json_text);
ScorerConfig load_scorer_config_file(const std::string& path);

struct SimConfig {
    Room room_a;
    Room room_b;
    MotionTrace trace_a;
    MotionTrace trace_b;
    std::uint64_t seed = 1;
    ScorerConfig scorer;
    StateMachineConfig state_machine;
    RetargetConfig retarget;
    Skeleton avatar_skeleton;
    int latency_ticks = 0;
    double tick_rate = 60.0;
};

struct PlacementRecord {
    std::uint32_t tick = 0;
    std::string trigger;  // "initial" or "locomotion"
    Placement grid_placement;
    double grid_score = 0.0;
    Placement placement;
    double pso_score = 0.0;
    double grid_ms = 0.0;
    double pso_ms = 0.0;
    bool feasible = false;
};

struct StateRecord {
    std::uint32_t tick = 0;
    UserState state = UserState::Solo;
};

struct PointingSample {
    std::uint32_t tick = 0;
    Effector effector = Effector::RightHand;
    std::string object_id;
    double error = 0.0;  // meters from the target point to the avatar's shoulder-wrist ray
};

struct TrafficStats {
    std::uint64_t frames = 0;
    std::uint64_t bytes = 0;
    std::map<std::string, std::uint64_t> by_type;
};

/// What one peer observed while hosting the other user's avatar in its room.
struct PeerReport {
    std::string name;
    std::string room;
    std::vector<PlacementRecord> placements;
    std::vector<StateRecord> timeline;
    std::vector<PointingSample> pointing;
    std::uint64_t locomotion_episodes = 0;
    std::uint64_t wip_ticks = 0;
    double wip_max_root_drift = 0.0;
};

struct RunReport {
    double tick_rate = 60.0;
    std::uint32_t ticks = 0;
    std::uint64_t seed = 0;
    int latency_ticks = 0;
    std::array<PeerReport, 2> peers;
    std::array<TrafficStats, 2> traffic;  // [0] A to B, [1] B to A

    /// Wall-clock timings vary between runs, so they are only included on request.
    std::string to_json(bool include_timing = false) const;
};

struct TranscriptRecord {
    std::uint8_t direction = 0;  // 0 A to B, 1 B to A
    std::uint32_t send_tick = 0;
    wire::Bytes frame;

    friend bool operator==(const TranscriptRecord&, const TranscriptRecord&) = default;
};

/// Every frame either peer sent, in send order. Frames sent at tick t arrive at t + 1 + latency.
struct Transcript {
    int latency_ticks = 0;
    double tick_rate = 60.0;
    std::vector<TranscriptRecord> records;

    std::uint32_t delivery_tick(const TranscriptRecord& r) const {
        return r.send_tick + 1 + static_cast<std::uint32_t>(latency_ticks);
    }
    wire::Bytes serialize() const;
    static Transcript parse(std::span<const std::uint8_t> bytes);

    friend bool operator==(const Transcript&, const Transcript&) = default;
};

Transcript load_transcript_file(const std::string& path);
void save_transcript_file(const Transcript& transcript, const std::string& path);

struct SimResult {
    RunReport report;
    Transcript transcript;
};

/// Runs both peers in lockstep over the longer trace, then exchanges Bye.
SimResult run_simulation(const SimConfig& cfg);

/// Re-runs the avatar hosts from a recorded transcript. Rooms, seed, scorer and retarget
/// settings come from `cfg`; traces are not needed.
RunReport replay_transcript(const Transcript& transcript, const SimConfig& cfg);

/// Placement of a tracked user on the floor plan; sitting when the root is well below standing height.
Placement user_placement(const UserSnapshot& snapshot, const Skeleton& skeleton);

/// PSO seed for one placement request.
std::uint64_t placement_seed(std::uint64_t run_seed, std::uint32_t tick, std::uint8_t peer);

struct BenchSummary {
    int repetitions = 0;
    std::size_t candidates = 0;  // grid tuples over both poses, before feasibility
    double grid_mean_ms = 0.0, grid_min_ms = 0.0, grid_max_ms = 0.0;
    double pso_mean_ms = 0.0, pso_min_ms = 0.0, pso_max_ms = 0.0;
    Placement placement;
    double score = 0.0;

    std::string to_json() const;
};

BenchSummary bench_placement(const Room& room, const FeatureVector& features, const std::optional<Placement>& partner,
                             const SimilarityScorer& scorer, const PlacementConfig& cfg, int repetitions);

/// Reads a feature vector stored as one encoded FeaturePacket frame.
FeatureVector load_feature_packet(std::span<const std::uint8_t> bytes);
FeatureVector load_feature_packet_file(const std::string& path);
void save_feature_packet_file(const FeatureVector& features, const std::string& path);

}  // namespace telepresence
