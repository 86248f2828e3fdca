#include "telepresence/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "telepresence/error.hpp"
#include "telepresence/session.hpp"

namespace telepresence {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::FileError, std::string("cannot open ") + what + " " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const void* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::FileError, "cannot write " + path);
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

const char* direction_name(std::size_t d) { return d == 0 ? "A_to_B" : "B_to_A"; }

json placement_json(const Placement& p) {
    return {{"x", p.x}, {"z", p.z}, {"yaw", p.yaw}, {"pose", std::string(to_string(p.pose))}};
}

/// Receiving side of one peer: owns the remote user's avatar in this peer's room.
class AvatarHost {
public:
    AvatarHost(std::string name, const Room& room, const SimConfig& cfg, std::uint8_t index)
        : room_(room), cfg_(cfg), index_(index), scorer_(cfg.scorer.similarity) {
        report_.name = std::move(name);
        report_.room = room.id;
    }

    /// Processes the messages delivered this tick and advances the avatar. Returns placements to announce.
    std::vector<Placement> on_tick(std::uint32_t tick, const std::optional<wire::PoseUpdate>& own_pose,
                                   const std::vector<wire::Message>& remote) {
        if (own_pose) own_pose_ = own_pose;
        std::vector<Placement> announce;
        for (const auto& msg : remote) {
            if (const auto* hello = std::get_if<wire::Hello>(&msg)) {
                const Skeleton user = wire::from_wire(hello->skeleton);
                calibration_ = cfg_.avatar_skeleton.stature() / user.stature();
            } else if (const auto* pose = std::get_if<wire::PoseUpdate>(&msg)) {
                remote_pose_ = *pose;
            } else if (const auto* sc = std::get_if<wire::StateChange>(&msg)) {
                if (sc->state == UserState::Locomotion && remote_state_ != UserState::Locomotion) {
                    ++report_.locomotion_episodes;
                }
                remote_state_ = sc->state;
                report_.timeline.push_back({sc->tick, sc->state});
            } else if (const auto* tu = std::get_if<wire::TargetUpdate>(&msg)) {
                targets_[static_cast<std::size_t>(tu->effector)] = tu->hit;
            } else if (const auto* fp = std::get_if<wire::FeaturePacket>(&msg)) {
                announce.push_back(place(tick, wire::from_wire(fp->features)));
            }
        }
        animate(tick);
        return announce;
    }

    const PeerReport& report() const { return report_; }
    const std::optional<Placement>& avatar_placement() const { return placement_; }
    const std::optional<Vec3>& avatar_head() const { return avatar_head_; }

private:
    Placement place(std::uint32_t tick, const FeatureVector& features) {
        std::optional<Placement> partner;
        if (features.interpersonal && own_pose_) {
            partner = user_placement(wire::snapshot_from_pose(*own_pose_), cfg_.avatar_skeleton);
        }
        PlacementConfig pc = cfg_.scorer.placement;
        pc.pso.seed = placement_seed(cfg_.seed, tick, index_);
        const PlacementResult r = find_placement(room_, features, partner, scorer_, pc);

        PlacementRecord rec;
        rec.tick = tick;
        rec.trigger = report_.placements.empty() ? "initial" : "locomotion";
        rec.grid_placement = r.grid_placement;
        rec.grid_score = r.grid_score;
        rec.placement = r.placement;
        rec.pso_score = r.pso_score;
        rec.grid_ms = r.grid_ms;
        rec.pso_ms = r.pso_ms;
        rec.feasible = feasible(room_, r.placement);
        report_.placements.push_back(rec);

        placement_ = r.placement;
        const SceneObject* seat = supporting_seat(room_, r.placement);
        avatar_root_ = placement_root(r.placement, cfg_.avatar_skeleton, seat ? seat->sit_height : 0.0);
        interp_ = InterpState{};
        return r.placement;
    }

    std::optional<AimTarget> resolve(const wire::HitWire& hit) const {
        const NormalizedHit h = wire::from_wire(hit);
        if (h.object_id == kPartnerHeadId) {
            if (!own_pose_) return std::nullopt;
            const Room with_head = with_partner_head(room_, wire::snapshot_from_pose(*own_pose_).head.position);
            return AimTarget{h.object_id, denormalize_hit(*with_head.find(kPartnerHeadId), h)};
        }
        const SceneObject* obj = room_.find(h.object_id);
        if (!obj) return std::nullopt;
        return AimTarget{h.object_id, denormalize_hit(*obj, h)};
    }

    void animate(std::uint32_t tick) {
        if (!placement_ || !remote_pose_) return;
        AvatarInputs in;
        in.goals = wire::goals_from_pose(*remote_pose_, calibration_);
        in.avatar_root = avatar_root_;
        in.dt = 1.0 / cfg_.tick_rate;
        for (std::size_t e = 0; e < 3; ++e) {
            if (targets_[e]) in.targets[e] = resolve(*targets_[e]);
        }
        const AvatarPose pose = avatar_tick(remote_state_, cfg_.avatar_skeleton, in, interp_, cfg_.retarget);
        const JointPositions joints = forward_kinematics(cfg_.avatar_skeleton, pose);
        avatar_head_ = joints.head;

        if (remote_state_ == UserState::Locomotion) {
            if (!wip_anchor_) wip_anchor_ = pose.root.position;
            ++report_.wip_ticks;
            report_.wip_max_root_drift = std::max(report_.wip_max_root_drift, (pose.root.position - *wip_anchor_).norm());
        } else {
            wip_anchor_.reset();
        }

        if (remote_state_ != UserState::Interaction) return;
        for (const Effector e : {Effector::LeftHand, Effector::RightHand}) {
            const auto& target = in.targets[static_cast<std::size_t>(e)];
            const EffectorInterp& s = interp_.at(e);
            if (!target || s.source != target->object_id || s.t < 1.0) continue;
            const Side side = e == Effector::LeftHand ? Side::Left : Side::Right;
            Vec3 point = target->point;
            if (cfg_.retarget.elevation_offset > 0.0) {
                point = vertical_compensation(point, pose.root.apply(in.goals.head.position), cfg_.retarget.elevation_offset);
            }
            const double err = distance_to_ray(point, joints.shoulder(side), joints.wrist(side));
            report_.pointing.push_back({tick, e, target->object_id, err});
        }
    }

    const Room& room_;
    const SimConfig& cfg_;
    std::uint8_t index_;
    DefaultScorer scorer_;
    PeerReport report_;
    double calibration_ = 1.0;
    std::optional<wire::PoseUpdate> own_pose_;
    std::optional<wire::PoseUpdate> remote_pose_;
    UserState remote_state_ = UserState::Solo;
    std::array<std::optional<wire::HitWire>, 3> targets_;
    std::optional<Placement> placement_;
    Transform avatar_root_;
    InterpState interp_;
    std::optional<Vec3> avatar_head_;
    std::optional<Vec3> wip_anchor_;
};

void count_traffic(RunReport& report, const Transcript& t) {
    for (const auto& r : t.records) {
        TrafficStats& s = report.traffic[r.direction];
        ++s.frames;
        s.bytes += r.frame.size();
        const wire::Decoded d = wire::decode(r.frame);
        ++s.by_type[std::string(wire::message_name(d.message))];
    }
}

void put_u32(wire::Bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t& off) {
    if (off + 4 > b.size()) throw Error(ErrorCode::Truncated, "transcript ends inside a record");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[off + i]) << (8 * i);
    off += 4;
    return v;
}

constexpr std::uint8_t kTranscriptMagic[4] = {'T', 'D', 'L', 'G'};
constexpr std::uint8_t kTranscriptVersion = 1;

SimConfig normalized(SimConfig cfg) {
    if (!(cfg.tick_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "tick rate must be positive");
    if (cfg.latency_ticks < 0) throw Error(ErrorCode::InvalidConfig, "latency must be nonnegative");
    cfg.state_machine.tick_rate = cfg.tick_rate;
    cfg.state_machine.validate();
    cfg.scorer.similarity.validate();
    cfg.scorer.placement.pso.validate();
    cfg.avatar_skeleton.validate();
    return cfg;
}

}  // namespace

ScorerConfig load_scorer_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedDocument, e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::MalformedDocument, "scorer config must be an object");
    ScorerConfig c;
    try {
        SimilarityParams& s = c.similarity;
        if (j.contains("weights")) {
            const auto w = j.at("weights").get<std::vector<double>>();
            if (w.size() != 4) throw Error(ErrorCode::InvalidWeights, "weights needs 4 entries");
            std::copy(w.begin(), w.end(), s.weights.begin());
        }
        s.sigma_position = j.value("sigma_position", s.sigma_position);
        s.sigma_facing = j.value("sigma_facing", s.sigma_facing);
        s.sigma_height = j.value("sigma_height", s.sigma_height);
        s.lambda_distance = j.value("lambda_distance", s.lambda_distance);
        if (j.contains("grid")) {
            const json& g = j.at("grid");
            GridConfig& gc = c.placement.grid;
            gc.spacing = g.value("spacing", gc.spacing);
            gc.orientations = g.value("orientations", gc.orientations);
            gc.shards = g.value("shards", gc.shards);
        }
        if (j.contains("pso")) {
            const json& p = j.at("pso");
            PsoConfig& pc = c.placement.pso;
            pc.particles = p.value("particles", pc.particles);
            pc.iterations = p.value("iterations", pc.iterations);
            pc.inertia = p.value("inertia", pc.inertia);
            pc.cognitive = p.value("cognitive", pc.cognitive);
            pc.social = p.value("social", pc.social);
            pc.radius = p.value("radius", pc.radius);
            if (p.contains("yaw_radius_deg")) pc.yaw_radius = deg_to_rad(p.at("yaw_radius_deg").get<double>());
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedDocument, e.what());
    }
    c.similarity.validate();
    c.placement.pso.validate();
    const GridConfig& g = c.placement.grid;
    if (!(g.spacing > 0.0) || g.orientations < 1 || g.shards < 1) {
        throw Error(ErrorCode::InvalidConfig, "grid spacing, orientations and shards must be positive");
    }
    return c;
}

ScorerConfig load_scorer_config_file(const std::string& path) {
    return load_scorer_config(read_file(path, "scorer config"));
}

std::string RunReport::to_json(bool include_timing) const {
    json j;
    j["tick_rate"] = tick_rate;
    j["ticks"] = ticks;
    j["seed"] = seed;
    j["latency_ticks"] = latency_ticks;
    j["peers"] = json::array();
    for (const auto& p : peers) {
        json pj;
        pj["name"] = p.name;
        pj["room"] = p.room;
        pj["locomotion_episodes"] = p.locomotion_episodes;
        json placements = json::array();
        for (const auto& r : p.placements) {
            json rj{{"tick", r.tick},
                    {"trigger", r.trigger},
                    {"placement", placement_json(r.placement)},
                    {"pso_score", r.pso_score},
                    {"grid_placement", placement_json(r.grid_placement)},
                    {"grid_score", r.grid_score},
                    {"feasible", r.feasible}};
            if (include_timing) {
                rj["grid_ms"] = r.grid_ms;
                rj["pso_ms"] = r.pso_ms;
            }
            placements.push_back(std::move(rj));
        }
        pj["placements"] = std::move(placements);
        json timeline = json::array();
        for (const auto& s : p.timeline) timeline.push_back({{"tick", s.tick}, {"state", std::string(to_string(s.state))}});
        pj["timeline"] = std::move(timeline);

        double max_err = 0.0, sum = 0.0;
        json samples = json::array();
        for (const auto& s : p.pointing) {
            max_err = std::max(max_err, s.error);
            sum += s.error;
            samples.push_back({{"tick", s.tick},
                               {"effector", std::string(to_string(s.effector))},
                               {"object", s.object_id},
                               {"error", s.error}});
        }
        pj["pointing"] = {{"count", p.pointing.size()},
                          {"max_error", max_err},
                          {"mean_error", p.pointing.empty() ? 0.0 : sum / static_cast<double>(p.pointing.size())},
                          {"samples", std::move(samples)}};
        pj["wip"] = {{"ticks", p.wip_ticks}, {"max_root_drift", p.wip_max_root_drift}};
        j["peers"].push_back(std::move(pj));
    }
    json traffic;
    for (std::size_t d = 0; d < 2; ++d) {
        traffic[direction_name(d)] = {{"frames", this->traffic[d].frames},
                                      {"bytes", this->traffic[d].bytes},
                                      {"by_type", this->traffic[d].by_type}};
    }
    j["traffic"] = std::move(traffic);
    return j.dump(2) + "\n";
}

wire::Bytes Transcript::serialize() const {
    wire::Bytes out(std::begin(kTranscriptMagic), std::end(kTranscriptMagic));
    out.push_back(kTranscriptVersion);
    put_u32(out, static_cast<std::uint32_t>(latency_ticks));
    std::uint64_t rate_bits = 0;
    std::memcpy(&rate_bits, &tick_rate, sizeof rate_bits);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(rate_bits >> (8 * i)));
    for (const auto& r : records) {
        out.push_back(r.direction);
        put_u32(out, r.send_tick);
        put_u32(out, static_cast<std::uint32_t>(r.frame.size()));
        out.insert(out.end(), r.frame.begin(), r.frame.end());
    }
    return out;
}

Transcript Transcript::parse(std::span<const std::uint8_t> b) {
    if (b.size() < 17) throw Error(ErrorCode::Truncated, "transcript header is incomplete");
    if (!std::equal(std::begin(kTranscriptMagic), std::end(kTranscriptMagic), b.begin())) {
        throw Error(ErrorCode::BadMagic, "not a transcript");
    }
    if (b[4] != kTranscriptVersion) throw Error(ErrorCode::UnsupportedVersion, "unsupported transcript version");
    std::size_t off = 5;
    Transcript t;
    t.latency_ticks = static_cast<int>(get_u32(b, off));
    std::uint64_t rate_bits = 0;
    for (int i = 0; i < 8; ++i) rate_bits |= static_cast<std::uint64_t>(b[off + i]) << (8 * i);
    off += 8;
    std::memcpy(&t.tick_rate, &rate_bits, sizeof rate_bits);
    if (!(t.tick_rate > 0.0) || !std::isfinite(t.tick_rate)) {
        throw Error(ErrorCode::MalformedDocument, "transcript tick rate must be positive");
    }
    while (off < b.size()) {
        TranscriptRecord r;
        r.direction = b[off++];
        if (r.direction > 1) throw Error(ErrorCode::MalformedDocument, "bad transcript direction");
        r.send_tick = get_u32(b, off);
        const std::uint32_t len = get_u32(b, off);
        if (off + len > b.size()) throw Error(ErrorCode::Truncated, "transcript ends inside a frame");
        r.frame.assign(b.begin() + static_cast<std::ptrdiff_t>(off), b.begin() + static_cast<std::ptrdiff_t>(off + len));
        off += len;
        t.records.push_back(std::move(r));
    }
    return t;
}

Transcript load_transcript_file(const std::string& path) {
    const std::string data = read_file(path, "transcript");
    return Transcript::parse(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

void save_transcript_file(const Transcript& transcript, const std::string& path) {
    const wire::Bytes b = transcript.serialize();
    write_file(path, b.data(), b.size());
}

Placement user_placement(const UserSnapshot& snapshot, const Skeleton& skeleton) {
    const Vec3& p = snapshot.root.position;
    const Pose pose = p.y < skeleton.standing_root_height() - 0.2 ? Pose::Sitting : Pose::Standing;
    return {p.x, p.z, snapshot.root.rotation.yaw(), pose};
}

std::uint64_t placement_seed(std::uint64_t run_seed, std::uint32_t tick, std::uint8_t peer) {
    return splitmix64(run_seed ^ splitmix64((static_cast<std::uint64_t>(tick) << 8) | peer));
}

SimResult run_simulation(const SimConfig& input) {
    const SimConfig cfg = normalized(input);
    validate_pairing(cfg.room_a, cfg.room_b);
    const std::array<const Room*, 2> rooms{&cfg.room_a, &cfg.room_b};
    const std::array<const MotionTrace*, 2> traces{&cfg.trace_a, &cfg.trace_b};
    for (const MotionTrace* t : traces) {
        if (t->snapshots.empty()) throw Error(ErrorCode::MalformedDocument, "trace has no snapshots");
        if (std::abs(t->tick_rate - cfg.tick_rate) > 1e-9) {
            throw Error(ErrorCode::InvalidConfig, "trace tick rate does not match the session tick rate");
        }
    }
    const std::uint32_t total =
        static_cast<std::uint32_t>(std::max(cfg.trace_a.snapshots.size(), cfg.trace_b.snapshots.size()));

    std::array<Session, 2> sessions{
        Session(wire::Hello{wire::kProtocolVersion, room_hash(cfg.room_a), wire::to_wire(cfg.trace_a.skeleton)}),
        Session(wire::Hello{wire::kProtocolVersion, room_hash(cfg.room_b), wire::to_wire(cfg.trace_b.skeleton)})};
    std::array<UserStateMachine, 2> machines{UserStateMachine(cfg.state_machine), UserStateMachine(cfg.state_machine)};
    std::array<AvatarHost, 2> hosts{AvatarHost("A", cfg.room_a, cfg, 0), AvatarHost("B", cfg.room_b, cfg, 1)};
    std::array<std::vector<Placement>, 2> to_announce;
    // inbox[p][tick] holds the bytes delivered to peer p at that tick
    std::array<std::map<std::uint32_t, wire::Bytes>, 2> inbox;

    SimResult result;
    result.transcript.latency_ticks = cfg.latency_ticks;
    result.transcript.tick_rate = cfg.tick_rate;
    const std::uint8_t pose_type = wire::message_type(wire::PoseUpdate{});

    for (std::uint32_t tick = 0; tick < total; ++tick) {
        for (std::uint8_t p = 0; p < 2; ++p) {
            const Room& room = *rooms[p];
            const MotionTrace& trace = *traces[p];
            UserSnapshot snap = trace.snapshots[std::min<std::size_t>(tick, trace.snapshots.size() - 1)];
            snap.tick = tick;

            const auto& head = hosts[p].avatar_head();
            const TickOutput sm = machines[p].step(snap, head ? with_partner_head(room, *head) : room);

            OutgoingTick out;
            out.tick = tick;
            out.pose = wire::pose_update(tick, snap);
            out.state = sm.state;
            for (std::size_t e = 0; e < 3; ++e) {
                const auto& hit = sm.targets.targets[e];
                if (!hit) continue;
                std::string remote_id = hit->object_id;
                if (remote_id != kPartnerHeadId) {
                    const SceneObject* obj = room.find(hit->object_id);
                    if (!obj || !obj->pair_id) continue;
                    remote_id = *obj->pair_id;
                }
                wire::HitWire w = wire::to_wire(*hit);
                w.object_id = remote_id;
                out.targets[e] = std::move(w);
            }
            out.placements = std::move(to_announce[p]);
            to_announce[p].clear();
            const bool request = std::any_of(sm.events.begin(), sm.events.end(),
                                             [](const Event& ev) { return ev.kind == EventKind::RequestPlacement; });
            if (tick == 0 || request) {
                out.features.push_back(
                    extract_features(room, user_placement(snap, trace.skeleton), hosts[p].avatar_placement()));
            }
            out.bye = tick + 1 == total;

            wire::Bytes incoming;
            if (auto it = inbox[p].find(tick); it != inbox[p].end()) {
                incoming = std::move(it->second);
                inbox[p].erase(it);
            }
            const SessionTickResult res = sessions[p].tick(out, incoming);
            if (sessions[p].close_reason()) {
                throw Error(*sessions[p].close_reason(), "session closed by a protocol violation");
            }

            bool sent_pose = false;
            wire::Bytes& dest = inbox[1 - p][tick + 1 + static_cast<std::uint32_t>(cfg.latency_ticks)];
            for (const auto& frame : res.frames) {
                sent_pose = sent_pose || frame[3] == pose_type;
                dest.insert(dest.end(), frame.begin(), frame.end());
                result.transcript.records.push_back({p, tick, frame});
            }
            std::optional<wire::PoseUpdate> own;
            if (sent_pose) own = out.pose;
            to_announce[p] = hosts[p].on_tick(tick, own, res.remote);
        }
    }

    RunReport& report = result.report;
    report.tick_rate = cfg.tick_rate;
    report.ticks = total;
    report.seed = cfg.seed;
    report.latency_ticks = cfg.latency_ticks;
    report.peers = {hosts[0].report(), hosts[1].report()};
    count_traffic(report, result.transcript);
    return result;
}

RunReport replay_transcript(const Transcript& transcript, const SimConfig& input) {
    SimConfig cfg = input;
    cfg.tick_rate = transcript.tick_rate;
    cfg.latency_ticks = transcript.latency_ticks;
    cfg = normalized(std::move(cfg));

    std::uint32_t total = 0;
    // own_poses[p][tick]: the pose peer p published; delivered[p][tick]: bytes arriving at p
    std::array<std::map<std::uint32_t, wire::PoseUpdate>, 2> own_poses;
    std::array<std::map<std::uint32_t, wire::Bytes>, 2> delivered;
    for (const auto& r : transcript.records) {
        total = std::max(total, r.send_tick + 1);
        const wire::Decoded d = wire::decode(r.frame);
        if (const auto* pose = std::get_if<wire::PoseUpdate>(&d.message)) own_poses[r.direction][r.send_tick] = *pose;
        wire::Bytes& dest = delivered[1 - r.direction][transcript.delivery_tick(r)];
        dest.insert(dest.end(), r.frame.begin(), r.frame.end());
    }

    std::array<AvatarHost, 2> hosts{AvatarHost("A", cfg.room_a, cfg, 0), AvatarHost("B", cfg.room_b, cfg, 1)};
    std::array<wire::FrameReader, 2> readers;
    std::array<bool, 2> closed{false, false};
    for (std::uint32_t tick = 0; tick < total; ++tick) {
        for (std::uint8_t p = 0; p < 2; ++p) {
            std::vector<wire::Message> remote;
            if (!closed[p]) {
                if (auto it = delivered[p].find(tick); it != delivered[p].end()) readers[p].feed(it->second);
                while (auto msg = readers[p].next()) {
                    const bool bye = std::holds_alternative<wire::Bye>(*msg);
                    remote.push_back(std::move(*msg));
                    if (bye) {
                        closed[p] = true;
                        break;
                    }
                }
            }
            std::optional<wire::PoseUpdate> own;
            if (auto it = own_poses[p].find(tick); it != own_poses[p].end()) own = it->second;
            hosts[p].on_tick(tick, own, remote);
        }
    }

    RunReport report;
    report.tick_rate = cfg.tick_rate;
    report.ticks = total;
    report.seed = cfg.seed;
    report.latency_ticks = cfg.latency_ticks;
    report.peers = {hosts[0].report(), hosts[1].report()};
    count_traffic(report, transcript);
    return report;
}

std::string BenchSummary::to_json() const {
    json j{{"repetitions", repetitions},
           {"candidates", candidates},
           {"grid_ms", {{"mean", grid_mean_ms}, {"min", grid_min_ms}, {"max", grid_max_ms}}},
           {"pso_ms", {{"mean", pso_mean_ms}, {"min", pso_min_ms}, {"max", pso_max_ms}}},
           {"placement", placement_json(placement)},
           {"score", score}};
    return j.dump(2) + "\n";
}

BenchSummary bench_placement(const Room& room, const FeatureVector& features, const std::optional<Placement>& partner,
                             const SimilarityScorer& scorer, const PlacementConfig& cfg, int repetitions) {
    if (repetitions <= 0) throw Error(ErrorCode::EmptyBenchmark, "benchmark needs at least one repetition");
    BenchSummary s;
    s.repetitions = repetitions;
    s.candidates = grid_candidates(room, Pose::Standing, cfg.grid).size() + grid_candidates(room, Pose::Sitting, cfg.grid).size();
    s.grid_min_ms = s.pso_min_ms = std::numeric_limits<double>::infinity();
    for (int i = 0; i < repetitions; ++i) {
        const PlacementResult r = find_placement(room, features, partner, scorer, cfg);
        s.grid_mean_ms += r.grid_ms;
        s.pso_mean_ms += r.pso_ms;
        s.grid_min_ms = std::min(s.grid_min_ms, r.grid_ms);
        s.pso_min_ms = std::min(s.pso_min_ms, r.pso_ms);
        s.grid_max_ms = std::max(s.grid_max_ms, r.grid_ms);
        s.pso_max_ms = std::max(s.pso_max_ms, r.pso_ms);
        s.placement = r.placement;
        s.score = r.pso_score;
    }
    s.grid_mean_ms /= repetitions;
    s.pso_mean_ms /= repetitions;
    return s;
}

FeatureVector load_feature_packet(std::span<const std::uint8_t> bytes) {
    const wire::Decoded d = wire::decode(bytes);
    if (d.consumed != bytes.size()) throw Error(ErrorCode::MalformedDocument, "trailing bytes after feature packet");
    const auto* fp = std::get_if<wire::FeaturePacket>(&d.message);
    if (!fp) throw Error(ErrorCode::MalformedDocument, "file does not hold a FeaturePacket frame");
    return wire::from_wire(fp->features);
}

FeatureVector load_feature_packet_file(const std::string& path) {
    const std::string data = read_file(path, "feature file");
    return load_feature_packet(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

void save_feature_packet_file(const FeatureVector& features, const std::string& path) {
    const wire::Bytes b = wire::encode(wire::FeaturePacket{0, wire::to_wire(features)});
    write_file(path, b.data(), b.size());
}

}  // namespace telepresence
