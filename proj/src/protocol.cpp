#include "telepresence/protocol.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "telepresence/error.hpp"

namespace telepresence::wire {

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { le(v, 2); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f32(float v) {
        if (!std::isfinite(v)) throw Error(ErrorCode::Unrepresentable, "non-finite float field");
        u32(std::bit_cast<std::uint32_t>(v));
    }
    void vec3(const Vec3f& v) { f32(v.x); f32(v.y); f32(v.z); }
    void quat(const Quatf& q) { f32(q.w); f32(q.x); f32(q.y); f32(q.z); }
    void transform(const Transformf& t) { vec3(t.position); quat(t.rotation); }
    void string(const std::string& s) {
        if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw Error(ErrorCode::Unrepresentable, "string longer than 65535 bytes");
        }
        u16(static_cast<std::uint16_t>(s.size()));
        out_.insert(out_.end(), s.begin(), s.end());
    }
    void count8(std::size_t n) {
        if (n > std::numeric_limits<std::uint8_t>::max()) throw Error(ErrorCode::Unrepresentable, "list longer than 255");
        u8(static_cast<std::uint8_t>(n));
    }
    Bytes take() { return std::move(out_); }

private:
    void le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    Bytes out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    float f32() {
        const float v = std::bit_cast<float>(u32());
        if (!std::isfinite(v)) throw Error(ErrorCode::MalformedDocument, "non-finite float on the wire");
        return v;
    }
    Vec3f vec3() { Vec3f v; v.x = f32(); v.y = f32(); v.z = f32(); return v; }
    Quatf quat() { Quatf q; q.w = f32(); q.x = f32(); q.y = f32(); q.z = f32(); return q; }
    Transformf transform() { Transformf t; t.position = vec3(); t.rotation = quat(); return t; }
    std::string string() {
        const std::size_t n = u16();
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    template <typename Enum>
    Enum enumeration(std::uint8_t max_value) {
        const std::uint8_t v = u8();
        if (v > max_value) throw Error(ErrorCode::MalformedDocument, "enumeration value out of range");
        return static_cast<Enum>(v);
    }
    bool flag() {
        const std::uint8_t v = u8();
        if (v > 1) throw Error(ErrorCode::MalformedDocument, "flag byte must be 0 or 1");
        return v == 1;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw Error(ErrorCode::Truncated, "payload ends early");
    }
    std::uint64_t le(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

constexpr std::uint8_t kMaxState = static_cast<std::uint8_t>(UserState::Interaction);
constexpr std::uint8_t kMaxEffector = static_cast<std::uint8_t>(Effector::RightHand);
constexpr std::uint8_t kMaxPose = static_cast<std::uint8_t>(Pose::Sitting);
constexpr std::uint8_t kMaxCategory = kCategoryCount - 1;

void put_categories(Writer& w, const std::vector<CategoryDistance>& list) {
    w.count8(list.size());
    for (const auto& e : list) {
        if (static_cast<std::uint8_t>(e.category) > kMaxCategory) {
            throw Error(ErrorCode::Unrepresentable, "unknown object category");
        }
        w.u8(static_cast<std::uint8_t>(e.category));
        w.f32(e.distance);
    }
}

std::vector<CategoryDistance> get_categories(Reader& r) {
    std::vector<CategoryDistance> out(r.u8());
    for (auto& e : out) {
        e.category = r.enumeration<ObjectCategory>(kMaxCategory);
        e.distance = r.f32();
    }
    return out;
}

void put_payload(Writer& w, const Hello& m) {
    w.u16(m.version);
    w.u64(m.room_hash);
    const SkeletonWire& s = m.skeleton;
    for (const float f : {s.spine, s.neck, s.upper_arm, s.forearm, s.hand, s.thigh, s.shin}) w.f32(f);
    w.vec3(s.left_shoulder);
    w.vec3(s.right_shoulder);
    w.vec3(s.left_hip);
    w.vec3(s.right_hip);
}

void put_payload(Writer& w, const PoseUpdate& m) {
    w.u32(m.tick);
    w.transform(m.root);
    for (const auto& t : m.effectors) w.transform(t);
    if (m.lifted > 3) throw Error(ErrorCode::Unrepresentable, "lifted mask uses two bits");
    w.u8(m.lifted);
    if (m.fingers.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw Error(ErrorCode::Unrepresentable, "finger block too large");
    }
    w.u16(static_cast<std::uint16_t>(m.fingers.size()));
    for (const float f : m.fingers) w.f32(f);
}

void put_payload(Writer& w, const StateChange& m) {
    w.u32(m.tick);
    if (static_cast<std::uint8_t>(m.state) > kMaxState) throw Error(ErrorCode::Unrepresentable, "unknown state");
    w.u8(static_cast<std::uint8_t>(m.state));
}

void put_payload(Writer& w, const TargetUpdate& m) {
    w.u32(m.tick);
    if (static_cast<std::uint8_t>(m.effector) > kMaxEffector) throw Error(ErrorCode::Unrepresentable, "unknown effector");
    w.u8(static_cast<std::uint8_t>(m.effector));
    w.u8(m.hit ? 1 : 0);
    if (m.hit) {
        w.string(m.hit->object_id);
        w.f32(m.hit->u);
        w.f32(m.hit->v);
        w.f32(m.hit->w);
    }
}

void put_payload(Writer& w, const PlacementAnnounce& m) {
    w.u32(m.tick);
    w.f32(m.x);
    w.f32(m.z);
    w.f32(m.yaw);
    if (static_cast<std::uint8_t>(m.pose) > kMaxPose) throw Error(ErrorCode::Unrepresentable, "unknown pose");
    w.u8(static_cast<std::uint8_t>(m.pose));
}

void put_payload(Writer& w, const FeaturePacket& m) {
    w.u32(m.tick);
    const FeaturesWire& f = m.features;
    w.u8(f.interpersonal ? 1 : 0);
    if (f.interpersonal) {
        w.f32(f.interpersonal->offset_x);
        w.f32(f.interpersonal->offset_z);
        w.f32(f.interpersonal->facing);
    }
    for (const float v : {f.map_center_x, f.map_center_z, f.map_radius, f.map_cell, f.map_yaw}) w.f32(v);
    w.u8(f.map_half);
    const std::size_t side = 2u * f.map_half + 1u;
    if (f.valid.size() != side * side || f.heights.size() != side * side) {
        throw Error(ErrorCode::Unrepresentable, "height map cell count does not match its half width");
    }
    for (std::size_t i = 0; i < f.heights.size(); ++i) {
        if (f.valid[i] > 1) throw Error(ErrorCode::Unrepresentable, "validity flag must be 0 or 1");
        w.u8(f.valid[i]);
        w.f32(f.heights[i]);
    }
    put_categories(w, f.visual_attention);
    put_categories(w, f.spatial);
}

void put_payload(Writer&, const Bye&) {}

Message read_payload(std::uint8_t type, Reader& r) {
    switch (type) {
        case 1: {
            Hello m;
            m.version = r.u16();
            m.room_hash = r.u64();
            SkeletonWire& s = m.skeleton;
            for (float* f : {&s.spine, &s.neck, &s.upper_arm, &s.forearm, &s.hand, &s.thigh, &s.shin}) *f = r.f32();
            s.left_shoulder = r.vec3();
            s.right_shoulder = r.vec3();
            s.left_hip = r.vec3();
            s.right_hip = r.vec3();
            return m;
        }
        case 2: {
            PoseUpdate m;
            m.tick = r.u32();
            m.root = r.transform();
            for (auto& t : m.effectors) t = r.transform();
            m.lifted = r.u8();
            if (m.lifted > 3) throw Error(ErrorCode::MalformedDocument, "lifted mask uses two bits");
            m.fingers.resize(r.u16());
            for (auto& f : m.fingers) f = r.f32();
            return m;
        }
        case 3: {
            StateChange m;
            m.tick = r.u32();
            m.state = r.enumeration<UserState>(kMaxState);
            return m;
        }
        case 4: {
            TargetUpdate m;
            m.tick = r.u32();
            m.effector = r.enumeration<Effector>(kMaxEffector);
            if (r.flag()) {
                HitWire h;
                h.object_id = r.string();
                h.u = r.f32();
                h.v = r.f32();
                h.w = r.f32();
                m.hit = std::move(h);
            }
            return m;
        }
        case 5: {
            PlacementAnnounce m;
            m.tick = r.u32();
            m.x = r.f32();
            m.z = r.f32();
            m.yaw = r.f32();
            m.pose = r.enumeration<Pose>(kMaxPose);
            return m;
        }
        case 6: {
            FeaturePacket m;
            m.tick = r.u32();
            FeaturesWire& f = m.features;
            if (r.flag()) {
                InterpersonalWire ip;
                ip.offset_x = r.f32();
                ip.offset_z = r.f32();
                ip.facing = r.f32();
                f.interpersonal = ip;
            }
            for (float* v : {&f.map_center_x, &f.map_center_z, &f.map_radius, &f.map_cell, &f.map_yaw}) *v = r.f32();
            f.map_half = r.u8();
            const std::size_t side = 2u * f.map_half + 1u;
            f.valid.resize(side * side);
            f.heights.resize(side * side);
            for (std::size_t i = 0; i < side * side; ++i) {
                f.valid[i] = r.flag() ? 1 : 0;
                f.heights[i] = r.f32();
            }
            f.visual_attention = get_categories(r);
            f.spatial = get_categories(r);
            return m;
        }
        case 7:
            return Bye{};
        default:
            throw Error(ErrorCode::UnknownMessageType, "frame type " + std::to_string(type));
    }
}

std::uint32_t read_le32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

float narrow(double v) {
    if (!std::isfinite(v) || std::abs(v) > std::numeric_limits<float>::max()) {
        throw Error(ErrorCode::Unrepresentable, "value does not fit a 32-bit float");
    }
    return static_cast<float>(v);
}

}  // namespace

std::uint8_t message_type(const Message& m) { return static_cast<std::uint8_t>(m.index() + 1); }

std::optional<std::uint32_t> message_tick(const Message& m) {
    return std::visit(
        [](const auto& msg) -> std::optional<std::uint32_t> {
            if constexpr (requires { msg.tick; }) {
                return msg.tick;
            } else {
                return std::nullopt;
            }
        },
        m);
}

std::string_view message_name(const Message& m) {
    static constexpr std::array<std::string_view, 7> kNames = {
        "Hello", "PoseUpdate", "StateChange", "TargetUpdate", "PlacementAnnounce", "FeaturePacket", "Bye"};
    return kNames[m.index()];
}

Bytes encode(const Message& m) {
    Writer payload;
    std::visit([&](const auto& msg) { put_payload(payload, msg); }, m);
    const Bytes body = payload.take();
    Writer frame;
    frame.u8(kMagic0);
    frame.u8(kMagic1);
    frame.u8(kProtocolVersion);
    frame.u8(message_type(m));
    frame.u32(static_cast<std::uint32_t>(body.size()));
    Bytes out = frame.take();
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

Decoded decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderSize) throw Error(ErrorCode::Truncated, "frame header incomplete");
    if (bytes[0] != kMagic0 || bytes[1] != kMagic1) throw Error(ErrorCode::BadMagic, "frame does not start with 'TD'");
    if (bytes[2] != kProtocolVersion) {
        throw Error(ErrorCode::UnsupportedVersion, "frame version " + std::to_string(bytes[2]));
    }
    const std::uint8_t type = bytes[3];
    const std::size_t length = read_le32(bytes.data() + 4);
    if (bytes.size() - kHeaderSize < length) throw Error(ErrorCode::Truncated, "frame payload incomplete");
    Reader r(bytes.subspan(kHeaderSize, length));
    Message m = read_payload(type, r);
    if (!r.done()) throw Error(ErrorCode::MalformedDocument, "trailing bytes after payload");
    return {std::move(m), kHeaderSize + length};
}

void FrameReader::feed(std::span<const std::uint8_t> bytes) {
    if (offset_ > 0 && offset_ == buffer_.size()) {
        buffer_.clear();
        offset_ = 0;
    }
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<Message> FrameReader::next() {
    const std::span<const std::uint8_t> rest(buffer_.data() + offset_, buffer_.size() - offset_);
    if (rest.size() < kHeaderSize) return std::nullopt;
    if (rest.size() - kHeaderSize < read_le32(rest.data() + 4)) {
        if (rest[0] != kMagic0 || rest[1] != kMagic1) throw Error(ErrorCode::BadMagic, "frame does not start with 'TD'");
        return std::nullopt;
    }
    Decoded d = decode(rest);
    offset_ += d.consumed;
    return std::move(d.message);
}

Vec3f to_wire(const Vec3& v) { return {narrow(v.x), narrow(v.y), narrow(v.z)}; }
Vec3 from_wire(const Vec3f& v) { return {v.x, v.y, v.z}; }

Transformf to_wire(const Transform& t) {
    const Quat& q = t.rotation;
    return {to_wire(t.position), {narrow(q.w), narrow(q.x), narrow(q.y), narrow(q.z)}};
}

Transform from_wire(const Transformf& t) {
    const Quatf& q = t.rotation;
    return {from_wire(t.position), Quat{q.w, q.x, q.y, q.z}.normalized()};
}

SkeletonWire to_wire(const Skeleton& s) {
    return {narrow(s.spine),        narrow(s.neck),          narrow(s.upper_arm),    narrow(s.forearm),
            narrow(s.hand),         narrow(s.thigh),         narrow(s.shin),         to_wire(s.left_shoulder),
            to_wire(s.right_shoulder), to_wire(s.left_hip), to_wire(s.right_hip)};
}

Skeleton from_wire(const SkeletonWire& s) {
    Skeleton out;
    out.spine = s.spine;
    out.neck = s.neck;
    out.upper_arm = s.upper_arm;
    out.forearm = s.forearm;
    out.hand = s.hand;
    out.thigh = s.thigh;
    out.shin = s.shin;
    out.left_shoulder = from_wire(s.left_shoulder);
    out.right_shoulder = from_wire(s.right_shoulder);
    out.left_hip = from_wire(s.left_hip);
    out.right_hip = from_wire(s.right_hip);
    return out;
}

FeaturesWire to_wire(const FeatureVector& f) {
    FeaturesWire w;
    if (f.interpersonal) {
        w.interpersonal = InterpersonalWire{narrow(f.interpersonal->offset.x), narrow(f.interpersonal->offset.z),
                                            narrow(f.interpersonal->facing)};
    }
    const HeightMap& m = f.pose_accommodation;
    if (m.half < 0 || m.half > 255) throw Error(ErrorCode::Unrepresentable, "height map wider than 511 cells");
    w.map_center_x = narrow(m.center.x);
    w.map_center_z = narrow(m.center.z);
    w.map_radius = narrow(m.radius);
    w.map_cell = narrow(m.cell_size);
    w.map_yaw = narrow(m.yaw);
    w.map_half = static_cast<std::uint8_t>(m.half);
    w.valid = m.valid;
    w.heights.reserve(m.heights.size());
    for (const double h : m.heights) w.heights.push_back(narrow(h));
    for (const auto& [cat, d] : f.visual_attention) w.visual_attention.push_back({cat, narrow(d)});
    for (const auto& [cat, d] : f.spatial) w.spatial.push_back({cat, narrow(d)});
    return w;
}

FeatureVector from_wire(const FeaturesWire& w) {
    FeatureVector f;
    if (w.interpersonal) {
        f.interpersonal = InterpersonalFeature{{w.interpersonal->offset_x, w.interpersonal->offset_z},
                                               w.interpersonal->facing};
    }
    HeightMap& m = f.pose_accommodation;
    m.center = {w.map_center_x, 0.0, w.map_center_z};
    m.radius = w.map_radius;
    m.cell_size = w.map_cell;
    m.yaw = w.map_yaw;
    m.half = w.map_half;
    m.valid = w.valid;
    m.heights.assign(w.heights.begin(), w.heights.end());
    for (const auto& e : w.visual_attention) f.visual_attention[e.category] = e.distance;
    for (const auto& e : w.spatial) f.spatial[e.category] = e.distance;
    return f;
}

HitWire to_wire(const NormalizedHit& h) { return {h.object_id, narrow(h.u), narrow(h.v), narrow(h.w)}; }
NormalizedHit from_wire(const HitWire& h) { return {h.object_id, h.u, h.v, h.w}; }

PlacementAnnounce to_wire(std::uint32_t tick, const Placement& p) {
    return {tick, narrow(p.x), narrow(p.z), narrow(p.yaw), p.pose};
}

Placement from_wire(const PlacementAnnounce& p) { return {p.x, p.z, wrap_two_pi(p.yaw), p.pose}; }

PoseUpdate pose_update(std::uint32_t tick, const UserSnapshot& s) {
    const Transform inv = s.root.inverse();
    PoseUpdate m;
    m.tick = tick;
    m.root = to_wire(s.root);
    m.effectors[kHead] = to_wire(inv * s.head);
    m.effectors[kLeftHand] = to_wire(inv * s.left_hand.pose);
    m.effectors[kRightHand] = to_wire(inv * s.right_hand.pose);
    m.effectors[kLeftFoot] = to_wire(inv * s.left_foot);
    m.effectors[kRightFoot] = to_wire(inv * s.right_foot);
    m.lifted = static_cast<std::uint8_t>((s.left_hand.lifted ? 1 : 0) | (s.right_hand.lifted ? 2 : 0));
    m.fingers = s.fingers;
    return m;
}

IkGoals goals_from_pose(const PoseUpdate& pose, double calibration) {
    auto goal = [&](std::size_t slot) {
        const Transform t = from_wire(pose.effectors[slot]);
        return EffectorGoal{t.position * calibration, t.rotation};
    };
    IkGoals g;
    g.root = from_wire(pose.root);
    g.head = goal(kHead);
    g.left_hand = goal(kLeftHand);
    g.right_hand = goal(kRightHand);
    g.left_foot = goal(kLeftFoot);
    g.right_foot = goal(kRightFoot);
    g.fingers = pose.fingers;
    return g;
}

UserSnapshot snapshot_from_pose(const PoseUpdate& pose) {
    const Transform root = from_wire(pose.root);
    UserSnapshot s;
    s.tick = pose.tick;
    s.root = root;
    s.head = root * from_wire(pose.effectors[kHead]);
    s.left_hand = {root * from_wire(pose.effectors[kLeftHand]), (pose.lifted & 1) != 0};
    s.right_hand = {root * from_wire(pose.effectors[kRightHand]), (pose.lifted & 2) != 0};
    s.left_foot = root * from_wire(pose.effectors[kLeftFoot]);
    s.right_foot = root * from_wire(pose.effectors[kRightFoot]);
    s.fingers = pose.fingers;
    return s;
}

}  // namespace telepresence::wire
