#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "telepresence/placement.hpp"
#include "telepresence/retarget.hpp"
#include "telepresence/state_machine.hpp"

namespace telepresence::wire {

inline constexpr std::uint8_t kMagic0 = 0x54;  // 'T'
inline constexpr std::uint8_t kMagic1 = 0x44;  // 'D'
inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kHeaderSize = 8;  // magic(2) version(1) type(1) length(4)

using Bytes = std::vector<std::uint8_t>;

struct Vec3f {
    float x = 0, y = 0, z = 0;
    friend bool operator==(const Vec3f&, const Vec3f&) = default;
};

struct Quatf {
    float w = 1, x = 0, y = 0, z = 0;
    friend bool operator==(const Quatf&, const Quatf&) = default;
};

struct Transformf {
    Vec3f position;
    Quatf rotation;
    friend bool operator==(const Transformf&, const Transformf&) = default;
};

struct SkeletonWire {
    float spine = 0, neck = 0, upper_arm = 0, forearm = 0, hand = 0, thigh = 0, shin = 0;
    Vec3f left_shoulder, right_shoulder, left_hip, right_hip;
    friend bool operator==(const SkeletonWire&, const SkeletonWire&) = default;
};

struct HitWire {
    std::string object_id;
    float u = 0, v = 0, w = 0;
    friend bool operator==(const HitWire&, const HitWire&) = default;
};

struct InterpersonalWire {
    float offset_x = 0, offset_z = 0, facing = 0;
    friend bool operator==(const InterpersonalWire&, const InterpersonalWire&) = default;
};

struct CategoryDistance {
    ObjectCategory category = ObjectCategory::Other;
    float distance = 0;
    friend bool operator==(const CategoryDistance&, const CategoryDistance&) = default;
};

struct FeaturesWire {
    std::optional<InterpersonalWire> interpersonal;
    float map_center_x = 0, map_center_z = 0, map_radius = 0, map_cell = 0, map_yaw = 0;
    std::uint8_t map_half = 0;
    std::vector<std::uint8_t> valid;  // (2 * half + 1)^2 entries
    std::vector<float> heights;       // same count
    std::vector<CategoryDistance> visual_attention;
    std::vector<CategoryDistance> spatial;
    friend bool operator==(const FeaturesWire&, const FeaturesWire&) = default;
};

struct Hello {
    std::uint16_t version = kProtocolVersion;
    std::uint64_t room_hash = 0;
    SkeletonWire skeleton;
    friend bool operator==(const Hello&, const Hello&) = default;
};

enum EffectorSlot : std::size_t { kHead = 0, kLeftHand, kRightHand, kLeftFoot, kRightFoot, kEffectorSlots };

struct PoseUpdate {
    std::uint32_t tick = 0;
    Transformf root;                                   // world
    std::array<Transformf, kEffectorSlots> effectors;  // root-relative
    std::uint8_t lifted = 0;                           // bit 0 left hand, bit 1 right hand
    std::vector<float> fingers;
    friend bool operator==(const PoseUpdate&, const PoseUpdate&) = default;
};

struct StateChange {
    std::uint32_t tick = 0;
    UserState state = UserState::Solo;
    friend bool operator==(const StateChange&, const StateChange&) = default;
};

/// Target of one effector, expressed on the receiver's paired object. Empty `hit` clears it.
struct TargetUpdate {
    std::uint32_t tick = 0;
    Effector effector = Effector::Head;
    std::optional<HitWire> hit;
    friend bool operator==(const TargetUpdate&, const TargetUpdate&) = default;
};

struct PlacementAnnounce {
    std::uint32_t tick = 0;
    float x = 0, z = 0, yaw = 0;
    Pose pose = Pose::Standing;
    friend bool operator==(const PlacementAnnounce&, const PlacementAnnounce&) = default;
};

struct FeaturePacket {
    std::uint32_t tick = 0;
    FeaturesWire features;
    friend bool operator==(const FeaturePacket&, const FeaturePacket&) = default;
};

struct Bye {
    friend bool operator==(const Bye&, const Bye&) = default;
};

using Message = std::variant<Hello, PoseUpdate, StateChange, TargetUpdate, PlacementAnnounce, FeaturePacket, Bye>;

/// Frame type byte: variant index + 1.
std::uint8_t message_type(const Message& m);
/// Sender tick carried by the message, if it has one.
std::optional<std::uint32_t> message_tick(const Message& m);
std::string_view message_name(const Message& m);

Bytes encode(const Message& m);

struct Decoded {
    Message message;
    std::size_t consumed = 0;
};

/// Decodes the frame at the start of `bytes`. Throws Truncated when the frame is incomplete.
Decoded decode(std::span<const std::uint8_t> bytes);

/// Accumulates a byte stream and yields complete frames.
class FrameReader {
public:
    void feed(std::span<const std::uint8_t> bytes);
    /// Next complete message, or empty when more bytes are needed.
    std::optional<Message> next();
    std::size_t buffered() const { return buffer_.size() - offset_; }

private:
    Bytes buffer_;
    std::size_t offset_ = 0;
};

// Conversions between domain types and their wire forms.
Vec3f to_wire(const Vec3& v);
Vec3 from_wire(const Vec3f& v);
Transformf to_wire(const Transform& t);
Transform from_wire(const Transformf& t);
SkeletonWire to_wire(const Skeleton& s);
Skeleton from_wire(const SkeletonWire& s);
FeaturesWire to_wire(const FeatureVector& f);
FeatureVector from_wire(const FeaturesWire& f);
HitWire to_wire(const NormalizedHit& h);
NormalizedHit from_wire(const HitWire& h);
PlacementAnnounce to_wire(std::uint32_t tick, const Placement& p);
Placement from_wire(const PlacementAnnounce& p);

PoseUpdate pose_update(std::uint32_t tick, const UserSnapshot& snapshot);
/// Root-relative goals for the avatar, scaled by `calibration`.
IkGoals goals_from_pose(const PoseUpdate& pose, double calibration = 1.0);
/// World-space snapshot reconstructed from a pose update (tick set to the message tick).
UserSnapshot snapshot_from_pose(const PoseUpdate& pose);

}  // namespace telepresence::wire
