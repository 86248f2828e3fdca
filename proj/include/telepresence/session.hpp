#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "telepresence/error.hpp"
#include "telepresence/protocol.hpp"

namespace telepresence {

enum class SessionPhase : std::uint8_t { Handshake, Live, Closed };

std::string_view to_string(SessionPhase phase);

/// What the local peer wants to publish this tick. State and targets are diffed against what was
/// last sent; placements and feature packets are queued until the session is live.
struct OutgoingTick {
    std::uint32_t tick = 0;
    wire::PoseUpdate pose;
    UserState state = UserState::Solo;
    std::array<std::optional<wire::HitWire>, 3> targets;  // indexed by Effector
    std::vector<Placement> placements;
    std::vector<FeatureVector> features;
    bool bye = false;
};

struct SessionTickResult {
    std::vector<wire::Bytes> frames;      // encoded, in send order
    std::vector<wire::Message> remote;    // validated incoming messages
};

/// One side of the two-peer link over a reliable, ordered byte transport.
class Session {
public:
    explicit Session(wire::Hello local_hello);

    SessionTickResult tick(const OutgoingTick& out, std::span<const std::uint8_t> incoming);

    SessionPhase phase() const { return phase_; }
    std::optional<ErrorCode> close_reason() const { return close_reason_; }
    std::optional<std::uint32_t> last_remote_tick() const { return last_remote_tick_; }
    const std::optional<wire::Hello>& peer_hello() const { return peer_hello_; }

private:
    void close(std::optional<ErrorCode> reason);
    void receive(std::span<const std::uint8_t> incoming, std::vector<wire::Message>& remote);

    wire::Hello local_hello_;
    SessionPhase phase_ = SessionPhase::Handshake;
    std::optional<ErrorCode> close_reason_;
    bool hello_sent_ = false;
    std::optional<wire::Hello> peer_hello_;
    std::optional<std::uint32_t> last_remote_tick_;
    std::optional<std::uint32_t> last_sent_tick_;
    std::optional<UserState> sent_state_;
    std::array<std::optional<wire::HitWire>, 3> sent_targets_;
    std::vector<Placement> pending_placements_;
    std::vector<FeatureVector> pending_features_;
    wire::FrameReader reader_;
};

/// Concatenates frames into one transport write.
wire::Bytes join_frames(const std::vector<wire::Bytes>& frames);

}  // namespace telepresence
