#include "telepresence/session.hpp"

namespace telepresence {

std::string_view to_string(SessionPhase phase) {
    switch (phase) {
        case SessionPhase::Handshake: return "Handshake";
        case SessionPhase::Live: return "Live";
        case SessionPhase::Closed: return "Closed";
    }
    return "?";
}

Session::Session(wire::Hello local_hello) : local_hello_(std::move(local_hello)) {}

void Session::close(std::optional<ErrorCode> reason) {
    phase_ = SessionPhase::Closed;
    close_reason_ = reason;
}

void Session::receive(std::span<const std::uint8_t> incoming, std::vector<wire::Message>& remote) {
    try {
        reader_.feed(incoming);
        while (phase_ != SessionPhase::Closed) {
            auto msg = reader_.next();
            if (!msg) break;
            if (const auto* hello = std::get_if<wire::Hello>(&*msg)) {
                if (peer_hello_) {
                    close(ErrorCode::DuplicateHello);
                    break;
                }
                if (hello->version != wire::kProtocolVersion) {
                    close(ErrorCode::UnsupportedVersion);
                    break;
                }
                peer_hello_ = *hello;
                remote.push_back(std::move(*msg));
                continue;
            }
            if (!peer_hello_) {
                close(ErrorCode::MessageBeforeHello);
                break;
            }
            if (const auto t = wire::message_tick(*msg)) {
                if (last_remote_tick_ && *t < *last_remote_tick_) {
                    close(ErrorCode::TickRegression);
                    break;
                }
                last_remote_tick_ = *t;
            }
            const bool bye = std::holds_alternative<wire::Bye>(*msg);
            remote.push_back(std::move(*msg));
            if (bye) close(std::nullopt);
        }
    } catch (const Error& e) {
        close(e.code());
    }
}

SessionTickResult Session::tick(const OutgoingTick& out, std::span<const std::uint8_t> incoming) {
    SessionTickResult result;
    if (phase_ == SessionPhase::Closed) return result;
    if (last_sent_tick_ && out.tick <= *last_sent_tick_) {
        throw Error(ErrorCode::TickRegression, "local ticks must strictly increase");
    }
    last_sent_tick_ = out.tick;

    receive(incoming, result.remote);
    if (phase_ == SessionPhase::Closed) return result;

    if (!hello_sent_) {
        result.frames.push_back(wire::encode(local_hello_));
        hello_sent_ = true;
    }
    pending_placements_.insert(pending_placements_.end(), out.placements.begin(), out.placements.end());
    pending_features_.insert(pending_features_.end(), out.features.begin(), out.features.end());
    if (peer_hello_) phase_ = SessionPhase::Live;

    if (phase_ == SessionPhase::Live) {
        wire::PoseUpdate pose = out.pose;
        pose.tick = out.tick;
        result.frames.push_back(wire::encode(pose));
        if (!sent_state_ || *sent_state_ != out.state) {
            result.frames.push_back(wire::encode(wire::StateChange{out.tick, out.state}));
            sent_state_ = out.state;
        }
        for (std::size_t e = 0; e < out.targets.size(); ++e) {
            if (out.targets[e] == sent_targets_[e]) continue;
            result.frames.push_back(wire::encode(wire::TargetUpdate{out.tick, static_cast<Effector>(e), out.targets[e]}));
            sent_targets_[e] = out.targets[e];
        }
        for (const auto& p : pending_placements_) result.frames.push_back(wire::encode(wire::to_wire(out.tick, p)));
        for (const auto& f : pending_features_) {
            result.frames.push_back(wire::encode(wire::FeaturePacket{out.tick, wire::to_wire(f)}));
        }
        pending_placements_.clear();
        pending_features_.clear();
    }
    if (out.bye) {
        result.frames.push_back(wire::encode(wire::Bye{}));
        close(std::nullopt);
    }
    return result;
}

wire::Bytes join_frames(const std::vector<wire::Bytes>& frames) {
    wire::Bytes out;
    for (const auto& f : frames) out.insert(out.end(), f.begin(), f.end());
    return out;
}

}  // namespace telepresence
