#include "telepresence/trace.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "telepresence/error.hpp"

namespace telepresence {

using nlohmann::json;

namespace {

json transform_json(const Transform& t) {
    const Vec3& p = t.position;
    const Quat& q = t.rotation;
    return json::array({p.x, p.y, p.z, q.w, q.x, q.y, q.z});
}

Transform parse_transform(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != 7) {
        throw Error(ErrorCode::MalformedDocument, std::string("snapshot field '") + key + "' needs 7 numbers");
    }
    std::array<double, 7> v{};
    for (std::size_t i = 0; i < 7; ++i) {
        if (!j.at(key)[i].is_number()) throw Error(ErrorCode::MalformedDocument, "non-numeric transform entry");
        v[i] = j.at(key)[i].get<double>();
    }
    Transform t{{v[0], v[1], v[2]}, Quat{v[3], v[4], v[5], v[6]}};
    if (!t.position.finite() || !t.rotation.is_unit()) {
        throw Error(ErrorCode::MalformedDocument, std::string("snapshot field '") + key + "' is not a unit rotation");
    }
    return t;
}

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 parse_vec(const json& j, const char* key, const Vec3& fallback) {
    if (!j.contains(key)) return fallback;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 3) throw Error(ErrorCode::MalformedDocument, "skeleton offsets need 3 numbers");
    return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

json skeleton_json(const Skeleton& s) {
    return {{"spine", s.spine},       {"neck", s.neck},
            {"upper_arm", s.upper_arm}, {"forearm", s.forearm},
            {"hand", s.hand},         {"thigh", s.thigh},
            {"shin", s.shin},         {"left_shoulder", vec_json(s.left_shoulder)},
            {"right_shoulder", vec_json(s.right_shoulder)}, {"left_hip", vec_json(s.left_hip)},
            {"right_hip", vec_json(s.right_hip)}};
}

Skeleton parse_skeleton(const json& j) {
    Skeleton s;
    s.spine = j.value("spine", s.spine);
    s.neck = j.value("neck", s.neck);
    s.upper_arm = j.value("upper_arm", s.upper_arm);
    s.forearm = j.value("forearm", s.forearm);
    s.hand = j.value("hand", s.hand);
    s.thigh = j.value("thigh", s.thigh);
    s.shin = j.value("shin", s.shin);
    s.left_shoulder = parse_vec(j, "left_shoulder", s.left_shoulder);
    s.right_shoulder = parse_vec(j, "right_shoulder", s.right_shoulder);
    s.left_hip = parse_vec(j, "left_hip", s.left_hip);
    s.right_hip = parse_vec(j, "right_hip", s.right_hip);
    s.validate();
    return s;
}

}  // namespace

MotionTrace load_trace(std::string_view jsonl) {
    MotionTrace trace;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    bool header = true;
    StateMachineConfig lift_cfg;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::MalformedDocument, e.what());
        }
        if (header) {
            if (!j.contains("tick_rate") || !j.at("tick_rate").is_number() || !(j.at("tick_rate").get<double>() > 0)) {
                throw Error(ErrorCode::MalformedDocument, "trace header needs a positive tick_rate");
            }
            trace.tick_rate = j.at("tick_rate").get<double>();
            if (j.contains("skeleton")) trace.skeleton = parse_skeleton(j.at("skeleton"));
            header = false;
            continue;
        }
        UserSnapshot s;
        if (!j.contains("tick") || !j.at("tick").is_number_integer()) {
            throw Error(ErrorCode::MalformedDocument, "snapshot without an integer tick");
        }
        s.tick = j.at("tick").get<std::int64_t>();
        if (!trace.snapshots.empty() && s.tick != trace.snapshots.back().tick + 1) {
            throw Error(ErrorCode::MalformedDocument, "trace ticks must be dense and increasing");
        }
        s.root = parse_transform(j, "root");
        s.head = parse_transform(j, "head");
        s.left_hand.pose = parse_transform(j, "left_hand");
        s.right_hand.pose = parse_transform(j, "right_hand");
        s.left_foot = parse_transform(j, "left_foot");
        s.right_foot = parse_transform(j, "right_foot");
        s.left_hand.lifted = j.contains("left_lifted") ? j.at("left_lifted").get<bool>()
                                                       : hand_lifted(s.root, s.left_hand.pose, lift_cfg);
        s.right_hand.lifted = j.contains("right_lifted") ? j.at("right_lifted").get<bool>()
                                                         : hand_lifted(s.root, s.right_hand.pose, lift_cfg);
        if (j.contains("fingers")) s.fingers = j.at("fingers").get<std::vector<float>>();
        trace.snapshots.push_back(std::move(s));
    }
    if (header) throw Error(ErrorCode::MalformedDocument, "trace is empty");
    return trace;
}

MotionTrace load_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::FileError, "cannot open trace file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_trace(ss.str());
}

std::string trace_to_jsonl(const MotionTrace& trace) {
    std::string out = json{{"tick_rate", trace.tick_rate}, {"skeleton", skeleton_json(trace.skeleton)}}.dump();
    out += '\n';
    for (const auto& s : trace.snapshots) {
        json j;
        j["tick"] = s.tick;
        j["root"] = transform_json(s.root);
        j["head"] = transform_json(s.head);
        j["left_hand"] = transform_json(s.left_hand.pose);
        j["right_hand"] = transform_json(s.right_hand.pose);
        j["left_foot"] = transform_json(s.left_foot);
        j["right_foot"] = transform_json(s.right_foot);
        j["left_lifted"] = s.left_hand.lifted;
        j["right_lifted"] = s.right_hand.lifted;
        j["fingers"] = s.fingers;
        out += j.dump();
        out += '\n';
    }
    return out;
}

void save_trace_file(const MotionTrace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::FileError, "cannot write trace file " + path);
    out << trace_to_jsonl(trace);
}

}  // namespace telepresence
