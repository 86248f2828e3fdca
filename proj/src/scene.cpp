#include "telepresence/scene.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "telepresence/error.hpp"

namespace telepresence {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kCategoryCount> kCategoryNames = {
    "Chair", "Sofa", "Table", "Screen", "Wall", "Floor", "Other"};

constexpr double kContainTolerance = 1e-4;

double read_number(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw Error(ErrorCode::MalformedDocument, std::string("missing numeric field '") + key + "'");
    }
    const double v = j.at(key).get<double>();
    if (!std::isfinite(v)) throw Error(ErrorCode::MalformedDocument, std::string("non-finite '") + key + "'");
    return v;
}

template <std::size_t N>
std::array<double, N> read_array(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != N) {
        throw Error(ErrorCode::MalformedDocument,
                    std::string("field '") + key + "' must be an array of " + std::to_string(N));
    }
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        const auto& e = j.at(key)[i];
        if (!e.is_number() || !std::isfinite(e.get<double>())) {
            throw Error(ErrorCode::MalformedDocument, std::string("non-numeric entry in '") + key + "'");
        }
        out[i] = e.get<double>();
    }
    return out;
}

SceneObject parse_object(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::MalformedDocument, "object entry is not a JSON object");
    SceneObject o;
    if (!j.contains("id") || !j.at("id").is_string() || j.at("id").get<std::string>().empty()) {
        throw Error(ErrorCode::MalformedDocument, "object without a string id");
    }
    o.id = j.at("id").get<std::string>();
    if (!j.contains("category") || !j.at("category").is_string()) {
        throw Error(ErrorCode::MalformedDocument, "object '" + o.id + "' has no category");
    }
    const auto cat = parse_category(j.at("category").get<std::string>());
    if (!cat) throw Error(ErrorCode::MalformedDocument, "object '" + o.id + "' has unknown category");
    o.category = *cat;

    const auto pos = read_array<3>(j, "position");
    o.position = {pos[0], pos[1], pos[2]};
    o.yaw = j.contains("yaw") ? read_number(j, "yaw") : 0.0;
    const auto size = read_array<3>(j, "size");
    o.size = {size[0], size[1], size[2]};
    if (o.size.x <= 0.0 || o.size.y <= 0.0 || o.size.z <= 0.0) {
        throw Error(ErrorCode::NonPositiveExtent, "object '" + o.id + "' has a nonpositive size");
    }
    o.sittable = j.value("sittable", false);
    if (o.sittable) {
        o.sit_height = read_number(j, "sit_height");
        if (o.sit_height < 0.2 || o.sit_height > 0.8) {
            throw Error(ErrorCode::InvalidSitHeight, "object '" + o.id + "' sit_height outside [0.2, 0.8]");
        }
    }
    if (j.contains("pair_id") && !j.at("pair_id").is_null()) {
        if (!j.at("pair_id").is_string()) throw Error(ErrorCode::MalformedDocument, "pair_id must be a string");
        o.pair_id = j.at("pair_id").get<std::string>();
    }
    return o;
}

json object_to_json(const SceneObject& o) {
    json j;
    j["id"] = o.id;
    j["category"] = std::string(to_string(o.category));
    j["position"] = {o.position.x, o.position.y, o.position.z};
    j["yaw"] = o.yaw;
    j["size"] = {o.size.x, o.size.y, o.size.z};
    j["sittable"] = o.sittable;
    if (o.sittable) j["sit_height"] = o.sit_height;
    if (o.pair_id) j["pair_id"] = *o.pair_id;
    return j;
}

bool footprint_inside(const SceneObject& o, const Extents2& e) {
    for (const double sx : {-0.5, 0.5}) {
        for (const double sz : {-0.5, 0.5}) {
            const Vec3 corner = o.to_world({sx * o.size.x, 0.0, sz * o.size.z});
            if (!e.contains(corner.x, corner.z, 1e-6)) return false;
        }
    }
    return true;
}

}  // namespace

std::string_view to_string(ObjectCategory category) {
    return kCategoryNames[static_cast<std::size_t>(category)];
}

std::optional<ObjectCategory> parse_category(std::string_view name) {
    for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
        if (kCategoryNames[i] == name) return static_cast<ObjectCategory>(i);
    }
    return std::nullopt;
}

Vec3 SceneObject::to_local(const Vec3& world) const {
    return Quat::from_yaw(-yaw).rotate(world - position);
}

Vec3 SceneObject::to_world(const Vec3& local) const {
    return position + Quat::from_yaw(yaw).rotate(local);
}

double SceneObject::top_height() const {
    return sittable ? sit_height : position.y + 0.5 * size.y;
}

bool SceneObject::footprint_contains(double x, double z, double margin) const {
    const Vec2 local = rotate_yaw({x - position.x, z - position.z}, -yaw);
    return std::abs(local.x) <= 0.5 * size.x + margin && std::abs(local.z) <= 0.5 * size.z + margin;
}

const SceneObject* Room::find(std::string_view object_id) const {
    for (const auto& o : objects) {
        if (o.id == object_id) return &o;
    }
    return nullptr;
}

Ray Ray::through(const Vec3& origin, const Vec3& direction) {
    const double n = direction.norm();
    if (!(n > 1e-12) || !origin.finite() || !direction.finite()) {
        throw Error(ErrorCode::DegenerateTarget, "ray direction must be finite and nonzero");
    }
    return {origin, direction / n};
}

Vec2 HeightMap::cell_center(int i, int j) const {
    const Vec2 local{(i - half) * cell_size, (j - half) * cell_size};
    const Vec2 world = rotate_yaw(local, yaw);
    return {center.x + world.x, center.z + world.z};
}

Room load_room(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedDocument, e.what());
    }
    if (!doc.is_object()) throw Error(ErrorCode::MalformedDocument, "room document must be an object");

    Room room;
    if (!doc.contains("id") || !doc.at("id").is_string()) {
        throw Error(ErrorCode::MalformedDocument, "room without a string id");
    }
    room.id = doc.at("id").get<std::string>();
    if (!doc.contains("extents") || !doc.at("extents").is_object()) {
        throw Error(ErrorCode::MalformedDocument, "room without extents");
    }
    const auto mn = read_array<2>(doc.at("extents"), "min");
    const auto mx = read_array<2>(doc.at("extents"), "max");
    room.extents = {{mn[0], mn[1]}, {mx[0], mx[1]}};
    if (room.extents.width() <= 0.0 || room.extents.depth() <= 0.0) {
        throw Error(ErrorCode::NonPositiveExtent, "room extents must have positive area");
    }

    if (doc.contains("objects")) {
        if (!doc.at("objects").is_array()) throw Error(ErrorCode::MalformedDocument, "objects must be an array");
        std::set<std::string> ids;
        for (const auto& entry : doc.at("objects")) {
            SceneObject o = parse_object(entry);
            if (!ids.insert(o.id).second) {
                throw Error(ErrorCode::DuplicateId, "object id '" + o.id + "' appears twice");
            }
            if (!footprint_inside(o, room.extents)) {
                throw Error(ErrorCode::ObjectOutsideRoom, "object '" + o.id + "' extends past the room");
            }
            room.objects.push_back(std::move(o));
        }
    }
    return room;
}

Room load_room_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::FileError, "cannot open room file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_room(ss.str());
}

std::string room_to_json(const Room& room) {
    json j;
    j["id"] = room.id;
    j["extents"] = {{"min", {room.extents.min.x, room.extents.min.z}},
                    {"max", {room.extents.max.x, room.extents.max.z}}};
    j["objects"] = json::array();
    for (const auto& o : room.objects) j["objects"].push_back(object_to_json(o));
    return j.dump(2);
}

void validate_pairing(const Room& a, const Room& b) {
    auto check = [](const Room& from, const Room& to) {
        for (const auto& o : from.objects) {
            if (!o.pair_id) continue;
            const SceneObject* other = to.find(*o.pair_id);
            if (!other) {
                throw Error(ErrorCode::UnresolvedPair,
                            "'" + o.id + "' pairs with missing object '" + *o.pair_id + "'");
            }
            if (other->category != o.category) {
                throw Error(ErrorCode::UnresolvedPair,
                            "'" + o.id + "' pairs with '" + other->id + "' of another category");
            }
        }
    };
    check(a, b);
    check(b, a);
}

std::uint64_t room_hash(const Room& room) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const unsigned char c : room_to_json(room)) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

Room with_partner_head(const Room& room, const Vec3& head) {
    Room out = room;
    SceneObject o;
    o.id = std::string(kPartnerHeadId);
    o.category = ObjectCategory::Other;
    o.position = head;
    o.size = {kPartnerHeadSize, kPartnerHeadSize, kPartnerHeadSize};
    o.pair_id = std::string(kPartnerHeadId);
    out.objects.push_back(std::move(o));
    return out;
}

std::optional<double> intersect(const SceneObject& object, const Ray& ray) {
    const Quat inv = Quat::from_yaw(-object.yaw);
    const Vec3 o = inv.rotate(ray.origin - object.position);
    const Vec3 d = inv.rotate(ray.direction);
    const std::array<double, 3> origin{o.x, o.y, o.z};
    const std::array<double, 3> dir{d.x, d.y, d.z};
    const std::array<double, 3> half{0.5 * object.size.x, 0.5 * object.size.y, 0.5 * object.size.z};

    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        if (std::abs(dir[i]) < 1e-15) {
            if (origin[i] < -half[i] || origin[i] > half[i]) return std::nullopt;
            continue;
        }
        double t1 = (-half[i] - origin[i]) / dir[i];
        double t2 = (half[i] - origin[i]) / dir[i];
        if (t1 > t2) std::swap(t1, t2);
        t_near = std::max(t_near, t1);
        t_far = std::min(t_far, t2);
    }
    if (t_far < t_near || t_far < 0.0) return std::nullopt;
    return t_near >= 0.0 ? t_near : t_far;
}

std::optional<RayHit> raycast(const Room& room, const Ray& ray) {
    std::optional<RayHit> best;
    for (const auto& object : room.objects) {
        const auto t = intersect(object, ray);
        if (!t) continue;
        if (!best || *t < best->distance || (*t == best->distance && object.id < best->object_id)) {
            best = RayHit{object.id, ray.origin + ray.direction * *t, *t};
        }
    }
    return best;
}

NormalizedHit normalize_hit(const SceneObject& object, const Vec3& world_point) {
    const Vec3 local = object.to_local(world_point);
    const Vec3 half = object.size * 0.5;
    if (std::abs(local.x) > half.x + kContainTolerance || std::abs(local.y) > half.y + kContainTolerance ||
        std::abs(local.z) > half.z + kContainTolerance) {
        throw Error(ErrorCode::PointOutsideBox, "point is not inside object '" + object.id + "'");
    }
    auto unit = [](double offset, double extent) { return std::clamp(offset / extent, 0.0, 1.0); };
    return {object.id, unit(local.x + half.x, object.size.x), unit(local.y + half.y, object.size.y),
            unit(local.z + half.z, object.size.z)};
}

Vec3 denormalize_hit(const SceneObject& object, const NormalizedHit& hit) {
    for (const double c : {hit.u, hit.v, hit.w}) {
        if (!(c >= 0.0 && c <= 1.0)) {
            throw Error(ErrorCode::OutOfRange, "normalized coordinate outside [0, 1]");
        }
    }
    const Vec3 local{(hit.u - 0.5) * object.size.x, (hit.v - 0.5) * object.size.y,
                     (hit.w - 0.5) * object.size.z};
    return object.to_world(local);
}

namespace {

void sort_by_distance(std::vector<ObjectDistance>& out) {
    std::sort(out.begin(), out.end(), [](const ObjectDistance& a, const ObjectDistance& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.object_id < b.object_id;
    });
}

}  // namespace

std::vector<ObjectDistance> objects_in_fov(const Room& room, const Vec3& eye, const Vec3& forward,
                                           double half_angle, Projection projection) {
    std::vector<ObjectDistance> out;
    Vec3 axis = forward;
    if (projection == Projection::Horizontal) axis.y = 0.0;
    axis = axis.normalized();
    for (const auto& object : room.objects) {
        Vec3 v = object.position - eye;
        if (projection == Projection::Horizontal) v.y = 0.0;
        const double d = v.norm();
        if (d > 1e-12 && angle_between(v, axis) > half_angle + 1e-12) continue;
        out.push_back({object.id, object.category, d});
    }
    sort_by_distance(out);
    return out;
}

std::vector<ObjectDistance> objects_in_radius(const Room& room, const Vec3& center, double radius) {
    std::vector<ObjectDistance> out;
    for (const auto& object : room.objects) {
        const double d = std::hypot(object.position.x - center.x, object.position.z - center.z);
        if (d <= radius + 1e-12) out.push_back({object.id, object.category, d});
    }
    sort_by_distance(out);
    return out;
}

double surface_height(const Room& room, double x, double z) {
    double h = 0.0;
    for (const auto& object : room.objects) {
        if (object.footprint_contains(x, z)) h = std::max(h, object.top_height());
    }
    return h;
}

HeightMap height_map(const Room& room, const Vec3& center, double radius, double cell_size, double yaw) {
    HeightMap map;
    map.center = center;
    map.radius = radius;
    map.cell_size = cell_size;
    map.yaw = yaw;
    map.half = static_cast<int>(std::ceil(radius / cell_size - 1e-9));
    const int side = map.side();
    map.heights.assign(static_cast<std::size_t>(side * side), 0.0);
    map.valid.assign(static_cast<std::size_t>(side * side), 0);
    for (int j = 0; j < side; ++j) {
        for (int i = 0; i < side; ++i) {
            const double r = std::hypot((i - map.half) * cell_size, (j - map.half) * cell_size);
            if (r > radius + 1e-9) continue;
            const Vec2 c = map.cell_center(i, j);
            map.valid[map.index(i, j)] = 1;
            map.heights[map.index(i, j)] = surface_height(room, c.x, c.z);
        }
    }
    return map;
}

}  // namespace telepresence
