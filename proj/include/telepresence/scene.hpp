#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "telepresence/geometry.hpp"

namespace telepresence {

enum class ObjectCategory : std::uint8_t { Chair, Sofa, Table, Screen, Wall, Floor, Other };

inline constexpr int kCategoryCount = 7;

std::string_view to_string(ObjectCategory category);
std::optional<ObjectCategory> parse_category(std::string_view name);

/// Labeled oriented box. Rotation is yaw-only about the box center.
struct SceneObject {
    std::string id;
    ObjectCategory category = ObjectCategory::Other;
    Vec3 position;  // box center
    double yaw = 0.0;
    Vec3 size{1.0, 1.0, 1.0};  // full extents
    bool sittable = false;
    double sit_height = 0.0;
    std::optional<std::string> pair_id;

    Vec3 to_local(const Vec3& world) const;
    Vec3 to_world(const Vec3& local) const;

    /// Highest walkable/sittable surface: the seat for sittable objects, the box top otherwise.
    double top_height() const;

    /// True when (x, z) lies inside the box footprint, with `margin` meters of slack.
    bool footprint_contains(double x, double z, double margin = 0.0) const;
};

struct Extents2 {
    Vec2 min;
    Vec2 max;

    double width() const { return max.x - min.x; }
    double depth() const { return max.z - min.z; }
    bool contains(double x, double z, double tol = 1e-9) const {
        return x >= min.x - tol && x <= max.x + tol && z >= min.z - tol && z <= max.z + tol;
    }
};

struct Room {
    std::string id;
    Extents2 extents;
    std::vector<SceneObject> objects;

    const SceneObject* find(std::string_view object_id) const;
};

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit

    /// Normalizes `direction`; throws DegenerateTarget for a zero vector.
    static Ray through(const Vec3& origin, const Vec3& direction);
};

struct RayHit {
    std::string object_id;
    Vec3 world_point;
    double distance = 0.0;
};

struct NormalizedHit {
    std::string object_id;
    double u = 0.5;
    double v = 0.5;
    double w = 0.5;

    friend bool operator==(const NormalizedHit&, const NormalizedHit&) = default;
};

/// Max surface height sampled on a square grid clipped to a disc. The grid axes follow `yaw`.
struct HeightMap {
    Vec3 center;
    double radius = 0.0;
    double cell_size = 0.0;
    double yaw = 0.0;
    int half = 0;  // cells per side = 2 * half + 1
    std::vector<double> heights;
    std::vector<std::uint8_t> valid;

    int side() const { return 2 * half + 1; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j * side() + i); }
    /// World-space (x, z) of cell (i, j).
    Vec2 cell_center(int i, int j) const;
};

inline constexpr double kDefaultHeightCell = 0.1;

/// Reserved id for the partner avatar's head when it is inserted as an interaction candidate.
inline constexpr std::string_view kPartnerHeadId = "@partner";
inline constexpr double kPartnerHeadSize = 0.25;

Room load_room(std::string_view json_text);
Room load_room_file(const std::string& path);
std::string room_to_json(const Room& room);

/// Checks every pair_id in `a` names an object of the same category in `b`, and vice versa.
void validate_pairing(const Room& a, const Room& b);

/// Stable 64-bit content hash (FNV-1a over the canonical JSON form).
std::uint64_t room_hash(const Room& room);

/// Copy of `room` with a small box at `head` standing for the partner avatar's head.
Room with_partner_head(const Room& room, const Vec3& head);

/// Distance along the ray to the first surface of `object`, if any.
std::optional<double> intersect(const SceneObject& object, const Ray& ray);

std::optional<RayHit> raycast(const Room& room, const Ray& ray);

NormalizedHit normalize_hit(const SceneObject& object, const Vec3& world_point);
Vec3 denormalize_hit(const SceneObject& object, const NormalizedHit& hit);

struct ObjectDistance {
    std::string object_id;
    ObjectCategory category = ObjectCategory::Other;
    double distance = 0.0;
};

enum class Projection {
    Volume,      // full 3D cone and distances
    Horizontal,  // heights ignored
};

std::vector<ObjectDistance> objects_in_fov(const Room& room, const Vec3& eye, const Vec3& forward,
                                           double half_angle,
                                           Projection projection = Projection::Volume);

std::vector<ObjectDistance> objects_in_radius(const Room& room, const Vec3& center, double radius);

/// Max top-surface height over objects whose footprint contains (x, z); 0 for bare floor.
double surface_height(const Room& room, double x, double z);

HeightMap height_map(const Room& room, const Vec3& center, double radius,
                     double cell_size = kDefaultHeightCell, double yaw = 0.0);

}  // namespace telepresence
