#pragma once

#include <cmath>
#include <numbers>

namespace telepresence {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

struct Vec2 {
    double x = 0.0;
    double z = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
    double norm() const { return std::hypot(x, z); }
};

/// Position or direction in meters, y is up.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Vec3&, const Vec3&) = default;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    double horizontal_norm() const { return std::hypot(x, z); }
    Vec3 normalized() const {
        const double n = norm();
        return n > 0.0 ? *this / n : Vec3{};
    }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline constexpr Vec3 kUp{0.0, 1.0, 0.0};
inline constexpr Vec3 kForward{0.0, 0.0, 1.0};

/// Angle between two nonzero vectors, radians in [0, pi].
inline double angle_between(const Vec3& a, const Vec3& b) {
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

/// Unit quaternion (w, x, y, z).
struct Quat {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Quat&, const Quat&) = default;

    static Quat identity() { return {}; }

    static Quat from_axis_angle(const Vec3& axis, double angle) {
        const Vec3 a = axis.normalized();
        const double s = std::sin(angle * 0.5);
        return {std::cos(angle * 0.5), a.x * s, a.y * s, a.z * s};
    }

    /// Rotation about +y; yaw 0 faces +z, yaw pi/2 faces +x.
    static Quat from_yaw(double yaw) { return from_axis_angle(kUp, yaw); }

    /// Shortest-arc rotation taking unit vector `from` onto unit vector `to`.
    static Quat from_to(const Vec3& from, const Vec3& to);

    /// Rotation whose +z maps to `forward` and whose +y lies in the plane of `forward` and `up`.
    static Quat look_rotation(const Vec3& forward, const Vec3& up);

    Quat operator*(const Quat& o) const {
        return {w * o.w - x * o.x - y * o.y - z * o.z,
                w * o.x + x * o.w + y * o.z - z * o.y,
                w * o.y - x * o.z + y * o.w + z * o.x,
                w * o.z + x * o.y - y * o.x + z * o.w};
    }

    Quat conjugate() const { return {w, -x, -y, -z}; }
    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    Quat normalized() const {
        const double n = norm();
        return {w / n, x / n, y / n, z / n};
    }
    bool is_unit(double tol = 1e-6) const { return std::abs(norm() - 1.0) <= tol; }

    Vec3 rotate(const Vec3& v) const {
        const Vec3 u{x, y, z};
        const Vec3 t = u.cross(v) * 2.0;
        return v + t * w + u.cross(t);
    }

    Vec3 forward() const { return rotate(kForward); }
    Vec3 up() const { return rotate(kUp); }

    /// Heading of the forward vector projected on the floor, in [0, 2pi).
    double yaw() const;
};

/// Rigid transform (rotation then translation).
struct Transform {
    Vec3 position;
    Quat rotation;

    friend bool operator==(const Transform&, const Transform&) = default;

    Vec3 apply(const Vec3& local) const { return position + rotation.rotate(local); }
    Vec3 apply_inverse(const Vec3& world) const {
        return rotation.conjugate().rotate(world - position);
    }
    Transform operator*(const Transform& child) const {
        return {apply(child.position), rotation * child.rotation};
    }
    Transform inverse() const {
        const Quat inv = rotation.conjugate();
        return {inv.rotate(-position), inv};
    }
};

/// Wraps to [0, 2pi).
inline double wrap_two_pi(double a) {
    double r = std::fmod(a, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

/// Wraps to (-pi, pi].
inline double wrap_pi(double a) {
    double r = wrap_two_pi(a);
    if (r > kPi) r -= kTwoPi;
    return r;
}

/// Horizontal rotation of (x, z) by yaw, matching Quat::from_yaw.
inline Vec2 rotate_yaw(const Vec2& v, double yaw) {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    return {c * v.x + s * v.z, -s * v.x + c * v.z};
}

inline Vec3 yaw_forward(double yaw) { return {std::sin(yaw), 0.0, std::cos(yaw)}; }

}  // namespace telepresence
