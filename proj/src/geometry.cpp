#include "telepresence/geometry.hpp"

#include "telepresence/error.hpp"

namespace telepresence {

Quat Quat::from_to(const Vec3& from, const Vec3& to) {
    const Vec3 a = from.normalized();
    const Vec3 b = to.normalized();
    const double d = a.dot(b);
    if (d < -1.0 + 1e-12) {
        // Antiparallel: any axis perpendicular to `a` works.
        Vec3 axis = Vec3{1.0, 0.0, 0.0}.cross(a);
        if (axis.norm() < 1e-6) axis = Vec3{0.0, 1.0, 0.0}.cross(a);
        return from_axis_angle(axis, kPi);
    }
    const Vec3 c = a.cross(b);
    return Quat{1.0 + d, c.x, c.y, c.z}.normalized();
}

Quat Quat::look_rotation(const Vec3& forward, const Vec3& up) {
    const Vec3 f = forward.normalized();
    Vec3 r = up.cross(f);
    if (r.norm() < 1e-9) {
        // Up parallel to forward; pick any orthogonal reference.
        r = (std::abs(f.y) < 0.9 ? kUp : Vec3{0.0, 0.0, -1.0}).cross(f);
    }
    r = r.normalized();
    const Vec3 u = f.cross(r);

    // Columns of the rotation matrix are (r, u, f).
    const double m00 = r.x, m01 = u.x, m02 = f.x;
    const double m10 = r.y, m11 = u.y, m12 = f.y;
    const double m20 = r.z, m21 = u.z, m22 = f.z;
    const double trace = m00 + m11 + m22;
    Quat q;
    if (trace > 0.0) {
        const double s = std::sqrt(trace + 1.0) * 2.0;
        q = {0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s};
    } else if (m00 > m11 && m00 > m22) {
        const double s = std::sqrt(1.0 + m00 - m11 - m22) * 2.0;
        q = {(m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s};
    } else if (m11 > m22) {
        const double s = std::sqrt(1.0 + m11 - m00 - m22) * 2.0;
        q = {(m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s};
    } else {
        const double s = std::sqrt(1.0 + m22 - m00 - m11) * 2.0;
        q = {(m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s};
    }
    return q.normalized();
}

double Quat::yaw() const {
    const Vec3 f = forward();
    return wrap_two_pi(std::atan2(f.x, f.z));
}

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedDocument: return "MalformedDocument";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::NonPositiveExtent: return "NonPositiveExtent";
        case ErrorCode::ObjectOutsideRoom: return "ObjectOutsideRoom";
        case ErrorCode::InvalidSitHeight: return "InvalidSitHeight";
        case ErrorCode::UnresolvedPair: return "UnresolvedPair";
        case ErrorCode::PointOutsideBox: return "PointOutsideBox";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::InsufficientSamples: return "InsufficientSamples";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::SubjectOutsideRoom: return "SubjectOutsideRoom";
        case ErrorCode::InvalidWeights: return "InvalidWeights";
        case ErrorCode::NoFeasiblePlacement: return "NoFeasiblePlacement";
        case ErrorCode::DegenerateTarget: return "DegenerateTarget";
        case ErrorCode::Truncated: return "Truncated";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
        case ErrorCode::UnknownMessageType: return "UnknownMessageType";
        case ErrorCode::Unrepresentable: return "Unrepresentable";
        case ErrorCode::TickRegression: return "TickRegression";
        case ErrorCode::MessageBeforeHello: return "MessageBeforeHello";
        case ErrorCode::DuplicateHello: return "DuplicateHello";
        case ErrorCode::SessionClosed: return "SessionClosed";
        case ErrorCode::EmptyBenchmark: return "EmptyBenchmark";
        case ErrorCode::FileError: return "FileError";
    }
    return "Unknown";
}

}  // namespace telepresence
