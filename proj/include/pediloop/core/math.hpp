#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace pediloop {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) noexcept { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) noexcept { return rad * 180.0 / kPi; }

/// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) noexcept
{
    a = std::remainder(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const noexcept { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const noexcept { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const noexcept { return {x * s, y * s}; }
    constexpr Vec2 operator-() const noexcept { return {-x, -y}; }
    constexpr bool operator==(const Vec2&) const = default;
};

constexpr double dot(Vec2 a, Vec2 b) noexcept { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) noexcept { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) noexcept { return std::hypot(v.x, v.y); }

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const noexcept { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const noexcept { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const noexcept { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const noexcept { return {x / s, y / s, z / s}; }
    constexpr Vec3 operator-() const noexcept { return {-x, -y, -z}; }
    constexpr Vec3& operator+=(const Vec3& o) noexcept { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr double operator[](int i) const noexcept { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr double& operator[](int i) noexcept { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr bool operator==(const Vec3&) const = default;

    constexpr Vec2 xy() const noexcept { return {x, y}; }
};

constexpr Vec3 operator*(double s, const Vec3& v) noexcept { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) noexcept
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) noexcept { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3& v) noexcept { return v / norm(v); }

/// Row-major 3x3 matrix.
struct Mat3 {
    std::array<std::array<double, 3>, 3> m{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

    constexpr double operator()(int r, int c) const noexcept { return m[r][c]; }
    constexpr double& operator()(int r, int c) noexcept { return m[r][c]; }

    constexpr Vec3 operator*(const Vec3& v) const noexcept
    {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }

    constexpr Mat3 operator*(const Mat3& o) const noexcept
    {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j] + m[i][2] * o.m[2][j];
        return r;
    }

    constexpr Mat3 transposed() const noexcept
    {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
        return r;
    }

    constexpr double determinant() const noexcept
    {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }

    constexpr bool operator==(const Mat3&) const = default;
};

/// Unit quaternion (w, x, y, z) representing a rotation.
struct Quat {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    static Quat from_axis_angle(const Vec3& axis, double angle) noexcept
    {
        const Vec3 a = pediloop::normalized(axis);
        const double h = 0.5 * angle;
        const double s = std::sin(h);
        return {std::cos(h), a.x * s, a.y * s, a.z * s};
    }

    static Quat from_yaw(double yaw) noexcept
    {
        return {std::cos(0.5 * yaw), 0.0, 0.0, std::sin(0.5 * yaw)};
    }

    static Quat from_matrix(const Mat3& r) noexcept
    {
        // Shepperd's method: pick the largest diagonal term for stability.
        const double tr = r(0, 0) + r(1, 1) + r(2, 2);
        Quat q;
        if (tr > 0.0) {
            const double s = std::sqrt(tr + 1.0) * 2.0;
            q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
        } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
            const double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
            q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
        } else if (r(1, 1) > r(2, 2)) {
            const double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
            q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
        } else {
            const double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
            q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
        }
        return q.normalized();
    }

    constexpr Quat operator*(const Quat& o) const noexcept
    {
        return {w * o.w - x * o.x - y * o.y - z * o.z,
                w * o.x + x * o.w + y * o.z - z * o.y,
                w * o.y - x * o.z + y * o.w + z * o.x,
                w * o.z + x * o.y - y * o.x + z * o.w};
    }

    constexpr Quat conjugate() const noexcept { return {w, -x, -y, -z}; }
    constexpr double dot(const Quat& o) const noexcept { return w * o.w + x * o.x + y * o.y + z * o.z; }
    double norm() const noexcept { return std::sqrt(dot(*this)); }

    Quat normalized() const noexcept
    {
        const double n = norm();
        return {w / n, x / n, y / n, z / n};
    }

    constexpr Vec3 rotate(const Vec3& v) const noexcept
    {
        // v' = v + 2w(u x v) + 2u x (u x v)
        const Vec3 u{x, y, z};
        const Vec3 t = cross(u, v) * 2.0;
        return v + t * w + cross(u, t);
    }

    constexpr Mat3 to_matrix() const noexcept
    {
        Mat3 r;
        r.m = {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
                {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
                {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
        return r;
    }

    /// Heading about +Z of the rotated X axis.
    double yaw() const noexcept
    {
        const Vec3 f = rotate({1.0, 0.0, 0.0});
        return std::atan2(f.y, f.x);
    }

    constexpr bool operator==(const Quat&) const = default;
};

/// Rotation angle in [0, pi] between two orientations.
inline double angle_between(const Quat& a, const Quat& b) noexcept
{
    const double d = std::min(1.0, std::abs(a.dot(b)));
    return 2.0 * std::acos(d);
}

inline Quat slerp(const Quat& a, Quat b, double t) noexcept
{
    double d = a.dot(b);
    if (d < 0.0) {
        b = {-b.w, -b.x, -b.y, -b.z};
        d = -d;
    }
    if (d > 1.0 - 1e-12) {
        const Quat q{a.w + t * (b.w - a.w), a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.z + t * (b.z - a.z)};
        return q.normalized();
    }
    const double theta = std::acos(d);
    const double s = std::sin(theta);
    const double wa = std::sin((1.0 - t) * theta) / s;
    const double wb = std::sin(t * theta) / s;
    return {wa * a.w + wb * b.w, wa * a.x + wb * b.x, wa * a.y + wb * b.y, wa * a.z + wb * b.z};
}

struct Transform {
    Vec3 position{};
    Quat rotation{};

    constexpr Vec3 apply(const Vec3& p) const noexcept { return rotation.rotate(p) + position; }

    constexpr Transform operator*(const Transform& child) const noexcept
    {
        return {apply(child.position), rotation * child.rotation};
    }

    constexpr Transform inverse() const noexcept
    {
        const Quat inv = rotation.conjugate();
        return {inv.rotate(-position), inv};
    }

    constexpr bool operator==(const Transform&) const = default;
};

inline bool is_unit(const Quat& q, double tol = 1e-6) noexcept { return std::abs(q.norm() - 1.0) <= tol; }

} // namespace pediloop
