#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pediloop/core/error.hpp"
#include "pediloop/core/math.hpp"

namespace pediloop::map {

enum class SegmentKind { Line, Arc };

/// One plan-view primitive. Arc curvature is signed (positive turns left).
struct PlanSegment {
    double s0 = 0.0;
    Vec2 origin{};
    double heading = 0.0;
    double length = 0.0;
    SegmentKind kind = SegmentKind::Line;
    double curvature = 0.0;
};

/// Lane width polynomial a + b*ds + c*ds^2 + d*ds^3, ds measured from s_offset.
struct WidthRecord {
    double s_offset = 0.0;
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

    double eval(double ds_section) const noexcept
    {
        const double x = ds_section - s_offset;
        return a + x * (b + x * (c + x * d));
    }
};

struct Lane {
    int id = 0;
    std::string type;
    std::vector<WidthRecord> widths;

    double width_at(double ds_section) const noexcept
    {
        if (widths.empty()) return 0.0;
        auto it = std::upper_bound(widths.begin(), widths.end(), ds_section,
                                   [](double v, const WidthRecord& w) { return v < w.s_offset; });
        if (it != widths.begin()) --it;
        return it->eval(ds_section);
    }
};

/// Left lanes are ordered 1, 2, ... and right lanes -1, -2, ... outward from the reference line.
struct LaneSection {
    double s = 0.0;
    std::vector<Lane> left;
    std::vector<Lane> right;
};

struct RefPoint {
    Vec2 point{};
    double heading = 0.0;
};

struct RoadCoord {
    double s = 0.0;
    double t = 0.0;  // signed lateral offset, positive to the left
};

struct Road {
    std::string id;
    double length = 0.0;
    std::vector<PlanSegment> segments;
    std::vector<LaneSection> lane_sections;

    std::size_t lane_count() const noexcept
    {
        std::size_t n = 0;
        for (const auto& ls : lane_sections) n = std::max(n, ls.left.size() + ls.right.size());
        return n;
    }
};

struct Crosswalk {
    std::string road_id;
    double s_start = 0.0;
    double s_end = 0.0;
    std::vector<Vec2> polygon;  // counter-clockwise
};

struct MapModel {
    std::vector<Road> roads;
    std::vector<Crosswalk> crosswalks;

    const Road* find_road(const std::string& id) const noexcept
    {
        for (const auto& r : roads)
            if (r.id == id) return &r;
        return nullptr;
    }
};

namespace detail {

inline RefPoint eval_segment(const PlanSegment& seg, double ds) noexcept
{
    if (seg.kind == SegmentKind::Line) {
        return {{seg.origin.x + ds * std::cos(seg.heading), seg.origin.y + ds * std::sin(seg.heading)},
                seg.heading};
    }
    const double k = seg.curvature;
    const double h = seg.heading + k * ds;
    return {{seg.origin.x + (std::sin(h) - std::sin(seg.heading)) / k,
             seg.origin.y + (std::cos(seg.heading) - std::cos(h)) / k},
            h};
}

inline const PlanSegment& segment_at(const Road& road, double s)
{
    auto it = std::upper_bound(road.segments.begin(), road.segments.end(), s,
                               [](double v, const PlanSegment& g) { return v < g.s0; });
    if (it != road.segments.begin()) --it;
    return *it;
}

inline const LaneSection* section_at(const Road& road, double s) noexcept
{
    const LaneSection* found = nullptr;
    for (const auto& ls : road.lane_sections)
        if (ls.s <= s + 1e-12) found = &ls;
    return found;
}

} // namespace detail

/// Position and heading on the road's reference line at arclength s.
inline RefPoint sample_reference_line(const Road& road, double s)
{
    if (!(s >= 0.0 && s <= road.length))
        throw DomainError("s=" + std::to_string(s) + " outside road " + road.id + " [0, " +
                          std::to_string(road.length) + "]");
    if (road.segments.empty()) throw DomainError("road " + road.id + " has no plan view");
    const auto& seg = detail::segment_at(road, s);
    return detail::eval_segment(seg, std::min(s - seg.s0, seg.length));
}

/// World point at road coordinates (s, t).
inline Vec2 road_to_world(const Road& road, RoadCoord c)
{
    const auto ref = sample_reference_line(road, c.s);
    return {ref.point.x - c.t * std::sin(ref.heading), ref.point.y + c.t * std::cos(ref.heading)};
}

/// Lateral extent of the paved cross-section at s: {t_right (<= 0), t_left (>= 0)}.
inline std::pair<double, double> road_edges(const Road& road, double s)
{
    const auto* ls = detail::section_at(road, s);
    if (!ls) return {0.0, 0.0};
    const double ds = s - ls->s;
    double left = 0.0, right = 0.0;
    for (const auto& l : ls->left) left += l.width_at(ds);
    for (const auto& l : ls->right) right += l.width_at(ds);
    return {-right, left};
}

/// Lateral offset of a lane's centre line at s.
inline double lane_center_offset(const Road& road, double s, int lane_id)
{
    const auto* ls = detail::section_at(road, s);
    if (!ls || lane_id == 0) throw DomainError("no lane " + std::to_string(lane_id) + " on road " + road.id);
    const double ds = s - ls->s;
    const auto& side = lane_id > 0 ? ls->left : ls->right;
    double inner = 0.0;
    for (const auto& l : side) {
        const double w = l.width_at(ds);
        if (l.id == lane_id) return (lane_id > 0 ? 1.0 : -1.0) * (inner + 0.5 * w);
        inner += w;
    }
    throw DomainError("no lane " + std::to_string(lane_id) + " on road " + road.id);
}

/// Closest reference-line coordinates of a world point.
inline RoadCoord project_to_road(const Road& road, Vec2 p)
{
    double best_d2 = std::numeric_limits<double>::infinity();
    RoadCoord best{};
    auto consider = [&](const PlanSegment& seg, double ds) {
        ds = std::clamp(ds, 0.0, seg.length);
        const auto rp = detail::eval_segment(seg, ds);
        const Vec2 d = p - rp.point;
        const double d2 = dot(d, d);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = {seg.s0 + ds, cross({std::cos(rp.heading), std::sin(rp.heading)}, d)};
        }
    };
    for (const auto& seg : road.segments) {
        if (seg.kind == SegmentKind::Line) {
            consider(seg, dot(p - seg.origin, {std::cos(seg.heading), std::sin(seg.heading)}));
        } else {
            const double r = 1.0 / seg.curvature;
            const Vec2 center{seg.origin.x - r * std::sin(seg.heading), seg.origin.y + r * std::cos(seg.heading)};
            const Vec2 a = seg.origin - center;
            const Vec2 b = p - center;
            const double delta = std::atan2(cross(a, b), dot(a, b));
            for (double turn : {-2.0 * kPi, 0.0, 2.0 * kPi}) consider(seg, (delta + turn) / seg.curvature);
        }
    }
    return best;
}

inline double polygon_signed_area(const std::vector<Vec2>& poly) noexcept
{
    double a = 0.0;
    for (std::size_t i = 0, n = poly.size(); i < n; ++i) a += cross(poly[i], poly[(i + 1) % n]);
    return 0.5 * a;
}

namespace detail {

inline int orientation(Vec2 a, Vec2 b, Vec2 c) noexcept
{
    const double v = cross(b - a, c - a);
    return (v > 0.0) - (v < 0.0);
}

inline bool on_segment(Vec2 a, Vec2 b, Vec2 p, double tol) noexcept
{
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) return norm(p - a) <= tol;
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return norm(p - (a + ab * t)) <= tol;
}

inline bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) noexcept
{
    const int o1 = orientation(p1, p2, q1), o2 = orientation(p1, p2, q2);
    const int o3 = orientation(q1, q2, p1), o4 = orientation(q1, q2, p2);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(p1, p2, q1, 0.0)) return true;
    if (o2 == 0 && on_segment(p1, p2, q2, 0.0)) return true;
    if (o3 == 0 && on_segment(q1, q2, p1, 0.0)) return true;
    if (o4 == 0 && on_segment(q1, q2, p2, 0.0)) return true;
    return false;
}

} // namespace detail

/// True when no two non-adjacent edges touch.
inline bool polygon_is_simple(const std::vector<Vec2>& poly) noexcept
{
    const std::size_t n = poly.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;
            if (detail::segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) return false;
        }
    }
    return true;
}

/// Point-in-polygon by the crossing-number rule; points on an edge count as inside.
inline bool point_in_polygon(const std::vector<Vec2>& poly, Vec2 p) noexcept
{
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i)
        if (detail::on_segment(poly[i], poly[(i + 1) % n], p, 1e-12)) return true;
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2 a = poly[i], b = poly[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x) inside = !inside;
        }
    }
    return inside;
}

inline bool point_in_crosswalk(const MapModel& map, Vec2 p) noexcept
{
    return std::any_of(map.crosswalks.begin(), map.crosswalks.end(),
                       [&](const Crosswalk& c) { return point_in_polygon(c.polygon, p); });
}

} // namespace pediloop::map
