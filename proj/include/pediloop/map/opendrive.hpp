#pragma once

// Restricted OpenDRIVE reader: plan-view lines and arcs, lane width
// polynomials, and crosswalk objects. Elevation and lateral profiles are
// ignored; the world is flat at z = 0.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/detail/rapidxml.hpp>

#include "pediloop/core/error.hpp"
#include "pediloop/map/map_model.hpp"

namespace pediloop::map {

namespace detail {

namespace rx = boost::property_tree::detail::rapidxml;
using XmlNode = rx::xml_node<char>;

class OdrReader {
public:
    explicit OdrReader(std::string_view text) : buffer_(text.begin(), text.end()) { buffer_.push_back('\0'); }

    MapModel read()
    {
        rx::xml_document<char> doc;
        try {
            doc.parse<rx::parse_non_destructive>(buffer_.data());
        } catch (const rx::parse_error& e) {
            const auto [line, col] = locate(e.where<char>());
            throw ParseError(std::string("malformed XML: ") + e.what(), line, col);
        }
        const XmlNode* root = doc.first_node();
        while (root && root->type() != rx::node_element) root = root->next_sibling();
        if (!root || name(root) != "OpenDRIVE") throw ParseError("root element must be <OpenDRIVE>", 1, 1);

        MapModel model;
        for (const XmlNode* n = root->first_node(); n; n = n->next_sibling()) {
            if (n->type() == rx::node_element && name(n) == "road") read_road(n, model);
        }
        return model;
    }

private:
    std::pair<std::size_t, std::size_t> locate(const char* p) const noexcept
    {
        std::size_t line = 1, col = 1;
        const char* base = buffer_.data();
        if (!p || p < base || p > base + buffer_.size()) return {0, 0};
        for (const char* c = base; c < p; ++c) {
            if (*c == '\n') { ++line; col = 1; }
            else ++col;
        }
        return {line, col};
    }

    [[noreturn]] void fail(const XmlNode* at, const std::string& what) const
    {
        const auto [line, col] = locate(at ? at->name() : nullptr);
        throw ParseError(what, line, col);
    }

    static std::string_view name(const XmlNode* n) { return {n->name(), n->name_size()}; }

    static const XmlNode* child(const XmlNode* n, std::string_view nm)
    {
        for (const XmlNode* c = n->first_node(); c; c = c->next_sibling())
            if (c->type() == rx::node_element && name(c) == nm) return c;
        return nullptr;
    }

    static std::vector<const XmlNode*> children(const XmlNode* n, std::string_view nm)
    {
        std::vector<const XmlNode*> out;
        if (!n) return out;
        for (const XmlNode* c = n->first_node(); c; c = c->next_sibling())
            if (c->type() == rx::node_element && name(c) == nm) out.push_back(c);
        return out;
    }

    static const rx::xml_attribute<char>* attribute(const XmlNode* n, std::string_view nm)
    {
        for (auto* a = n->first_attribute(); a; a = a->next_attribute())
            if (std::string_view(a->name(), a->name_size()) == nm) return a;
        return nullptr;
    }

    std::string text_attr(const XmlNode* n, std::string_view nm, std::string fallback = {}, bool required = false) const
    {
        const auto* a = attribute(n, nm);
        if (!a) {
            if (required) fail(n, "<" + std::string(name(n)) + "> missing attribute '" + std::string(nm) + "'");
            return fallback;
        }
        return {a->value(), a->value_size()};
    }

    double num_attr(const XmlNode* n, std::string_view nm, double fallback, bool required) const
    {
        const auto* a = attribute(n, nm);
        if (!a) {
            if (required) fail(n, "<" + std::string(name(n)) + "> missing attribute '" + std::string(nm) + "'");
            return fallback;
        }
        std::string_view v(a->value(), a->value_size());
        while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
        while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
        if (!v.empty() && v.front() == '+') v.remove_prefix(1);
        double out = 0.0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
        if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
            const auto [line, col] = locate(a->value());
            throw ParseError("attribute '" + std::string(nm) + "' is not a finite number: '" + std::string(v) + "'",
                             line, col);
        }
        return out;
    }

    void read_road(const XmlNode* rn, MapModel& model) const
    {
        Road road;
        road.id = text_attr(rn, "id", {}, true);
        road.length = num_attr(rn, "length", 0.0, true);
        if (road.length <= 0.0) fail(rn, "road " + road.id + " has non-positive length");

        const XmlNode* pv = child(rn, "planView");
        if (!pv) fail(rn, "road " + road.id + " has no <planView>");
        for (const XmlNode* g : children(pv, "geometry")) road.segments.push_back(read_geometry(g, road.id));
        if (road.segments.empty()) fail(pv, "road " + road.id + " has an empty <planView>");
        std::stable_sort(road.segments.begin(), road.segments.end(),
                         [](const PlanSegment& a, const PlanSegment& b) { return a.s0 < b.s0; });
        if (std::abs(road.segments.front().s0) > 1e-6) fail(pv, "road " + road.id + " plan view does not start at s=0");
        for (std::size_t i = 0; i + 1 < road.segments.size(); ++i) {
            const auto& a = road.segments[i];
            if (std::abs(a.s0 + a.length - road.segments[i + 1].s0) > 1e-6)
                fail(pv, "road " + road.id + " plan view is not contiguous at s=" + std::to_string(a.s0 + a.length));
        }
        const auto& last = road.segments.back();
        if (std::abs(last.s0 + last.length - road.length) > 1e-6)
            fail(rn, "road " + road.id + " length does not match its plan view");

        if (const XmlNode* lanes = child(rn, "lanes")) {
            for (const XmlNode* sec : children(lanes, "laneSection")) road.lane_sections.push_back(read_section(sec, road));
            std::stable_sort(road.lane_sections.begin(), road.lane_sections.end(),
                             [](const LaneSection& a, const LaneSection& b) { return a.s < b.s; });
            check_widths(lanes, road);
        }

        if (const XmlNode* objs = child(rn, "objects")) {
            for (const XmlNode* o : children(objs, "object")) {
                std::string type = text_attr(o, "type");
                std::transform(type.begin(), type.end(), type.begin(), [](unsigned char c) { return std::tolower(c); });
                if (type == "crosswalk") model.crosswalks.push_back(read_crosswalk(o, road));
            }
        }
        model.roads.push_back(std::move(road));
    }

    PlanSegment read_geometry(const XmlNode* g, const std::string& road_id) const
    {
        PlanSegment seg;
        seg.s0 = num_attr(g, "s", 0.0, true);
        seg.origin = {num_attr(g, "x", 0.0, true), num_attr(g, "y", 0.0, true)};
        seg.heading = num_attr(g, "hdg", 0.0, true);
        seg.length = num_attr(g, "length", 0.0, true);
        if (seg.length <= 0.0) fail(g, "road " + road_id + " has a geometry of non-positive length");

        const XmlNode* kind = g->first_node();
        while (kind && kind->type() != rx::node_element) kind = kind->next_sibling();
        if (!kind) fail(g, "road " + road_id + " geometry at s=" + std::to_string(seg.s0) + " has no primitive");
        const auto k = name(kind);
        if (k == "line") {
            seg.kind = SegmentKind::Line;
        } else if (k == "arc") {
            seg.kind = SegmentKind::Arc;
            seg.curvature = num_attr(kind, "curvature", 0.0, true);
            if (seg.curvature == 0.0) fail(kind, "road " + road_id + " arc has zero curvature");
        } else {
            throw UnsupportedGeometry("unsupported plan-view geometry '" + std::string(k) + "' on road " + road_id);
        }
        return seg;
    }

    LaneSection read_section(const XmlNode* sec, const Road& road) const
    {
        LaneSection ls;
        ls.s = num_attr(sec, "s", 0.0, true);
        auto read_side = [&](std::string_view side_name, int sign) {
            std::vector<Lane> lanes;
            const XmlNode* side = child(sec, side_name);
            for (const XmlNode* ln : children(side, "lane")) {
                Lane lane;
                lane.id = static_cast<int>(num_attr(ln, "id", 0.0, true));
                lane.type = text_attr(ln, "type", "none");
                if (lane.id == 0 || (lane.id > 0) != (sign > 0))
                    fail(ln, "road " + road.id + " lane id " + std::to_string(lane.id) + " on wrong side");
                for (const XmlNode* w : children(ln, "width")) {
                    lane.widths.push_back({num_attr(w, "sOffset", 0.0, true), num_attr(w, "a", 0.0, true),
                                           num_attr(w, "b", 0.0, false), num_attr(w, "c", 0.0, false),
                                           num_attr(w, "d", 0.0, false)});
                }
                std::stable_sort(lane.widths.begin(), lane.widths.end(),
                                 [](const WidthRecord& a, const WidthRecord& b) { return a.s_offset < b.s_offset; });
                lanes.push_back(std::move(lane));
            }
            std::sort(lanes.begin(), lanes.end(), [](const Lane& a, const Lane& b) { return std::abs(a.id) < std::abs(b.id); });
            return lanes;
        };
        ls.left = read_side("left", +1);
        ls.right = read_side("right", -1);
        return ls;
    }

    void check_widths(const XmlNode* at, const Road& road) const
    {
        for (std::size_t i = 0; i < road.lane_sections.size(); ++i) {
            const auto& ls = road.lane_sections[i];
            const double end = (i + 1 < road.lane_sections.size() ? road.lane_sections[i + 1].s : road.length) - ls.s;
            for (const auto* side : {&ls.left, &ls.right}) {
                for (const auto& lane : *side) {
                    constexpr int kSamples = 32;
                    for (int k = 0; k <= kSamples; ++k) {
                        const double ds = end * k / kSamples;
                        if (lane.width_at(ds) < -1e-9)
                            fail(at, "road " + road.id + " lane " + std::to_string(lane.id) +
                                         " has negative width at s=" + std::to_string(ls.s + ds));
                    }
                }
            }
        }
    }

    Crosswalk read_crosswalk(const XmlNode* o, const Road& road) const
    {
        Crosswalk cw;
        cw.road_id = road.id;
        const double s = num_attr(o, "s", 0.0, true);
        const double t = num_attr(o, "t", 0.0, false);
        const double hdg = num_attr(o, "hdg", 0.0, false);
        const double length = num_attr(o, "length", 0.0, false);
        if (s < 0.0 || s > road.length) fail(o, "crosswalk on road " + road.id + " lies outside the road");

        const XmlNode* outline = child(o, "outline");
        if (!outline) {
            if (const XmlNode* outlines = child(o, "outlines")) outline = child(outlines, "outline");
        }
        if (outline) {
            const auto ref = sample_reference_line(road, s);
            const double yaw = ref.heading + hdg;
            const Vec2 origin = road_to_world(road, {s, t});
            double s_lo = std::numeric_limits<double>::infinity(), s_hi = -s_lo;
            for (const XmlNode* c = outline->first_node(); c; c = c->next_sibling()) {
                if (c->type() != rx::node_element) continue;
                Vec2 p;
                if (name(c) == "cornerLocal") {
                    const double u = num_attr(c, "u", 0.0, true), v = num_attr(c, "v", 0.0, true);
                    p = {origin.x + u * std::cos(yaw) - v * std::sin(yaw), origin.y + u * std::sin(yaw) + v * std::cos(yaw)};
                } else if (name(c) == "cornerRoad") {
                    const double cs = num_attr(c, "s", 0.0, true);
                    if (cs < 0.0 || cs > road.length) fail(c, "crosswalk corner outside road " + road.id);
                    p = road_to_world(road, {cs, num_attr(c, "t", 0.0, true)});
                } else {
                    continue;
                }
                cw.polygon.push_back(p);
                const double ps = project_to_road(road, p).s;
                s_lo = std::min(s_lo, ps);
                s_hi = std::max(s_hi, ps);
            }
            cw.s_start = s_lo;
            cw.s_end = s_hi;
        } else {
            if (length <= 0.0) fail(o, "crosswalk on road " + road.id + " needs a positive length or an outline");
            cw.s_start = s - 0.5 * length;
            cw.s_end = s + 0.5 * length;
            if (cw.s_start < 0.0 || cw.s_end > road.length)
                fail(o, "crosswalk s-range exceeds road " + road.id);
            cw.polygon = s_range_polygon(road, cw.s_start, cw.s_end);
        }

        double area = polygon_signed_area(cw.polygon);
        if (area < 0.0) {
            std::reverse(cw.polygon.begin(), cw.polygon.end());
            area = -area;
        }
        if (cw.polygon.size() < 3 || area <= 0.0 || !polygon_is_simple(cw.polygon))
            fail(o, "crosswalk on road " + road.id + " has a degenerate or self-intersecting outline");
        return cw;
    }

    /// Full-width band over [s0, s1]; edges are subdivided only where they run along an arc.
    static std::vector<Vec2> s_range_polygon(const Road& road, double s0, double s1)
    {
        std::vector<double> stations{s0};
        for (const auto& seg : road.segments) {
            if (seg.kind != SegmentKind::Arc) continue;
            const double a = std::max(s0, seg.s0), b = std::min(s1, seg.s0 + seg.length);
            for (double s = std::floor(a) + 1.0; s < b; s += 1.0) stations.push_back(s);
        }
        stations.push_back(s1);
        std::sort(stations.begin(), stations.end());
        stations.erase(std::unique(stations.begin(), stations.end()), stations.end());

        std::vector<Vec2> poly;
        for (double s : stations) poly.push_back(road_to_world(road, {s, road_edges(road, s).first}));
        for (auto it = stations.rbegin(); it != stations.rend(); ++it)
            poly.push_back(road_to_world(road, {*it, road_edges(road, *it).second}));
        return poly;
    }

    std::vector<char> buffer_;
};

} // namespace detail

/// Parse an OpenDRIVE document. Either returns a fully populated model or throws.
inline MapModel parse_opendrive(std::string_view document) { return detail::OdrReader(document).read(); }

inline MapModel load_opendrive(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open map file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_opendrive(ss.str());
}

} // namespace pediloop::map
