#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pediloop/map/opendrive.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace pediloop;
using namespace pediloop::oracle;
using namespace pediloop::map;
using pediloop::map::detail::eval_segment;
using pediloop::test::data;
using pediloop::test::slurp;

namespace {

std::string with_crosswalk(const std::string& base, const std::string& object)
{
    std::string doc = base;
    const auto pos = doc.find("  </road>");
    doc.insert(pos, "    <objects>\n      " + object + "\n    </objects>\n");
    return doc;
}

} // namespace

TEST(OpenDrive, StraightFixture)
{
    const auto m = load_opendrive(data("fixtures/straight_100.xodr").string());
    ASSERT_EQ(m.roads.size(), 1u);
    EXPECT_EQ(m.roads[0].lane_count(), 2u);
    EXPECT_TRUE(m.crosswalks.empty());
    EXPECT_DOUBLE_EQ(m.roads[0].length, 100.0);
}

TEST(OpenDrive, CrosswalkSpansRoadWidth)
{
    const auto m = parse_opendrive(with_crosswalk(slurp(data("fixtures/straight_100.xodr")),
                                                  R"(<object id="c" type="crosswalk" s="51.5" length="3"/>)"));
    ASSERT_EQ(m.crosswalks.size(), 1u);
    const auto& c = m.crosswalks[0];
    EXPECT_NEAR(c.s_start, 50.0, 1e-12);
    EXPECT_NEAR(c.s_end, 53.0, 1e-12);
    // Two 3.5 m lanes either side of the reference line: corners at t = +-3.5.
    EXPECT_NEAR(polygon_signed_area(c.polygon), 3.0 * 7.0, 1e-9);
    double xmin = 1e9, xmax = -1e9, ymin = 1e9, ymax = -1e9;
    for (auto p : c.polygon) {
        xmin = std::min(xmin, p.x), xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y), ymax = std::max(ymax, p.y);
    }
    EXPECT_NEAR(xmin, 50.0, 1e-12);
    EXPECT_NEAR(xmax, 53.0, 1e-12);
    EXPECT_NEAR(ymin, -3.5, 1e-12);
    EXPECT_NEAR(ymax, 3.5, 1e-12);
}

TEST(OpenDrive, OutlineOverridesSRange)
{
    const auto m = parse_opendrive(with_crosswalk(
        slurp(data("fixtures/straight_100.xodr")),
        R"(<object id="c" type="crosswalk" s="20" length="10"><outline><cornerRoad s="19" t="-2"/><cornerRoad s="21" t="-2"/><cornerRoad s="21" t="2"/><cornerRoad s="19" t="2"/></outline></object>)"));
    ASSERT_EQ(m.crosswalks.size(), 1u);
    EXPECT_NEAR(m.crosswalks[0].s_start, 19.0, 1e-12);
    EXPECT_NEAR(m.crosswalks[0].s_end, 21.0, 1e-12);
    EXPECT_NEAR(polygon_signed_area(m.crosswalks[0].polygon), 8.0, 1e-12);
}

TEST(OpenDrive, SpiralIsUnsupported)
{
    try {
        load_opendrive(data("fixtures/spiral.xodr").string());
        FAIL() << "expected UnsupportedGeometry";
    } catch (const UnsupportedGeometry& e) {
        const std::string w = e.what();
        EXPECT_NE(w.find("spiral"), std::string::npos) << w;
        EXPECT_NE(w.find("3"), std::string::npos) << w;
    }
}

TEST(OpenDrive, OtherUnsupportedKinds)
{
    const auto base = slurp(data("fixtures/straight_100.xodr"));
    for (const std::string kind : {"<poly3 a=\"0\" b=\"0\" c=\"0\" d=\"0\"/>",
                                   "<paramPoly3 aU=\"0\" bU=\"1\" cU=\"0\" dU=\"0\" aV=\"0\" bV=\"0\" cV=\"0\" dV=\"0\"/>"}) {
        std::string doc = base;
        doc.replace(doc.find("<line/>"), 7, kind);
        EXPECT_THROW(parse_opendrive(doc), UnsupportedGeometry) << kind;
    }
}

TEST(OpenDrive, MalformedReportsLine)
{
    try {
        load_opendrive(data("fixtures/malformed.xodr").string());
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_GE(e.line(), 1u);
    }
}

TEST(OpenDrive, EveryFixtureParsesOrFailsTyped)
{
    for (const auto& entry : fs::directory_iterator(data("fixtures"))) {
        if (entry.path().extension() != ".xodr") continue;
        try {
            const auto m = load_opendrive(entry.path().string());
            EXPECT_FALSE(m.roads.empty()) << entry.path();
        } catch (const Error& e) {
            EXPECT_EQ(e.family(), ErrorFamily::Data) << entry.path() << ": " << e.what();
        }
    }
}

TEST(ReferenceLine, LineSample)
{
    const auto m = load_opendrive(data("fixtures/straight_100.xodr").string());
    const auto r = sample_reference_line(m.roads[0], 50.0);
    EXPECT_DOUBLE_EQ(r.point.x, 50.0);
    EXPECT_DOUBLE_EQ(r.point.y, 0.0);
    EXPECT_DOUBLE_EQ(r.heading, 0.0);
    EXPECT_THROW(sample_reference_line(m.roads[0], 100.5), DomainError);
    EXPECT_THROW(sample_reference_line(m.roads[0], -0.1), DomainError);
}

TEST(ReferenceLine, QuarterCircleEndpoint)
{
    const auto m = load_opendrive(data("fixtures/quarter_arc.xodr").string());
    const auto r = sample_reference_line(m.roads[0], 25.0 * kPi);
    EXPECT_NEAR(r.point.x, 50.0, 1e-6);
    EXPECT_NEAR(r.point.y, 50.0, 1e-6);
    EXPECT_NEAR(r.heading, kPi / 2, 1e-12);
}

TEST(ReferenceLine, BundledMapContinuity)
{
    const auto m = load_opendrive(data("maps/university_crossing.xodr").string());
    ASSERT_EQ(m.roads.size(), 1u);
    ASSERT_EQ(m.crosswalks.size(), 1u);
    const auto& road = m.roads[0];
    for (std::size_t i = 1; i < road.segments.size(); ++i) {
        const auto& prev = road.segments[i - 1];
        const auto& next = road.segments[i];
        EXPECT_NEAR(prev.s0 + prev.length, next.s0, 1e-6);
        const auto end = eval_segment(prev, prev.length);
        EXPECT_NEAR(wrap_angle(end.heading - next.heading), 0.0, 1e-6);
        EXPECT_NEAR(norm(end.point - next.origin), 0.0, 1e-6);
    }
    const auto last = sample_reference_line(road, road.length);
    const auto& seg = road.segments.back();
    EXPECT_NEAR(norm(last.point - eval_segment(seg, seg.length).point), 0.0, 1e-12);
}

TEST(ReferenceLine, ArclengthAdditivity)
{
    const auto m = load_opendrive(data("maps/university_crossing.xodr").string());
    const auto& road = m.roads[0];
    std::mt19937_64 rng(11);
    for (const auto& seg : road.segments) {
        std::uniform_real_distribution<double> u(seg.s0, seg.s0 + seg.length);
        for (int i = 0; i < 200; ++i) {
            double s1 = u(rng), s2 = u(rng);
            if (s1 > s2) std::swap(s1, s2);
            const double chord = norm(sample_reference_line(road, s2).point - sample_reference_line(road, s1).point);
            const double ds = s2 - s1;
            // Path length recovered from the chord: a line is the chord, an arc is R * central angle.
            double path = chord;
            if (seg.kind == SegmentKind::Arc) {
                const double radius = 1.0 / std::abs(seg.curvature);
                path = 2.0 * radius * std::asin(std::min(1.0, chord / (2.0 * radius)));
            }
            EXPECT_NEAR(path, ds, 1e-6);
        }
    }
}

TEST(ReferenceLine, ProjectionInvertsRoadToWorld)
{
    const auto m = load_opendrive(data("maps/university_crossing.xodr").string());
    const auto& road = m.roads[0];
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> us(0.5, road.length - 0.5), ut(-3.5, 3.5);
    for (int i = 0; i < 500; ++i) {
        const RoadCoord c{us(rng), ut(rng)};
        const auto back = project_to_road(road, road_to_world(road, c));
        EXPECT_NEAR(back.s, c.s, 1e-6);
        EXPECT_NEAR(back.t, c.t, 1e-6);
    }
}

TEST(Crosswalk, CentroidInsideAndFarPointOutside)
{
    const auto m = load_opendrive(data("maps/university_crossing.xodr").string());
    const auto& poly = m.crosswalks[0].polygon;
    Vec2 c{};
    for (auto p : poly) c = c + p;
    c = c * (1.0 / static_cast<double>(poly.size()));
    EXPECT_TRUE(point_in_crosswalk(m, c));
    EXPECT_FALSE(point_in_crosswalk(m, c + Vec2{100.0, 0.0}));
    EXPECT_TRUE(point_in_polygon(poly, poly[0])) << "boundary counts as inside";
    EXPECT_GT(polygon_signed_area(poly), 0.0) << "counter-clockwise";
    EXPECT_TRUE(polygon_is_simple(poly));
}

TEST(Crosswalk, AgreesWithWindingOracle)
{
    const auto m = load_opendrive(data("maps/university_crossing.xodr").string());
    const auto& poly = m.crosswalks[0].polygon;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ux(55.0, 69.0), uy(-6.0, 6.0);
    int inside = 0;
    for (int i = 0; i < 1000; ++i) {
        const Vec2 p{ux(rng), uy(rng)};
        const bool expect = winding_inside(poly, p);
        inside += expect;
        ASSERT_EQ(point_in_polygon(poly, p), expect) << p.x << "," << p.y;
    }
    EXPECT_GT(inside, 100);
    EXPECT_LT(inside, 900);
}

TEST(Crosswalk, ConcaveOracleAgreement)
{
    // L-shaped outline exercises the non-convex branch of the crossing rule.
    const std::vector<Vec2> poly{{0, 0}, {4, 0}, {4, 1}, {1, 1}, {1, 4}, {0, 4}};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 5.0);
    for (int i = 0; i < 1000; ++i) {
        const Vec2 p{u(rng), u(rng)};
        ASSERT_EQ(point_in_polygon(poly, p), winding_inside(poly, p)) << p.x << "," << p.y;
    }
}

TEST(Lanes, BundledRoadLaneOffsets)
{
    const auto m = load_opendrive(data("maps/university_crossing.xodr").string());
    const auto& road = m.roads[0];
    EXPECT_NEAR(lane_center_offset(road, 10.0, -1), -1.75, 1e-12);
    EXPECT_NEAR(lane_center_offset(road, 10.0, 1), 1.75, 1e-12);
    const auto [right, left] = road_edges(road, 62.0);
    EXPECT_NEAR(right, -3.5, 1e-12);
    EXPECT_NEAR(left, 3.5, 1e-12);
}
