#include <gtest/gtest.h>

#include <random>

#include "pediloop/sensors/depth.hpp"
#include "pediloop/sensors/export.hpp"
#include "pediloop/sensors/geometry.hpp"
#include "pediloop/sensors/lidar.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace pediloop;
using namespace pediloop::oracle;
using namespace pediloop::sensors;

namespace {

WorldSnapshot empty_snapshot(std::uint64_t tick = 0)
{
    WorldSnapshot s;
    s.tick = tick;
    return s;
}

LidarConfig world_lidar(Vec3 at, double elevation_deg, int points = 360)
{
    LidarConfig c;
    c.mount = {at, {}};
    c.carrier = std::nullopt;
    c.channels = 1;
    c.fov_lo_deg = elevation_deg;
    c.fov_hi_deg = elevation_deg + 1.0;
    c.points_per_channel = points;
    return c;
}

VehicleState parked(Vec3 centre, double yaw = 0.0)
{
    VehicleState v;
    v.id = kVehicleId;
    v.transform = {centre, Quat::from_yaw(yaw)};
    return v;
}

WalkerState pole(Vec2 at, double radius = 0.3)
{
    WalkerState w;
    w.id = kWalkerId;
    w.capsules = {{{at.x, at.y, 0.3}, {at.x, at.y, 1.5}, radius}};
    return w;
}

} // namespace

TEST(Raycast, MatchesSphereTracingOracle)
{
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int hits = 0, rays = 0, labelled = 0;
    while (rays < 1000) {
        const Scene scene = random_scene(rng);
        for (int n = 0; n < 100; ++n) {
            const Vec3 o{u(rng) * 18, u(rng) * 18, 1.0 + u(rng) * 0.8};
            if (Field{scene}.eval(o).first < 0.05) continue;
            // Half the rays aim near a primitive so both intersectors get exercised.
            Vec3 d = normalized(Vec3{u(rng), u(rng), 0.4 * u(rng)});
            if (n % 2) {
                const auto& pr = scene.primitives[rng() % scene.primitives.size()].shape;
                const Vec3 c = std::holds_alternative<OrientedBox>(pr) ? std::get<OrientedBox>(pr).pose.position
                                                                        : std::get<Capsule>(pr).a;
                d = normalized(c + Vec3{u(rng), u(rng), u(rng)} * 0.6 - o);
            }
            const Ray ray{o, d};
            const auto got = cast_ray(scene, ray, 50.0);
            const auto want = trace(scene, ray, 50.0);
            ++rays;
            ASSERT_EQ(got.has_value(), want.has_value()) << "ray " << rays;
            if (!got) continue;
            ++hits;
            labelled += got->label != kNoLabel;
            ASSERT_NEAR(got->distance, want->distance, 1e-9) << "ray " << rays;
            ASSERT_EQ(got->label, want->label) << "ray " << rays;
        }
    }
    EXPECT_GT(hits, 500);
    EXPECT_GT(labelled, 100);
}

TEST(Lidar, GroundRayTrigonometry)
{
    const auto cfg = world_lidar({0, 0, 1.9}, -10.0);
    const auto scan = lidar_scan(empty_snapshot(), cfg, ExecutionMode::Replay);
    ASSERT_EQ(scan.points.size(), 360u);
    const double expected = 1.9 / std::sin(deg_to_rad(10.0));
    for (const auto& p : scan.points) {
        ASSERT_NEAR(p.range, expected, 1e-9);
        ASSERT_EQ(p.label, kNoLabel);
    }
}

TEST(Lidar, BoxAndCapsuleRanges)
{
    auto s = empty_snapshot();
    s.vehicles.push_back(parked({12.25, 0, 0}));
    auto cfg = world_lidar({0, 0, 0.75}, 0.0, 4);
    auto scan = lidar_scan(s, cfg, ExecutionMode::Replay);
    ASSERT_FALSE(scan.points.empty());
    EXPECT_NEAR(scan.points.front().range, 10.0, 1e-9);
    EXPECT_EQ(scan.points.front().label, kVehicleId);

    s.vehicles.clear();
    s.walker = pole({5, 0});
    scan = lidar_scan(s, world_lidar({0, 0, 1.0}, 0.0, 4), ExecutionMode::Replay);
    ASSERT_FALSE(scan.points.empty());
    EXPECT_NEAR(scan.points.front().range, 4.7, 1e-9);
    EXPECT_EQ(scan.points.front().label, kWalkerId);
}

TEST(Lidar, DefaultGeometry)
{
    const LidarConfig c;
    EXPECT_EQ(c.elevation_deg(0), -15.0);
    EXPECT_EQ(c.elevation_deg(31), 5.0);
    EXPECT_EQ(c.azimuth_deg(256), 90.0);
    for (int ch : {0, 10, 31})
        for (int k : {0, 100, 1023}) EXPECT_NEAR(norm(c.direction(ch, k)), 1.0, 1e-15);
    LidarConfig bad;
    bad.fov_lo_deg = 10;
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Lidar, PointsSitOnLabelledSurfaces)
{
    const auto rec = test::run_bundled("yield_aggressive").recording;
    const auto& s = rec.snapshots[200];
    const LidarConfig cfg;
    const auto scan = lidar_scan(s, cfg, ExecutionMode::Replay);
    ASSERT_FALSE(scan.points.empty());
    std::size_t walker_pts = 0;
    for (const auto& p : scan.points) {
        ASSERT_NEAR(norm(p.position), p.range, 1e-9);
        ASSERT_LE(p.range, cfg.range_max);
        const Vec3 w = scan.sensor_pose.apply(p.position);
        if (p.label == kWalkerId) {
            ++walker_pts;
            double best = 1e9;
            for (const auto& c : s.walker.capsules) best = std::min(best, std::abs(sdf_capsule(w, c)));
            ASSERT_LE(best, 1e-6);
        } else if (p.label == kNoLabel) {
            ASSERT_NEAR(w.z, 0.0, 1e-9);
        }
        ASSERT_NE(p.label, kVehicleId);  // the carrier is excluded from its own scan
    }
    EXPECT_GT(walker_pts, 0u);
    EXPECT_EQ(pedestrian_visibility(scan).count, walker_pts);
}

TEST(Lidar, HiddenOrDistantWalkerIsInvisible)
{
    auto s = empty_snapshot();
    s.walker = pole({60, 0});
    LidarConfig cfg = world_lidar({0, 0, 1.0}, -2.0, 720);
    cfg.channels = 4;
    cfg.fov_hi_deg = 2.0;
    EXPECT_EQ(pedestrian_visibility(lidar_scan(s, cfg, ExecutionMode::Replay)).count, 0u);

    s.walker = pole({15, 0});
    EXPECT_GT(pedestrian_visibility(lidar_scan(s, cfg, ExecutionMode::Replay)).count, 0u);
    // A parked vehicle between sensor and walker blocks every ray.
    auto wall = parked({8, 0, 0}, kPi / 2);
    wall.dimensions = {10.0, 1.8, 4.0};
    s.vehicles.push_back(wall);
    const auto v = pedestrian_visibility(lidar_scan(s, cfg, ExecutionMode::Replay));
    EXPECT_EQ(v.count, 0u);
    EXPECT_FALSE(v.bounds);
}

TEST(Lidar, CarrierMustExist)
{
    LidarConfig cfg;
    EXPECT_THROW(lidar_scan(empty_snapshot(), cfg, ExecutionMode::Replay), DomainError);
}

TEST(Mode, LiveCallsAreRejectedAndCounted)
{
    const auto before = invocation_counter().load();
    EXPECT_THROW(lidar_scan(empty_snapshot(), world_lidar({0, 0, 1.9}, -10), ExecutionMode::Live), ModeViolation);
    DepthCameraConfig dc;
    dc.carrier = std::nullopt;
    EXPECT_THROW(depth_render(empty_snapshot(), dc, ExecutionMode::Live), ModeViolation);
    EXPECT_EQ(invocation_counter().load(), before + 2);
    try {
        require_replay(ExecutionMode::Live, "probe");
    } catch (const ModeViolation& e) {
        EXPECT_EQ(e.family(), ErrorFamily::Runtime);
    }
}

TEST(Depth, HorizonSplitsSky)
{
    DepthCameraConfig dc;
    dc.carrier = std::nullopt;
    dc.width = 16;
    dc.height = 12;
    dc.mount = {{0, 0, 1.4}, {}};
    const auto img = depth_render(empty_snapshot(), dc, ExecutionMode::Replay);
    ASSERT_EQ(img.depth.size(), 16u * 12u);
    for (int v = 0; v < dc.height; ++v)
        for (int u = 0; u < dc.width; ++u) {
            if (v < dc.height / 2) {
                ASSERT_TRUE(std::isinf(img.at(u, v)));
            } else {
                ASSERT_TRUE(std::isfinite(img.at(u, v)));
                const Vec3 d = dc.direction(u, v);
                ASSERT_NEAR(img.at(u, v), 1.4 / -d.z, 1e-9);
            }
        }
}

TEST(Depth, CentrePixelLooksForward)
{
    DepthCameraConfig dc;
    dc.carrier = std::nullopt;
    dc.width = 65;
    dc.height = 49;
    dc.mount = {{0, 0, 0.75}, {}};
    const Vec3 d = dc.direction(32, 24);
    EXPECT_EQ(d, (Vec3{1, 0, 0}));
    auto s = empty_snapshot();
    s.vehicles.push_back(parked({12.25, 0, 0}));
    const auto img = depth_render(s, dc, ExecutionMode::Replay);
    EXPECT_NEAR(img.at(32, 24), 10.0, 1e-9);
    EXPECT_NEAR(dc.focal(), 32.5, 1e-12);
}

TEST(Depth, MatchesOracleOnSmallImage)
{
    const auto rec = test::run_bundled("yield_aggressive").recording;
    const auto& s = rec.snapshots[150];
    DepthCameraConfig dc;
    dc.width = 64;
    dc.height = 64;
    const auto img = depth_render(s, dc, ExecutionMode::Replay);
    const Transform pose = sensor_world_pose(s, dc.mount, dc.carrier);
    const Scene scene = build_scene(s, dc.carrier);
    for (int v = 0; v < dc.height; ++v)
        for (int u = 0; u < dc.width; ++u) {
            const Ray ray{pose.position, pose.rotation.rotate(dc.direction(u, v))};
            const auto want = trace(scene, ray, 1e4);
            if (!want) {
                ASSERT_TRUE(std::isinf(img.at(u, v))) << u << "," << v;
            } else {
                ASSERT_NEAR(img.at(u, v), want->distance, 1e-9) << u << "," << v;
            }
        }
}

TEST(Export, PointCloudRoundTrip)
{
    auto s = empty_snapshot(42);
    s.walker = pole({5, 1});
    const auto scan = lidar_scan(s, world_lidar({0, 0, 1.9}, -10.0, 90), ExecutionMode::Replay);
    const Bytes bin = point_cloud_binary(scan);
    EXPECT_EQ(bin.size(), 4 + 4 + 8 + 4 + 36 * scan.points.size());
    const auto back = parse_point_cloud_binary(bin);
    EXPECT_EQ(back.tick, 42u);
    EXPECT_EQ(back.points, scan.points);

    Bytes bad = bin;
    bad[0] = 'X';
    EXPECT_THROW(parse_point_cloud_binary(bad), CorruptionError);
    bad = bin;
    bad[4] = 9;
    EXPECT_THROW(parse_point_cloud_binary(bad), VersionError);
    bad = bin;
    bad.push_back(0);
    EXPECT_THROW(parse_point_cloud_binary(bad), CorruptionError);

    const std::string text = point_cloud_text(scan);
    EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), scan.points.size());
}

TEST(Export, DepthPgmLayout)
{
    DepthImage img;
    img.width = 2;
    img.height = 1;
    img.depth = {1.234, std::numeric_limits<double>::infinity()};
    const Bytes pgm = depth_pgm(img);
    const std::string head = "P5\n# depth in millimetres (1 unit = 0.001 m), 65535 = no return\n2 1\n65535\n";
    ASSERT_EQ(pgm.size(), head.size() + 4);
    EXPECT_EQ(std::string(pgm.begin(), pgm.begin() + head.size()), head);
    EXPECT_EQ(pgm[head.size()], 1234 >> 8);
    EXPECT_EQ(pgm[head.size() + 1], 1234 & 0xFF);
    EXPECT_EQ(pgm[head.size() + 2], 0xFF);
    EXPECT_EQ(pgm[head.size() + 3], 0xFF);
}
