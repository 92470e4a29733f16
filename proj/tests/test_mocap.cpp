#include <gtest/gtest.h>

#include <random>

#include "pediloop/mocap/bvh.hpp"
#include "pediloop/mocap/euler.hpp"
#include "pediloop/mocap/resample.hpp"
#include "pediloop/mocap/retarget.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace pediloop;
using namespace pediloop::mocap;
using pediloop::test::data;
using pediloop::test::slurp;

namespace {

// Single root with six channels; Z rotation on channel 3.
BvhClip single_root(std::vector<std::vector<double>> frames, double frame_time)
{
    BvhClip c;
    BvhJoint j;
    j.name = "Hips";
    j.channels = {Channel::Xposition, Channel::Yposition, Channel::Zposition,
                  Channel::Zrotation, Channel::Xrotation, Channel::Yrotation};
    j.end_site = Vec3{0, 10, 0};
    c.skeleton.joints.push_back(j);
    c.skeleton.assign_channel_offsets();
    c.frame_time = frame_time;
    c.frames = std::move(frames);
    return c;
}

// root -> mid -> tip along clip +Y, unit-length bones, rotation-only below the root.
BvhClip two_bone(double root_z_deg, double mid_x_deg)
{
    BvhClip c;
    BvhJoint root{"Root", -1, {0, 0, 0}, {Channel::Xposition, Channel::Yposition, Channel::Zposition,
                                          Channel::Zrotation, Channel::Xrotation, Channel::Yrotation}, {}, 0};
    BvhJoint mid{"Mid", 0, {0, 1, 0}, {Channel::Zrotation, Channel::Xrotation, Channel::Yrotation}, {}, 0};
    BvhJoint tip{"Tip", 1, {0, 1, 0}, {Channel::Zrotation, Channel::Xrotation, Channel::Yrotation}, Vec3{0, 1, 0}, 0};
    c.skeleton.joints = {root, mid, tip};
    c.skeleton.assign_channel_offsets();
    c.frame_time = 0.01;
    c.frames = {{0, 0, 0, root_z_deg, 0, 0, 0, mid_x_deg, 0, 0, 0, 0}};
    return c;
}

std::vector<fs::path> all_bvh_files()
{
    return {data("fixtures/minimal.bvh"), data("mocap/walk_17joint_100hz.bvh"), data("mocap/walk_17joint_55ms.bvh")};
}

double max_matrix_diff(const Mat3& a, const Mat3& b)
{
    double d = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) d = std::max(d, std::abs(a(i, j) - b(i, j)));
    return d;
}

constexpr std::array<std::array<int, 3>, 6> kOrders{{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};

} // namespace

TEST(Bvh, ParsesMinimalClip)
{
    const auto clip = load_bvh(data("fixtures/minimal.bvh"));
    ASSERT_EQ(clip.skeleton.joints.size(), 1u);
    EXPECT_EQ(clip.skeleton.joints[0].name, "Hips");
    EXPECT_EQ(clip.skeleton.channel_count(), 6u);
    EXPECT_EQ(clip.frames.size(), 2u);
    EXPECT_DOUBLE_EQ(clip.frame_time, 0.01);
    ASSERT_TRUE(clip.skeleton.joints[0].end_site.has_value());
    EXPECT_DOUBLE_EQ(clip.skeleton.joints[0].end_site->y, 10.0);
    const std::array<int, 3> zxy{2, 0, 1};
    EXPECT_EQ(clip.skeleton.joints[0].rotation_order(), zxy);
}

TEST(Bvh, BundledClipHasSeventeenJoints)
{
    const auto clip = load_bvh(data("mocap/walk_17joint_100hz.bvh"));
    EXPECT_EQ(clip.skeleton.joints.size(), 17u);
    EXPECT_EQ(clip.frames.size(), 2501u);
    EXPECT_DOUBLE_EQ(clip.frame_time, 0.01);
    for (const char* name : {"Hips", "Head", "LeftFoot", "RightHand", "LeftUpLeg"})
        EXPECT_GE(clip.skeleton.find(name), 0) << name;
    for (const auto& row : clip.frames) ASSERT_EQ(row.size(), clip.skeleton.channel_count());
}

TEST(Bvh, RoundTripWithinTolerance)
{
    for (const auto& p : all_bvh_files()) {
        SCOPED_TRACE(p.string());
        const auto a = load_bvh(p);
        const auto b = parse_bvh(write_bvh(a));
        ASSERT_EQ(a.skeleton.joints.size(), b.skeleton.joints.size());
        for (std::size_t i = 0; i < a.skeleton.joints.size(); ++i) {
            const auto& ja = a.skeleton.joints[i];
            const auto& jb = b.skeleton.joints[i];
            EXPECT_EQ(ja.name, jb.name);
            EXPECT_EQ(ja.parent, jb.parent);
            EXPECT_EQ(ja.channels, jb.channels);
            for (int k = 0; k < 3; ++k) EXPECT_NEAR(ja.offset[k], jb.offset[k], 1e-4);
            EXPECT_EQ(ja.end_site.has_value(), jb.end_site.has_value());
        }
        EXPECT_NEAR(a.frame_time, b.frame_time, 1e-9);
        ASSERT_EQ(a.frames.size(), b.frames.size());
        double worst = 0.0;
        for (std::size_t f = 0; f < a.frames.size(); ++f)
            for (std::size_t c = 0; c < a.frames[f].size(); ++c)
                worst = std::max(worst, std::abs(a.frames[f][c] - b.frames[f][c]));
        EXPECT_LE(worst, 1e-4);
    }
}

TEST(Bvh, WriterIsByteStable)
{
    for (const auto& p : all_bvh_files()) {
        const std::string once = write_bvh(load_bvh(p));
        EXPECT_EQ(once, write_bvh(parse_bvh(once))) << p;
    }
}

TEST(Bvh, EmptyMotionWritesZeroFrames)
{
    auto clip = single_root({}, 0.055);
    const std::string text = write_bvh(clip);
    EXPECT_NE(text.find("Frames: 0\n"), std::string::npos);
    const auto back = parse_bvh(text);
    EXPECT_TRUE(back.frames.empty());
    EXPECT_EQ(back.skeleton.joints.size(), 1u);
}

TEST(Bvh, WhitespaceAndLineEndingsDoNotMatter)
{
    const std::string text = slurp(data("fixtures/minimal.bvh"));
    std::string crlf;
    for (char ch : text) {
        if (ch == '\n') crlf += "\r\n";
        else if (ch == '\t') crlf += "    ";
        else crlf += ch;
    }
    EXPECT_EQ(write_bvh(parse_bvh(text)), write_bvh(parse_bvh(crlf)));
}

namespace {

void expect_parse_error(const std::string& text, BvhErrorKind kind, std::size_t line)
{
    try {
        parse_bvh(text);
        ADD_FAILURE() << "expected BvhParseError";
    } catch (const BvhParseError& e) {
        EXPECT_EQ(e.kind(), kind) << e.what();
        EXPECT_EQ(e.line(), line) << e.what();
        EXPECT_EQ(e.family(), ErrorFamily::Data);
    }
}

const char* kHead = "HIERARCHY\n"
                    "ROOT Hips\n"
                    "{\n"
                    "\tOFFSET 0 0 0\n"
                    "\tCHANNELS 3 Zrotation Xrotation Yrotation\n"
                    "\tEnd Site\n"
                    "\t{\n"
                    "\t\tOFFSET 0 1 0\n"
                    "\t}\n"
                    "}\n";

} // namespace

TEST(Bvh, ParseErrorsCarryLineNumbers)
{
    expect_parse_error(std::string(kHead), BvhErrorKind::MissingMotion, 10);
    expect_parse_error(std::string(kHead) + "MOTION\nFrames: 2\nFrame Time: 0.01\n0 0 0\n0 0\n",
                       BvhErrorKind::FrameRowLength, 15);
    expect_parse_error(std::string(kHead) + "MOTION\nFrames: 3\nFrame Time: 0.01\n0 0 0\n0 0 0\n",
                       BvhErrorKind::FrameCount, 12);
    expect_parse_error("HIERARCHY\nROOT Hips\n{\n\tOFFSET 0 0 0\n\tCHANNELS 4 Xposition Yposition Zposition\n}\n",
                       BvhErrorKind::ChannelMismatch, 5);
    expect_parse_error("HIERARCHY\nROOT Hips\n{\n\tOFFSET 0 0 0\n\tCHANNELS 1 Wrotation\n}\n",
                       BvhErrorKind::ChannelMismatch, 5);
    expect_parse_error(std::string(kHead) + "MOTION\nFrames: 1\nFrame Time: 0.01\n0 zero 0\n",
                       BvhErrorKind::Syntax, 14);
}

TEST(Resample, IdentityIsExact)
{
    const auto clip = load_bvh(data("mocap/walk_17joint_55ms.bvh"));
    const auto same = resample_clip(clip, clip.frame_time);
    ASSERT_EQ(same.frames.size(), clip.frames.size());
    EXPECT_EQ(same.frames, clip.frames);
}

TEST(Resample, LinearRootTranslation)
{
    std::vector<std::vector<double>> frames;
    for (int k = 0; k <= 100; ++k) frames.push_back({k / 100.0, 0, 0, 0, 0, 0});
    const auto out = resample_clip(single_root(frames, 0.01), 0.055);
    // floor(1.0 / 0.055) + 1
    ASSERT_EQ(out.frames.size(), 19u);
    for (std::size_t k = 0; k < out.frames.size(); ++k) EXPECT_NEAR(out.frames[k][0], 0.055 * k, 1e-6) << k;
    EXPECT_LE(1.0 - 0.055 * (out.frames.size() - 1), 0.055);
}

TEST(Resample, SlerpMidpoint)
{
    const auto out = resample_clip(single_root({{0, 0, 0, 0, 0, 0}, {0, 0, 0, 90, 0, 0}}, 1.0), 0.5);
    ASSERT_EQ(out.frames.size(), 3u);
    EXPECT_NEAR(out.frames[1][3], 45.0, 1e-6);
    EXPECT_NEAR(out.frames[1][4], 0.0, 1e-6);
    EXPECT_NEAR(out.frames[1][5], 0.0, 1e-6);
    EXPECT_NEAR(out.frames[2][3], 90.0, 1e-12);
}

TEST(Resample, RejectsBadInput)
{
    EXPECT_THROW(resample_clip(single_root({{0, 0, 0, 0, 0, 0}}, 0.01), 0.0), DomainError);
    EXPECT_THROW(resample_clip(single_root({}, 0.01), 0.055), DomainError);
}

TEST(Euler, RoundTripAllOrders)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ang(-179.0, 179.0), mid(-89.0, 89.0);
    for (const auto& order : kOrders) {
        for (int n = 0; n < 500; ++n) {
            const std::array<double, 3> e{ang(rng), mid(rng), ang(rng)};
            const Mat3 r = euler_to_matrix(order, e);
            const Mat3 back = euler_to_matrix(order, matrix_to_euler(order, r));
            ASSERT_LE(max_matrix_diff(r, back), 1e-9);
            EXPECT_LE(max_matrix_diff(euler_to_quat(order, e).to_matrix(), r), 1e-12);
            const Mat3 viaq = euler_to_matrix(order, quat_to_euler(order, Quat::from_matrix(r)));
            ASSERT_LE(max_matrix_diff(viaq, r), 1e-9);
        }
        for (double b : {90.0, -90.0}) {
            const std::array<double, 3> e{ang(rng), b, ang(rng)};
            const Mat3 r = euler_to_matrix(order, e);
            EXPECT_LE(max_matrix_diff(r, euler_to_matrix(order, matrix_to_euler(order, r))), 1e-9);
        }
    }
}

TEST(Euler, CompositionMatchesAxisProduct)
{
    const std::array<double, 3> e{30, -20, 75};
    const std::array<int, 3> order{2, 0, 1};
    const Mat3 expected =
        axis_rotation(2, deg_to_rad(30)) * axis_rotation(0, deg_to_rad(-20)) * axis_rotation(1, deg_to_rad(75));
    EXPECT_LE(max_matrix_diff(euler_to_matrix(order, e), expected), 1e-15);
}

TEST(AxisMap, EverySignedPermutationInvertsAndValidates)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5, 5);
    std::array<int, 3> perm{0, 1, 2};
    int proper = 0;
    do {
        for (int s = 0; s < 8; ++s) {
            AxisMap m;
            m.source = perm;
            for (int i = 0; i < 3; ++i) m.sign[i] = (s >> i) & 1 ? -1.0 : 1.0;
            const bool reflects = m.matrix().determinant() < 0.0;
            m.mirrored = reflects;
            EXPECT_NO_THROW(m.validate());
            if (!reflects) ++proper;
            for (int n = 0; n < 20; ++n) {
                const Vec3 v{u(rng), u(rng), u(rng)};
                const Vec3 back = m.apply_inverse(m.apply(v));
                EXPECT_LE(norm(back - v), 1e-9);
            }
            m.mirrored = !reflects;
            EXPECT_THROW(m.validate(), ConfigError);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_EQ(proper, 24);
}

TEST(AxisMap, ParsesSpecs)
{
    const auto m = parse_axis_map("z,x,y", false);
    EXPECT_EQ(m.source, AxisMap::y_up_to_z_up().source);
    const auto v = m.apply(Vec3{1, 2, 3});
    EXPECT_EQ(v, (Vec3{3, 1, 2}));
    EXPECT_THROW(parse_axis_map("x,x,y", false), ConfigError);
    EXPECT_THROW(parse_axis_map("-x,y,z", false), ConfigError);
    EXPECT_NO_THROW(parse_axis_map("-x,y,z", true));
    EXPECT_THROW(parse_axis_map("x,y", false), ConfigError);
}

TEST(ForwardKinematics, TwoBoneChainMatchesHandProduct)
{
    const auto clip = two_bone(90.0, 90.0);
    const auto cfg = RetargetConfig::identity_for(clip.skeleton, 1.0, AxisMap::identity());
    const auto pose = forward_kinematics(clip, 0, cfg);
    // Clip space: Rz(90) sends +Y to -X, so Mid sits at (-1,0,0). Rz(90)Rx(90) sends +Y to (0,0,1).
    const Vec3 mid{-1, 0, 0};
    const Vec3 tip = mid + Vec3{0, 0, 1};
    EXPECT_LE(norm(pose.world[1].position - mid), 1e-12);
    EXPECT_LE(norm(pose.world[2].position - tip), 1e-12);
    const Mat3 r = axis_rotation(2, kPi / 2) * axis_rotation(0, kPi / 2);
    EXPECT_LE(max_matrix_diff(pose.world[2].rotation.to_matrix(), r), 1e-12);
    // End site capsule continues along the same direction.
    ASSERT_EQ(pose.capsules.size(), 3u);
    EXPECT_LE(norm(pose.capsules[2].b - (tip + Vec3{0, 0, 1})), 1e-12);

    // The same chain in world axes: world = (clip.z, clip.x, clip.y).
    const auto cfg_z = RetargetConfig::identity_for(clip.skeleton, 1.0, AxisMap::y_up_to_z_up());
    const auto pose_z = forward_kinematics(clip, 0, cfg_z);
    EXPECT_LE(norm(pose_z.world[1].position - Vec3{0, -1, 0}), 1e-12);
    EXPECT_LE(norm(pose_z.world[2].position - Vec3{1, -1, 0}), 1e-12);
}

TEST(ForwardKinematics, UnitScaleIsLinear)
{
    const auto clip = load_bvh(data("mocap/walk_17joint_100hz.bvh"));
    const auto a = forward_kinematics(clip, 250, RetargetConfig::identity_for(clip.skeleton, 1.0));
    const auto b = forward_kinematics(clip, 250, RetargetConfig::identity_for(clip.skeleton, 0.01));
    for (std::size_t i = 0; i < a.world.size(); ++i)
        for (int k = 0; k < 3; ++k)
            EXPECT_NEAR(b.world[i].position[k], a.world[i].position[k] / 100.0,
                        1e-12 * std::max(1.0, std::abs(a.world[i].position[k])));
}

TEST(ForwardKinematics, BonesStayRigid)
{
    const auto clip = load_bvh(data("mocap/walk_17joint_100hz.bvh"));
    const double scale = 0.01;
    const auto cfg = RetargetConfig::identity_for(clip.skeleton, scale);
    std::vector<double> rest;
    for (const auto& j : clip.skeleton.joints) rest.push_back(norm(j.offset) * scale);
    for (std::size_t f = 0; f < clip.frames.size(); f += 7) {
        const auto pose = forward_kinematics(clip, f, cfg);
        for (std::size_t i = 1; i < clip.skeleton.joints.size(); ++i) {
            const int p = clip.skeleton.joints[i].parent;
            const double len = norm(pose.world[i].position - pose.world[p].position);
            ASSERT_LE(std::abs(len - rest[i]), 1e-6 * scale) << "frame " << f << " joint " << i;
        }
    }
}

TEST(Avatar, BuiltFromClip)
{
    const auto clip = load_bvh(data("mocap/walk_17joint_100hz.bvh"));
    const auto av = make_avatar(clip, 0.01, AxisMap::y_up_to_z_up());
    EXPECT_EQ(av.joints.size(), 17u);
    EXPECT_EQ(av.joints[0].offset.x, 0.0);
    EXPECT_EQ(av.joints[0].offset.y, 0.0);
    EXPECT_GT(av.joints[0].offset.z, 0.5);
    EXPECT_LT(av.joints[0].offset.z, 1.5);
    for (const auto& b : av.bones) {
        const auto& name = b.child >= 0 ? av.joints[b.child].name : av.joints[b.joint].name;
        if (av.joints[b.joint].name == "Head") EXPECT_DOUBLE_EQ(b.radius, 0.12);
        if (name == "LeftForeArm") EXPECT_DOUBLE_EQ(b.radius, 0.07);
        if (name == "Spine") EXPECT_DOUBLE_EQ(b.radius, 0.18);
    }
}

TEST(Retarget, IdentityPoseGivesBindPose)
{
    BvhClip clip = two_bone(0.0, 0.0);
    clip.skeleton.joints[0].offset = {0, 90, 0};
    clip.frames.assign(12, std::vector<double>(12, 0.0));
    const AxisMap axes = AxisMap::y_up_to_z_up();
    const auto av = make_avatar(clip, 0.01, axes);
    const auto track = retarget_clip(clip, RetargetConfig::identity_for(clip.skeleton, 0.01, axes), av,
                                     std::chrono::milliseconds(55));
    const auto bind = av.bind_pose();
    ASSERT_EQ(track.frames.size(), 12u);
    for (const auto& tf : track.frames) {
        ASSERT_EQ(tf.joints.size(), bind.size());
        for (std::size_t i = 0; i < bind.size(); ++i) {
            EXPECT_LE(norm(tf.joints[i].position - bind[i].position), 1e-12);
            EXPECT_LE(angle_between(tf.joints[i].rotation, Quat{}), 1e-9);
        }
    }
}

TEST(Retarget, BundledWalkIsContinuous)
{
    const auto rs = app::load_retarget_settings(data("mocap/retarget.ini"));
    const auto clip = load_bvh(data("mocap/walk_17joint_100hz.bvh"));
    const auto av = make_avatar(clip, rs.unit_scale, rs.axis_map);
    const auto track = retarget_to_avatar(clip, rs.config_for(clip.skeleton, av), av, std::chrono::milliseconds(55));
    ASSERT_EQ(track.frames.size(), 455u);
    EXPECT_EQ(track.dt, std::chrono::milliseconds(55));
    for (std::size_t k = 1; k < track.frames.size(); ++k) {
        const Vec3 d = track.frames[k].joints[0].position - track.frames[k - 1].joints[0].position;
        ASSERT_LT(std::hypot(d.x, d.y), 0.2) << k;
        for (const auto& j : track.frames[k].joints) ASSERT_TRUE(is_unit(j.rotation, 1e-9));
    }
}

TEST(Retarget, MissingJointIsNamed)
{
    const auto clip = load_bvh(data("mocap/walk_17joint_100hz.bvh"));
    const AxisMap axes = AxisMap::y_up_to_z_up();
    const auto av = make_avatar(clip, 0.01, axes);
    auto cfg = RetargetConfig::identity_for(clip.skeleton, 0.01, axes);
    cfg.joint_name_map.erase("LeftFoot");
    try {
        retarget_clip(clip, cfg, av, std::chrono::milliseconds(55));
        FAIL() << "expected RetargetError";
    } catch (const RetargetError& e) {
        EXPECT_NE(std::string(e.what()).find("LeftFoot"), std::string::npos);
        EXPECT_EQ(e.family(), ErrorFamily::Data);
    }
}
