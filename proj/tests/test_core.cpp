#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pediloop/core/bytes.hpp"
#include "pediloop/core/digest.hpp"
#include "pediloop/core/error.hpp"
#include "pediloop/core/math.hpp"
#include "pediloop/core/shapes.hpp"

using namespace pediloop;

TEST(Math, WrapAngle)
{
    EXPECT_DOUBLE_EQ(wrap_angle(3 * kPi), kPi);
    EXPECT_NEAR(wrap_angle(-3 * kPi / 2), kPi / 2, 1e-12);
    EXPECT_DOUBLE_EQ(wrap_angle(0.25), 0.25);
}

TEST(Math, YawQuaternionRotatesCounterClockwise)
{
    const Quat q = Quat::from_yaw(kPi / 2);
    const Vec3 v = q.rotate({1, 0, 0});
    EXPECT_NEAR(v.x, 0.0, 1e-15);
    EXPECT_NEAR(v.y, 1.0, 1e-15);
    EXPECT_NEAR(q.yaw(), kPi / 2, 1e-15);
}

TEST(Math, MatrixRoundTrip)
{
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n;
    for (int i = 0; i < 200; ++i) {
        const Quat q = Quat{n(rng), n(rng), n(rng), n(rng)}.normalized();
        const Quat back = Quat::from_matrix(q.to_matrix());
        EXPECT_NEAR(std::abs(q.dot(back)), 1.0, 1e-12);
        const Vec3 v{n(rng), n(rng), n(rng)};
        const Vec3 a = q.rotate(v), b = q.to_matrix() * v;
        EXPECT_NEAR(norm(a - b), 0.0, 1e-12);
    }
}

TEST(Math, TransformInverseComposesToIdentity)
{
    const Transform t{{1, -2, 3}, Quat::from_axis_angle({1, 2, 3}, 0.7)};
    const Transform i = t * t.inverse();
    EXPECT_NEAR(norm(i.position), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(i.rotation.w), 1.0, 1e-12);
}

TEST(Math, SlerpMidpointBisectsAngle)
{
    const Quat a{}, b = Quat::from_yaw(kPi / 2);
    EXPECT_NEAR(slerp(a, b, 0.5).yaw(), kPi / 4, 1e-15);
    EXPECT_NEAR(angle_between(a, b), kPi / 2, 1e-12);
}

TEST(Bytes, LittleEndianLayout)
{
    ByteWriter w;
    w.u32(0x01020304u);
    w.f64(-0.0);
    const Bytes b = std::move(w).take();
    ASSERT_EQ(b.size(), 12u);
    EXPECT_EQ(b[0], 0x04);
    EXPECT_EQ(b[3], 0x01);
    for (int i = 4; i < 12; ++i) EXPECT_EQ(b[i], 0) << "negative zero is canonicalized";
}

TEST(Bytes, ReaderUnderflowIsCorruption)
{
    const Bytes b{1, 2, 3};
    ByteReader r(b);
    EXPECT_THROW(r.u32(), CorruptionError);
}

TEST(Digest, KnownSha256Vectors)
{
    EXPECT_EQ(to_hex(sha256(std::string_view{})), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(to_hex(sha256(std::string_view{"abc"})), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Shapes, SegmentDistance)
{
    EXPECT_DOUBLE_EQ(distance_to_segment({0, 0, 0}, {2, 0, 0}, {1, 3, 0}), 3.0);
    EXPECT_DOUBLE_EQ(distance_to_segment({0, 0, 0}, {2, 0, 0}, {-4, 3, 0}), 5.0);
}

TEST(Errors, FamiliesMapToStableGroups)
{
    EXPECT_EQ(ConfigError("x").family(), ErrorFamily::Config);
    EXPECT_EQ(CorruptionError("x").family(), ErrorFamily::Data);
    EXPECT_EQ(ProtocolError("x").family(), ErrorFamily::Runtime);
    EXPECT_EQ(ParseError("bad", 3, 7).line(), 3u);
    EXPECT_STREQ(ParseError("bad", 3, 7).what(), "line 3, column 7: bad");
}
