#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pediloop/core/error.hpp"
#include "pediloop/core/math.hpp"

namespace pediloop::mocap {

enum class Channel { Xposition, Yposition, Zposition, Xrotation, Yrotation, Zrotation };

constexpr bool is_rotation(Channel c) noexcept { return c >= Channel::Xrotation; }
constexpr int channel_axis(Channel c) noexcept { return static_cast<int>(c) % 3; }

inline std::string_view channel_name(Channel c) noexcept
{
    static constexpr std::array<std::string_view, 6> kNames{"Xposition", "Yposition", "Zposition",
                                                            "Xrotation", "Yrotation", "Zrotation"};
    return kNames[static_cast<std::size_t>(c)];
}

inline std::optional<Channel> parse_channel(std::string_view s) noexcept
{
    for (int i = 0; i < 6; ++i)
        if (channel_name(static_cast<Channel>(i)) == s) return static_cast<Channel>(i);
    return std::nullopt;
}

struct BvhJoint {
    std::string name;
    int parent = -1;
    Vec3 offset{};
    std::vector<Channel> channels;
    std::optional<Vec3> end_site;
    std::size_t channel_offset = 0;  // index of this joint's first channel in a frame row

    /// Axes of the rotation channels in declared order; R = R[0] * R[1] * R[2].
    std::array<int, 3> rotation_order() const noexcept
    {
        std::array<int, 3> order{0, 1, 2};
        int k = 0;
        for (auto c : channels)
            if (is_rotation(c) && k < 3) order[k++] = channel_axis(c);
        return order;
    }
};

struct BvhSkeleton {
    std::vector<BvhJoint> joints;

    std::size_t channel_count() const noexcept
    {
        std::size_t n = 0;
        for (const auto& j : joints) n += j.channels.size();
        return n;
    }

    int find(std::string_view name) const noexcept
    {
        for (std::size_t i = 0; i < joints.size(); ++i)
            if (joints[i].name == name) return static_cast<int>(i);
        return -1;
    }

    std::vector<int> children_of(int parent) const
    {
        std::vector<int> out;
        for (std::size_t i = 0; i < joints.size(); ++i)
            if (joints[i].parent == parent) out.push_back(static_cast<int>(i));
        return out;
    }

    /// Recompute channel offsets from declaration order.
    void assign_channel_offsets() noexcept
    {
        std::size_t k = 0;
        for (auto& j : joints) {
            j.channel_offset = k;
            k += j.channels.size();
        }
    }
};

struct BvhClip {
    BvhSkeleton skeleton;
    double frame_time = 0.0;
    std::vector<std::vector<double>> frames;

    double duration() const noexcept
    {
        return frames.empty() ? 0.0 : static_cast<double>(frames.size() - 1) * frame_time;
    }
};

enum class BvhErrorKind { Syntax, Hierarchy, ChannelMismatch, MissingMotion, FrameCount, FrameRowLength };

class BvhParseError : public ParseError {
public:
    BvhParseError(BvhErrorKind kind, const std::string& what, std::size_t line) : ParseError(what, line), kind_(kind) {}
    BvhErrorKind kind() const noexcept { return kind_; }

private:
    BvhErrorKind kind_;
};

namespace detail {

struct Token {
    std::string_view text;
    std::size_t line = 0;
};

inline std::vector<Token> tokenize(std::string_view text)
{
    std::vector<Token> out;
    std::size_t line = 1, i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '\n') { ++line; ++i; continue; }
        if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
        const std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        out.push_back({text.substr(start, i - start), line});
    }
    return out;
}

class BvhReader {
public:
    explicit BvhReader(std::string_view text) : toks_(tokenize(text)) {}

    BvhClip read()
    {
        BvhClip clip;
        expect("HIERARCHY", BvhErrorKind::Hierarchy);
        if (!peek_is("ROOT")) fail(BvhErrorKind::Hierarchy, "expected ROOT");
        next();
        read_joint(clip.skeleton, -1);
        if (peek_is("ROOT")) fail(BvhErrorKind::Hierarchy, "more than one ROOT joint");
        clip.skeleton.assign_channel_offsets();

        if (at_end() || !peek_is("MOTION"))
            fail(BvhErrorKind::MissingMotion, at_end() ? "missing MOTION section" : "expected MOTION after hierarchy");
        next();
        expect("Frames:", BvhErrorKind::MissingMotion);
        const Token count_tok = next_or(BvhErrorKind::MissingMotion, "missing frame count");
        const double count_d = number(count_tok, BvhErrorKind::MissingMotion);
        if (count_d < 0 || count_d != std::floor(count_d))
            fail_at(count_tok.line, BvhErrorKind::MissingMotion, "frame count must be a non-negative integer");
        expect("Frame", BvhErrorKind::MissingMotion);
        expect("Time:", BvhErrorKind::MissingMotion);
        const Token ft_tok = next_or(BvhErrorKind::MissingMotion, "missing frame time");
        clip.frame_time = number(ft_tok, BvhErrorKind::MissingMotion);
        if (!(clip.frame_time > 0.0)) fail_at(ft_tok.line, BvhErrorKind::MissingMotion, "frame time must be positive");

        const std::size_t width = clip.skeleton.channel_count();
        const auto declared = static_cast<std::size_t>(count_d);
        clip.frames.reserve(declared);
        while (!at_end()) {
            const std::size_t line = toks_[pos_].line;
            std::vector<double> row;
            row.reserve(width);
            while (!at_end() && toks_[pos_].line == line) row.push_back(number(toks_[pos_++], BvhErrorKind::Syntax));
            if (row.size() != width)
                fail_at(line, BvhErrorKind::FrameRowLength,
                        "frame row has " + std::to_string(row.size()) + " values, expected " + std::to_string(width));
            clip.frames.push_back(std::move(row));
        }
        if (clip.frames.size() != declared)
            fail_at(count_tok.line, BvhErrorKind::FrameCount,
                    "declared " + std::to_string(declared) + " frames, found " + std::to_string(clip.frames.size()));
        return clip;
    }

private:
    void read_joint(BvhSkeleton& skel, int parent)
    {
        const Token nm = next_or(BvhErrorKind::Hierarchy, "missing joint name");
        BvhJoint joint;
        joint.name = std::string(nm.text);
        joint.parent = parent;
        const int index = static_cast<int>(skel.joints.size());
        skel.joints.push_back(joint);

        expect("{", BvhErrorKind::Hierarchy);
        bool have_offset = false, have_channels = false;
        while (true) {
            const Token t = next_or(BvhErrorKind::Hierarchy, "unterminated joint '" + joint.name + "'");
            if (t.text == "}") break;
            if (t.text == "OFFSET") {
                skel.joints[index].offset = read_vec3();
                have_offset = true;
            } else if (t.text == "CHANNELS") {
                skel.joints[index].channels = read_channels(t.line, skel.joints[index].name);
                have_channels = true;
            } else if (t.text == "JOINT") {
                read_joint(skel, index);
            } else if (t.text == "End") {
                expect("Site", BvhErrorKind::Hierarchy);
                if (skel.joints[index].end_site)
                    fail_at(t.line, BvhErrorKind::Hierarchy, "joint '" + joint.name + "' has more than one End Site");
                expect("{", BvhErrorKind::Hierarchy);
                expect("OFFSET", BvhErrorKind::Hierarchy);
                skel.joints[index].end_site = read_vec3();
                expect("}", BvhErrorKind::Hierarchy);
            } else {
                fail_at(t.line, BvhErrorKind::Hierarchy, "unexpected token '" + std::string(t.text) + "'");
            }
        }
        if (!have_offset) fail_at(nm.line, BvhErrorKind::Hierarchy, "joint '" + joint.name + "' has no OFFSET");
        if (!have_channels)
            fail_at(nm.line, BvhErrorKind::ChannelMismatch, "joint '" + joint.name + "' has no CHANNELS");
    }

    std::vector<Channel> read_channels(std::size_t line, const std::string& joint)
    {
        const Token n_tok = next_or(BvhErrorKind::ChannelMismatch, "missing channel count");
        const double nd = number(n_tok, BvhErrorKind::ChannelMismatch);
        if (nd != 3 && nd != 6)
            fail_at(line, BvhErrorKind::ChannelMismatch, "joint '" + joint + "' declares " + std::string(n_tok.text) +
                                                             " channels; only 3 or 6 are supported");
        const int n = static_cast<int>(nd);
        std::vector<Channel> chans;
        int rot_mask = 0, pos_mask = 0;
        for (int i = 0; i < n; ++i) {
            const Token t = next_or(BvhErrorKind::ChannelMismatch, "missing channel name");
            const auto c = parse_channel(t.text);
            if (!c)
                fail_at(t.line, BvhErrorKind::ChannelMismatch,
                        "joint '" + joint + "' declares " + std::to_string(n) + " channels but '" +
                            std::string(t.text) + "' is not a channel name");
            const int bit = 1 << channel_axis(*c);
            int& mask = is_rotation(*c) ? rot_mask : pos_mask;
            if (mask & bit) fail_at(t.line, BvhErrorKind::ChannelMismatch, "duplicate channel on joint '" + joint + "'");
            mask |= bit;
            chans.push_back(*c);
        }
        if (rot_mask != 7 || (n == 6 && pos_mask != 7))
            fail_at(line, BvhErrorKind::ChannelMismatch,
                    "joint '" + joint + "' needs three rotation channels (and three position channels when 6)");
        return chans;
    }

    Vec3 read_vec3()
    {
        Vec3 v;
        for (int i = 0; i < 3; ++i) v[i] = number(next_or(BvhErrorKind::Hierarchy, "OFFSET needs three values"),
                                                  BvhErrorKind::Hierarchy);
        return v;
    }

    double number(const Token& t, BvhErrorKind kind) const
    {
        std::string_view s = t.text;
        if (!s.empty() && s.front() == '+') s.remove_prefix(1);
        double v = 0.0;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
            fail_at(t.line, kind, "expected a number, found '" + std::string(t.text) + "'");
        return v;
    }

    bool at_end() const noexcept { return pos_ >= toks_.size(); }
    bool peek_is(std::string_view s) const noexcept { return !at_end() && toks_[pos_].text == s; }
    Token next() { return toks_[pos_++]; }

    Token next_or(BvhErrorKind kind, const std::string& what)
    {
        if (at_end()) fail(kind, what);
        return next();
    }

    void expect(std::string_view s, BvhErrorKind kind)
    {
        if (at_end()) fail(kind, "expected '" + std::string(s) + "' before end of file");
        const Token t = next();
        if (t.text != s) fail_at(t.line, kind, "expected '" + std::string(s) + "', found '" + std::string(t.text) + "'");
    }

    [[noreturn]] void fail(BvhErrorKind kind, const std::string& what) const
    {
        const std::size_t line = at_end() ? (toks_.empty() ? 1 : toks_.back().line) : toks_[pos_].line;
        fail_at(line, kind, what);
    }

    [[noreturn]] void fail_at(std::size_t line, BvhErrorKind kind, const std::string& what) const
    {
        throw BvhParseError(kind, what, line);
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

inline void put_number(std::string& out, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string_view s(buf);
    // "-0.000000" would make equal clips serialize differently.
    if (s.size() > 1 && s.front() == '-' && s.find_first_not_of("-0.") == std::string_view::npos) s.remove_prefix(1);
    out.append(s);
}

inline void write_joint(std::string& out, const BvhSkeleton& skel, int index, int depth)
{
    const auto& j = skel.joints[index];
    const std::string ind(depth, '\t');
    out += ind + (j.parent < 0 ? "ROOT " : "JOINT ") + j.name + "\n" + ind + "{\n";
    out += ind + "\tOFFSET ";
    for (int i = 0; i < 3; ++i) {
        if (i) out += ' ';
        put_number(out, j.offset[i]);
    }
    out += "\n" + ind + "\tCHANNELS " + std::to_string(j.channels.size());
    for (auto c : j.channels) out += " " + std::string(channel_name(c));
    out += "\n";
    for (int c : skel.children_of(index)) write_joint(out, skel, c, depth + 1);
    if (j.end_site) {
        out += ind + "\tEnd Site\n" + ind + "\t{\n" + ind + "\t\tOFFSET ";
        for (int i = 0; i < 3; ++i) {
            if (i) out += ' ';
            put_number(out, (*j.end_site)[i]);
        }
        out += "\n" + ind + "\t}\n";
    }
    out += ind + "}\n";
}

inline void dfs_order(const BvhSkeleton& skel, int index, std::vector<int>& order)
{
    order.push_back(index);
    for (int c : skel.children_of(index)) dfs_order(skel, c, order);
}

} // namespace detail

inline BvhClip parse_bvh(std::string_view text) { return detail::BvhReader(text).read(); }

inline BvhClip load_bvh(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open BVH file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_bvh(ss.str());
}

/// Canonical BVH text: tab indentation, six decimals, columns in hierarchy order.
inline std::string write_bvh(const BvhClip& clip)
{
    const auto& skel = clip.skeleton;
    std::string out = "HIERARCHY\n";
    std::vector<int> order;
    for (std::size_t i = 0; i < skel.joints.size(); ++i) {
        if (skel.joints[i].parent < 0) {
            detail::write_joint(out, skel, static_cast<int>(i), 0);
            detail::dfs_order(skel, static_cast<int>(i), order);
        }
    }
    out += "MOTION\nFrames: " + std::to_string(clip.frames.size()) + "\nFrame Time: ";
    detail::put_number(out, clip.frame_time);
    out += "\n";
    for (const auto& row : clip.frames) {
        bool first = true;
        for (int j : order) {
            const auto& joint = skel.joints[j];
            for (std::size_t c = 0; c < joint.channels.size(); ++c) {
                if (!first) out += ' ';
                first = false;
                detail::put_number(out, row[joint.channel_offset + c]);
            }
        }
        out += "\n";
    }
    return out;
}

} // namespace pediloop::mocap
