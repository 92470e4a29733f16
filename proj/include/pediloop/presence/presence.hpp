#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pediloop/core/error.hpp"

namespace pediloop::presence {

inline constexpr int kItemCount = 15;
inline constexpr int kLikertMin = 1;
inline constexpr int kLikertMax = 5;

struct PresenceResponse {
    std::string participant;
    std::array<int, kItemCount> answers{};

    bool operator==(const PresenceResponse&) const = default;
};

struct Subscale {
    const char* name;
    int first_item;  // 1-based, inclusive
    int last_item;
};

inline constexpr std::array<Subscale, 3> kSubscales{{
    {"self-presence", 1, 5},
    {"autonomous-vehicle presence", 6, 10},
    {"environmental presence", 11, 15},
}};

struct SubscaleStats {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation (n - 1); 0 for a single participant
    std::size_t n = 0;

    bool operator==(const SubscaleStats&) const = default;
};

inline void validate_response(const PresenceResponse& r)
{
    for (int i = 0; i < kItemCount; ++i) {
        const int a = r.answers[static_cast<std::size_t>(i)];
        if (a < kLikertMin || a > kLikertMax)
            throw ValidationError("participant " + r.participant + ", item " + std::to_string(i + 1) + ": answer " +
                                  std::to_string(a) + " outside [1, 5]");
    }
}

inline double sample_sd(const std::vector<double>& xs)
{
    if (xs.size() < 2) return 0.0;
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

/// Per participant the subscale score is the mean of its five items; M and SD are taken across participants.
inline std::array<SubscaleStats, 3> score_subscales(const std::vector<PresenceResponse>& responses)
{
    if (responses.empty()) throw DomainError("no presence responses to score");
    for (const auto& r : responses) validate_response(r);
    std::array<SubscaleStats, 3> out;
    for (std::size_t s = 0; s < kSubscales.size(); ++s) {
        const auto& sub = kSubscales[s];
        std::vector<double> scores;
        scores.reserve(responses.size());
        for (const auto& r : responses) {
            int sum = 0;
            for (int i = sub.first_item; i <= sub.last_item; ++i) sum += r.answers[static_cast<std::size_t>(i - 1)];
            scores.push_back(static_cast<double>(sum) / (sub.last_item - sub.first_item + 1));
        }
        double m = 0.0;
        for (double x : scores) m += x;
        out[s] = {sub.name, m / static_cast<double>(scores.size()), sample_sd(scores), scores.size()};
    }
    return out;
}

inline std::vector<int> all_items()
{
    std::vector<int> v(kItemCount);
    for (int i = 0; i < kItemCount; ++i) v[static_cast<std::size_t>(i)] = i + 1;
    return v;
}

/// Cronbach's alpha over the given 1-based items. Computed from integer sums,
/// so the only rounding is the final division and perfectly consistent data gives exactly 1.
inline double cronbach_alpha(const std::vector<PresenceResponse>& responses, const std::vector<int>& items)
{
    const auto k = static_cast<std::int64_t>(items.size());
    const auto n = static_cast<std::int64_t>(responses.size());
    if (k < 2) throw DomainError("Cronbach's alpha needs at least 2 items, got " + std::to_string(k));
    if (n < 2) throw DomainError("Cronbach's alpha needs at least 2 participants, got " + std::to_string(n));
    std::set<int> seen;
    for (int i : items) {
        if (i < 1 || i > kItemCount) throw DomainError("item " + std::to_string(i) + " outside 1..15");
        if (!seen.insert(i).second) throw DomainError("item " + std::to_string(i) + " listed twice");
    }
    for (const auto& r : responses) validate_response(r);

    // n(n-1) * variance = n * sum(x^2) - (sum x)^2, exact in integers.
    std::int64_t item_terms = 0;
    std::int64_t total_sum = 0, total_sq = 0;
    for (int i : items) {
        std::int64_t s = 0, q = 0;
        for (const auto& r : responses) {
            const std::int64_t x = r.answers[static_cast<std::size_t>(i - 1)];
            s += x;
            q += x * x;
        }
        item_terms += n * q - s * s;
    }
    for (const auto& r : responses) {
        std::int64_t t = 0;
        for (int i : items) t += r.answers[static_cast<std::size_t>(i - 1)];
        total_sum += t;
        total_sq += t * t;
    }
    const std::int64_t total_term = n * total_sq - total_sum * total_sum;
    if (total_term == 0) throw DegenerateDataError("total-score variance is zero; alpha is undefined");
    return static_cast<double>(k * (total_term - item_terms)) / static_cast<double>((k - 1) * total_term);
}

inline double cronbach_alpha(const std::vector<PresenceResponse>& responses) { return cronbach_alpha(responses, all_items()); }

/// Real-valued alpha over a participants x items matrix, sample variances throughout.
inline double cronbach_alpha(const std::vector<std::vector<double>>& data)
{
    const std::size_t n = data.size();
    if (n < 2) throw DomainError("Cronbach's alpha needs at least 2 participants");
    const std::size_t k = data.front().size();
    if (k < 2) throw DomainError("Cronbach's alpha needs at least 2 items");
    for (const auto& row : data)
        if (row.size() != k) throw DomainError("ragged response matrix");
    std::vector<double> totals(n, 0.0);
    double item_var = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) {
            col[i] = data[i][j];
            totals[i] += data[i][j];
        }
        const double sd = sample_sd(col);
        item_var += sd * sd;
    }
    const double tsd = sample_sd(totals);
    const double total_var = tsd * tsd;
    if (!(total_var > 0.0)) throw DegenerateDataError("total-score variance is zero; alpha is undefined");
    const double kk = static_cast<double>(k);
    return kk / (kk - 1.0) * (1.0 - item_var / total_var);
}

/// Comma-separated responses: a header row "participant,q1,...,q15", then one row per participant.
/// Errors name the 1-based line number.
inline std::vector<PresenceResponse> parse_responses_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    std::size_t row = 0;
    std::vector<PresenceResponse> out;
    auto split = [](const std::string& l) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(l);
        while (std::getline(ls, cell, ',')) {
            const auto b = cell.find_first_not_of(" \t\r");
            const auto e = cell.find_last_not_of(" \t\r");
            cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
        }
        if (!l.empty() && l.back() == ',') cells.emplace_back();
        return cells;
    };
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto cells = split(line);
        if (!header_seen) {
            header_seen = true;
            bool ok = cells.size() == kItemCount + 1 && cells[0] == "participant";
            for (int i = 1; ok && i <= kItemCount; ++i) ok = cells[static_cast<std::size_t>(i)] == "q" + std::to_string(i);
            if (!ok) throw ValidationError("row " + std::to_string(row) + ": header must be participant,q1,...,q15");
            continue;
        }
        if (cells.size() != kItemCount + 1)
            throw ValidationError("row " + std::to_string(row) + ": expected 16 fields, found " + std::to_string(cells.size()));
        PresenceResponse r;
        r.participant = cells[0];
        if (r.participant.empty()) throw ValidationError("row " + std::to_string(row) + ": empty participant id");
        for (int i = 0; i < kItemCount; ++i) {
            const std::string& c = cells[static_cast<std::size_t>(i + 1)];
            int v = 0;
            std::size_t used = 0;
            try {
                v = std::stoi(c, &used);
            } catch (const std::logic_error&) {
                used = 0;
            }
            if (c.empty() || used != c.size())
                throw ValidationError("row " + std::to_string(row) + ", item " + std::to_string(i + 1) +
                                      ": not an integer: '" + c + "'");
            if (v < kLikertMin || v > kLikertMax)
                throw ValidationError("row " + std::to_string(row) + " (participant " + r.participant + "), item " +
                                      std::to_string(i + 1) + ": answer " + std::to_string(v) + " outside [1, 5]");
            r.answers[static_cast<std::size_t>(i)] = v;
        }
        out.push_back(std::move(r));
    }
    if (!header_seen) throw ValidationError("row 1: missing header");
    return out;
}

inline std::vector<PresenceResponse> load_responses_csv(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open response file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_responses_csv(ss.str());
}

/// Fixed decimals; values below one drop the leading zero (".953").
inline std::string format_stat(double v, int decimals)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    if (s.rfind("0.", 0) == 0) s.erase(0, 1);
    else if (s.rfind("-0.", 0) == 0) s.erase(1, 1);
    return s;
}

inline std::string format_subscale(const SubscaleStats& s)
{
    return s.name + " (M=" + format_stat(s.mean, 2) + ", SD=" + format_stat(s.sd, 3) + ")";
}

} // namespace pediloop::presence
