#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "pediloop/app/config.hpp"
#include "pediloop/app/live.hpp"

namespace pediloop::test {

namespace fs = std::filesystem;

inline fs::path data(const std::string& rel) { return fs::path(PEDILOOP_DATA_DIR) / rel; }

inline std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const fs::path& p, const std::string& s)
{
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = fs::temp_directory_path() /
                ("pediloop_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const noexcept { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

inline app::RunConfig bundled(const std::string& scenario) { return app::load_run_config(data("scenarios/" + scenario + ".ini")); }

inline app::Script crossing_script() { return app::Script::load(data("scripts/crossing.script")); }

inline app::LiveResult run_bundled(const std::string& scenario)
{
    app::LiveOptions opts;
    opts.script = crossing_script();
    const auto rc = bundled(scenario);
    opts.max_ticks = rc.max_ticks;
    return app::run_live(rc, std::move(opts));
}

inline constexpr const char* kScenarios[] = {"yield_aggressive", "yield_conservative", "ignore"};

} // namespace pediloop::test
