#include <atomic>
#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "pediloop/app/commands.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

} // namespace

int main(int argc, char** argv)
{
    using namespace pediloop::app;

    CLI::App app{"pediloop: pedestrian-in-the-loop crossing harness"};
    app.require_subcommand(1);
    app.footer("Exit codes: 0 ok, 2 usage/config, 3 data integrity, 4 protocol/runtime.\n"
               "The run config may also be given through PEDILOOP_CONFIG.");

    LiveArgs live;
    std::string live_config, live_out = "run.plrec", live_script, live_timing;
    int live_port = -1;
    long long live_max = -1;
    auto* c_live = app.add_subcommand("live", "Run a scenario live with sensors off and write a recording");
    c_live->add_option("-c,--config", live_config, "Run config (INI)");
    c_live->add_option("-o,--out", live_out, "Recording output path")->capture_default_str();
    c_live->add_option("-s,--script", live_script, "Headless input script")->check(CLI::ExistingFile);
    c_live->add_option("--timing-json", live_timing, "Also write the timing report as JSON");
    c_live->add_flag("--realtime", live.realtime, "Pace ticks to wall-clock dt");
    c_live->add_flag("--serve", live.serve, "Start the network gateway");
    c_live->add_option("--port", live_port, "Gateway port (0 picks a free one)")->check(CLI::Range(0, 65535));
    c_live->add_option("--max-ticks", live_max, "Stop after this many ticks")->check(CLI::PositiveNumber);

    ReplayArgs rep;
    std::string rep_rec, rep_sensors, rep_out, rep_map, rep_format = "text";
    auto* c_rep = app.add_subcommand("replay", "Verify a recording and run sensors on every tick");
    c_rep->add_option("recording", rep_rec, "Recording (.plrec)")->required();
    c_rep->add_option("--sensors", rep_sensors, "Sensor config (INI); none means no sensors");
    c_rep->add_option("--out-dir", rep_out, "Directory for point clouds and depth images");
    c_rep->add_option("--map", rep_map, "Map file to check against the recorded digest");
    c_rep->add_option("--cloud-format", rep_format, "Point cloud format")->check(CLI::IsMember({"text", "binary"}));
    c_rep->add_flag("--print-snapshots", rep.print_snapshots, "Print every snapshot as one text line");
    c_rep->add_flag("-q,--quiet", rep.quiet, "Skip per-tick visibility lines");

    MergeArgs merge;
    std::string m_rec, m_clip, m_retarget, m_out;
    auto* c_merge = app.add_subcommand("merge-bvh", "Merge a BVH clip into a recording, writing a new file");
    c_merge->add_option("recording", m_rec, "Input recording")->required();
    c_merge->add_option("clip", m_clip, "BVH clip")->required();
    c_merge->add_option("-o,--out", m_out, "Output recording")->required();
    c_merge->add_option("--retarget", m_retarget, "Retarget config (INI)");
    c_merge->add_flag("--resample", merge.resample, "Resample the clip to the recording step");

    ScoreArgs score;
    std::string s_csv, s_json;
    auto* c_score = app.add_subcommand("score", "Score presence questionnaire responses");
    c_score->add_option("responses", s_csv, "Responses CSV")->required();
    c_score->add_option("--json", s_json, "Also write a JSON summary");
    c_score->add_flag("--subscale-alpha", score.subscale_alpha, "Also report alpha within each subscale");

    InspectArgs insp;
    std::string i_file;
    auto* c_insp = app.add_subcommand("inspect", "Describe a recording, map, clip or point cloud");
    c_insp->add_option("file", i_file, "File to inspect")->required();
    c_insp->add_flag("--snapshots", insp.snapshots, "Print every snapshot of a recording");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);

    auto opt = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<fs::path>(s); };
    return guarded(std::cerr, [&]() -> int {
        if (c_live->parsed()) {
            if (!live_config.empty()) live.config = live_config;
            live.output = live_out;
            live.script = opt(live_script);
            live.timing_json = opt(live_timing);
            if (live_port >= 0) live.port = static_cast<std::uint16_t>(live_port);
            if (live_max > 0) live.max_ticks = static_cast<std::uint64_t>(live_max);
            live.stop = &g_stop;
            return cmd_live(live, std::cout);
        }
        if (c_rep->parsed()) {
            rep.recording = rep_rec;
            rep.sensors = opt(rep_sensors);
            rep.out_dir = opt(rep_out);
            rep.map = opt(rep_map);
            rep.cloud_format = rep_format == "binary" ? CloudFormat::Binary : CloudFormat::Text;
            return cmd_replay(rep, std::cout);
        }
        if (c_merge->parsed()) {
            merge.recording = m_rec;
            merge.clip = m_clip;
            merge.output = m_out;
            merge.retarget = opt(m_retarget);
            return cmd_merge_bvh(merge, std::cout);
        }
        if (c_score->parsed()) {
            score.responses = s_csv;
            score.json = opt(s_json);
            return cmd_score(score, std::cout);
        }
        insp.file = i_file;
        return cmd_inspect(insp, std::cout);
    });
}
