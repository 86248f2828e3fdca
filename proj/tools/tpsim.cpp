#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "telepresence/error.hpp"
#include "telepresence/scenario.hpp"
#include "telepresence/sim.hpp"

using namespace telepresence;

namespace {

struct RunArgs {
    std::string room_a, room_b, trace_a, trace_b;
    std::uint64_t seed = 1;
    std::string scorer_config;
    std::string report;
    std::string transcript;
    int latency_ticks = 0;
    double tick_rate = 60.0;
    double elevation_offset_deg = 0.0;
    bool with_timing = false;
};

SimConfig base_config(const RunArgs& a) {
    SimConfig cfg;
    cfg.room_a = load_room_file(a.room_a);
    cfg.room_b = load_room_file(a.room_b);
    cfg.seed = a.seed;
    if (!a.scorer_config.empty()) cfg.scorer = load_scorer_config_file(a.scorer_config);
    cfg.latency_ticks = a.latency_ticks;
    cfg.tick_rate = a.tick_rate;
    cfg.retarget.elevation_offset = deg_to_rad(a.elevation_offset_deg);
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::FileError, "cannot write " + path);
    out << text;
}

Placement parse_placement(const std::vector<double>& v) {
    if (v.size() != 3) throw Error(ErrorCode::InvalidConfig, "placement needs x z yaw_deg");
    return {v[0], v[1], wrap_two_pi(deg_to_rad(v[2])), Pose::Standing};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-peer telepresence simulator"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Simulate both peers over two rooms and two traces");
    run->add_option("--room-a", run_args.room_a, "Room file for peer A")->required();
    run->add_option("--room-b", run_args.room_b, "Room file for peer B")->required();
    run->add_option("--trace-a", run_args.trace_a, "Trace file for peer A")->required();
    run->add_option("--trace-b", run_args.trace_b, "Trace file for peer B")->required();
    run->add_option("--seed", run_args.seed, "Run seed");
    run->add_option("--scorer-config", run_args.scorer_config, "Scorer and optimizer settings (JSON)");
    run->add_option("--report", run_args.report, "Report output path, '-' for stdout");
    run->add_option("--transcript", run_args.transcript, "Transcript output path");
    run->add_option("--latency-ticks", run_args.latency_ticks, "Transport delay in whole ticks")->check(CLI::NonNegativeNumber);
    run->add_option("--tick-rate", run_args.tick_rate, "Session tick rate in Hz")->check(CLI::PositiveNumber);
    run->add_option("--elevation-offset", run_args.elevation_offset_deg, "Pointing compensation in degrees");
    run->add_flag("--with-timing", run_args.with_timing, "Include placement wall-clock times in the report");

    RunArgs replay_args;
    std::string replay_input;
    auto* replay = app.add_subcommand("replay", "Recompute a report from a recorded transcript");
    replay->add_option("transcript", replay_input, "Transcript file")->required();
    replay->add_option("--room-a", replay_args.room_a, "Room file for peer A")->required();
    replay->add_option("--room-b", replay_args.room_b, "Room file for peer B")->required();
    replay->add_option("--seed", replay_args.seed, "Run seed");
    replay->add_option("--scorer-config", replay_args.scorer_config, "Scorer and optimizer settings (JSON)");
    replay->add_option("--report", replay_args.report, "Report output path, '-' for stdout");
    replay->add_option("--elevation-offset", replay_args.elevation_offset_deg, "Pointing compensation in degrees");
    replay->add_flag("--with-timing", replay_args.with_timing, "Include placement wall-clock times in the report");

    std::string bench_room, bench_features, bench_scorer, bench_out;
    std::vector<double> bench_partner;
    int bench_reps = 10;
    auto* bench = app.add_subcommand("bench", "Time grid search and PSO separately");
    bench->add_option("--room", bench_room, "Room file")->required();
    bench->add_option("--features", bench_features, "FeaturePacket frame file")->required();
    bench->add_option("--scorer-config", bench_scorer, "Scorer and optimizer settings (JSON)");
    bench->add_option("--reps", bench_reps, "Repetitions");
    bench->add_option("--partner", bench_partner, "Partner placement in the room: x z yaw_deg")->expected(3);
    bench->add_option("--out", bench_out, "Summary output path, '-' for stdout");

    std::string feat_room, feat_out;
    std::vector<double> feat_subject, feat_partner;
    bool feat_sitting = false;
    auto* features = app.add_subcommand("features", "Extract a FeaturePacket for a placement in a room");
    features->add_option("--room", feat_room, "Room file")->required();
    features->add_option("--subject", feat_subject, "Subject placement: x z yaw_deg")->expected(3)->required();
    features->add_option("--partner", feat_partner, "Partner placement: x z yaw_deg")->expected(3);
    features->add_flag("--sitting", feat_sitting, "Subject is sitting");
    features->add_option("--out", feat_out, "Output frame file")->required();

    std::string scenario_name = "office", scenario_dir = "data";
    double scenario_rate = 60.0;
    auto* scenario = app.add_subcommand("scenario", "Write a generated scenario's rooms and traces");
    scenario->add_option("name", scenario_name, "office, livingroom or mirror")->check(CLI::IsMember(scenario_names()));
    scenario->add_option("--out-dir", scenario_dir, "Output directory");
    scenario->add_option("--tick-rate", scenario_rate, "Trace tick rate in Hz")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            SimConfig cfg = base_config(run_args);
            cfg.trace_a = load_trace_file(run_args.trace_a);
            cfg.trace_b = load_trace_file(run_args.trace_b);
            const SimResult result = run_simulation(cfg);
            if (!run_args.transcript.empty()) save_transcript_file(result.transcript, run_args.transcript);
            write_text(run_args.report, result.report.to_json(run_args.with_timing));
        } else if (*replay) {
            const Transcript t = load_transcript_file(replay_input);
            replay_args.tick_rate = t.tick_rate;
            const RunReport report = replay_transcript(t, base_config(replay_args));
            write_text(replay_args.report, report.to_json(replay_args.with_timing));
        } else if (*bench) {
            const Room room = load_room_file(bench_room);
            const FeatureVector f = load_feature_packet_file(bench_features);
            const ScorerConfig sc = bench_scorer.empty() ? ScorerConfig{} : load_scorer_config_file(bench_scorer);
            std::optional<Placement> partner;
            if (!bench_partner.empty()) partner = parse_placement(bench_partner);
            const DefaultScorer scorer(sc.similarity);
            write_text(bench_out, bench_placement(room, f, partner, scorer, sc.placement, bench_reps).to_json());
        } else if (*features) {
            const Room room = load_room_file(feat_room);
            Placement subject = parse_placement(feat_subject);
            if (feat_sitting) subject.pose = Pose::Sitting;
            std::optional<Placement> partner;
            if (!feat_partner.empty()) partner = parse_placement(feat_partner);
            save_feature_packet_file(extract_features(room, subject, partner), feat_out);
        } else if (*scenario) {
            const Scenario s = make_scenario(scenario_name, scenario_rate);
            const std::filesystem::path dir(scenario_dir);
            std::filesystem::create_directories(dir / "rooms");
            std::filesystem::create_directories(dir / "traces");
            write_text((dir / "rooms" / (s.room_a.id + ".json")).string(), room_to_json(s.room_a));
            write_text((dir / "rooms" / (s.room_b.id + ".json")).string(), room_to_json(s.room_b));
            save_trace_file(s.trace_a, (dir / "traces" / (s.name + "_a.jsonl")).string());
            save_trace_file(s.trace_b, (dir / "traces" / (s.name + "_b.jsonl")).string());
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "tpsim: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "tpsim: %s\n", e.what());
        return 1;
    }
    return 0;
}
