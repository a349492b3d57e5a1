#include "partner/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "partner/config.hpp"
#include "partner/ik_solver.hpp"
#include "partner/parallel.hpp"
#include "partner/scenario.hpp"

namespace partner {

namespace {

using nlohmann::json;

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_path;
    std::string format = "jsonl";
};

RunConfig resolve_config(const CommonOptions& opts) {
    RunConfig cfg = opts.config_path.empty() ? default_run_config() : load_config(opts.config_path);
    if (opts.seed) {
        cfg.seed = *opts.seed;
        cfg.bma.rng_seed = *opts.seed;
    }
    return cfg;
}

/// Writes to --out when given, otherwise to `fallback`.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary);
            if (!file_) throw std::runtime_error("cannot open output file " + path);
            stream_ = &file_;
        }
    }
    std::ostream& get() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

std::string csv_number(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

int cmd_fk(const CommonOptions& opts, const std::vector<double>& values, std::ostream& out) {
    const RunConfig cfg = resolve_config(opts);
    JointAngles angles;
    std::copy(values.begin(), values.end(), angles.q.begin());
    const Pose9 pose = forward_kinematics(angles, cfg.model.links, cfg.model.variant);
    Sink sink(opts.out_path, out);
    if (parse_format(opts.format) == OutputFormat::Jsonl) {
        const json line = {
            {"right_hand", {pose.right_hand.x, pose.right_hand.y, pose.right_hand.z}},
            {"left_hand", {pose.left_hand.x, pose.left_hand.y, pose.left_hand.z}},
            {"head_center", {pose.head_center.x, pose.head_center.y, pose.head_center.z}},
        };
        sink.get() << line.dump() << '\n';
    } else {
        sink.get() << "rx,ry,rz,lx,ly,lz,hx,hy,hz\n";
        const auto flat = pose.flat();
        for (std::size_t i = 0; i < flat.size(); ++i) sink.get() << (i ? "," : "") << csv_number(flat[i]);
        sink.get() << '\n';
    }
    return 0;
}

int cmd_solve(const CommonOptions& opts, const std::vector<double>& values, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = resolve_config(opts);
    std::array<double, kPoseCoordinates> flat{};
    std::copy(values.begin(), values.end(), flat.begin());
    const SolveReport report = solve_ik(Pose9::from_flat(flat), cfg.bma, cfg.model);
    const bool success = report.succeeded(cfg.bma.target_cost);

    Sink sink(opts.out_path, out);
    if (parse_format(opts.format) == OutputFormat::Jsonl) {
        write_report_jsonl(report, sink.get());
        sink.get() << json{{"success", success}, {"target_cost", cfg.bma.target_cost}}.dump() << '\n';
    } else {
        auto& o = sink.get();
        o << "record,generation,best_cost,evaluations,lm_invocations,gamma_min,gamma_max";
        for (std::size_t i = 0; i < kJointCount; ++i) o << ',' << joint_name(static_cast<Joint>(i));
        o << ",success\n";
        for (const auto& g : report.trace) {
            o << "generation," << g.generation << ',' << csv_number(g.best_cost) << ',' << g.evaluations << ','
              << g.lm_invocations << ',' << (g.gamma_min ? csv_number(*g.gamma_min) : "") << ','
              << (g.gamma_max ? csv_number(*g.gamma_max) : "") << std::string(kJointCount + 1, ',') << '\n';
        }
        o << "summary," << report.generations_run << ',' << csv_number(report.best_cost) << ','
          << report.evaluations << ',' << report.lm_invocations << ",,";
        for (double a : report.best_angles.q) o << ',' << csv_number(a);
        o << ',' << (success ? 1 : 0) << '\n';
    }
    err << "solve: best cost " << report.best_cost << " after " << report.generations_run << " generations in "
        << report.wall_time.count() * 1e3 << " ms\n";
    return 0;
}

int cmd_run(const CommonOptions& opts, const std::string& scenario_path, std::ostream& out) {
    const RunConfig cfg = resolve_config(opts);
    const auto events = load_scenario(scenario_path);
    const auto timeline = run_scenario(cfg, events);
    Sink sink(opts.out_path, out);
    write_timeline(timeline, parse_format(opts.format), sink.get());
    return 0;
}

int cmd_bench(const CommonOptions& opts, int count, bool serial, std::ostream& out, std::ostream& err) {
    if (count <= 0) throw std::invalid_argument("--count must be positive");
    const RunConfig cfg = resolve_config(opts);
    Rng rng(cfg.bma.rng_seed);
    std::vector<JointAngles> truth(static_cast<std::size_t>(count));
    std::vector<Pose9> targets;
    for (auto& a : truth) {
        for (std::size_t j = 0; j < kJointCount; ++j) {
            std::uniform_real_distribution<double> dist(cfg.model.limits[j].min, cfg.model.limits[j].max);
            a[j] = dist(rng);
        }
        targets.push_back(forward_kinematics(a, cfg.model.links, cfg.model.variant));
    }

    const auto started = std::chrono::steady_clock::now();
    const auto reports = serial ? solve_batch_serial(targets, cfg.bma, cfg.model)
                                : solve_batch(targets, cfg.bma, cfg.model);
    const std::chrono::duration<double> total = std::chrono::steady_clock::now() - started;

    Sink sink(opts.out_path, out);
    std::vector<double> times;
    int successes = 0;
    int precise = 0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        double max_joint_error = 0.0;
        for (std::size_t j = 0; j < kJointCount; ++j) {
            max_joint_error = std::max(max_joint_error, std::abs(r.best_angles[j] - truth[i][j]));
        }
        const bool ok = r.succeeded(cfg.bma.target_cost);
        successes += ok;
        precise += ok && max_joint_error <= 0.015;
        times.push_back(r.wall_time.count());
        if (parse_format(opts.format) == OutputFormat::Jsonl) {
            sink.get() << json{{"index", i},
                               {"best_cost", r.best_cost},
                               {"success", ok},
                               {"max_joint_error", max_joint_error},
                               {"wall_s", r.wall_time.count()}}
                              .dump()
                       << '\n';
        }
    }
    std::sort(times.begin(), times.end());
    const double median = times[times.size() / 2];
    const json summary = {
        {"count", count},
        {"successes", successes},
        {"success_rate", static_cast<double>(successes) / count},
        {"joint_precision_fraction", successes ? static_cast<double>(precise) / successes : 0.0},
        {"median_wall_s", median},
        {"total_wall_s", total.count()},
        {"threads", serial ? 1 : parallel_threads()},
        {"target_cost", cfg.bma.target_cost},
    };
    if (parse_format(opts.format) == OutputFormat::Jsonl) {
        sink.get() << summary.dump() << '\n';
    } else {
        sink.get() << "count,successes,success_rate,joint_precision_fraction,median_wall_s,total_wall_s,threads\n"
                   << count << ',' << successes << ',' << csv_number(summary["success_rate"].get<double>()) << ','
                   << csv_number(summary["joint_precision_fraction"].get<double>()) << ',' << csv_number(median)
                   << ',' << csv_number(total.count()) << ',' << summary["threads"].get<int>() << '\n';
    }
    err << "bench: " << successes << "/" << count << " solves reached " << cfg.bma.target_cost << '\n';
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Gesture engine, IK solver and motion simulator for a small robot partner"};
    app.require_subcommand(1);

    CommonOptions opts;
    std::uint64_t seed_value = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "JSON configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed_value, "Master random seed");
        sub->add_option("--out", opts.out_path, "Output file (default: stdout)");
        sub->add_option("--format", opts.format, "Output format")->check(CLI::IsMember({"csv", "jsonl"}));
    };

    std::vector<double> angles;
    auto* fk = app.add_subcommand("fk", "Forward kinematics: 8 joint angles (rad) in, 9 coordinates out");
    fk->add_option("angles", angles, "waist r_shoulder r_elbow r_finger l_shoulder l_elbow l_finger head")
        ->expected(8)
        ->required();
    add_common(fk);

    std::vector<double> target;
    auto* solve = app.add_subcommand("solve", "Inverse kinematics for one target pose");
    solve->add_option("target", target, "rx ry rz lx ly lz hx hy hz (m)")->expected(9)->required();
    add_common(solve);

    std::string scenario_path;
    auto* run = app.add_subcommand("run", "Execute a scenario and write the timeline");
    run->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
    add_common(run);

    int count = 100;
    bool serial = false;
    auto* bench = app.add_subcommand("bench", "IK success rate and runtime over random reachable targets");
    bench->add_option("--count", count, "Number of targets");
    bench->add_flag("--serial", serial, "Use the serial reference instead of the OpenMP kernel");
    add_common(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    for (auto* sub : {fk, solve, run, bench}) {
        if (*sub && sub->count("--seed") > 0) opts.seed = seed_value;
    }

    try {
        if (*fk) return cmd_fk(opts, angles, out);
        if (*solve) return cmd_solve(opts, target, out, err);
        if (*run) return cmd_run(opts, scenario_path, out);
        if (*bench) return cmd_bench(opts, count, serial, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace partner
