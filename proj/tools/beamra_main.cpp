// beamra command line: train a beam scheduler, evaluate access schemes,
// compare them, or export beam patterns. Runs are fully determined by
// (config, seed); every subcommand writes the resolved config next to
// its outputs so any result can be reproduced from its own directory.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <beamra/antenna.hpp>
#include <beamra/config.hpp>
#include <beamra/io.hpp>
#include <beamra/metrics.hpp>
#include <beamra/policies.hpp>
#include <beamra/rl.hpp>
#include <beamra/sim.hpp>

namespace fs = std::filesystem;
using namespace beamra;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "JSON config file (defaults used when omitted)");
    cmd->add_option("--out", o.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "64-bit run seed (overrides the config)")
        ->each([&o](const std::string&) { o.seed_set = true; });
    cmd->add_option("--jobs", o.jobs, "worker threads for evaluation fan-out")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

RunConfig resolve_config(const CommonOpts& o) {
    RunConfig rc = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
    if (o.seed_set) rc.seed = o.seed;
    return rc;
}

void write_resolved_config(const RunConfig& rc, const fs::path& dir) {
    fs::create_directories(dir);
    atomic_write_text(dir / "resolved_config.json", run_config_to_json(rc).dump(2) + "\n");
}

Policy make_scheme(const std::string& scheme, const RunConfig& rc, const SimConfig& sc,
                   const std::string& checkpoint_path) {
    if (scheme == "static") return static_be(sc.n_beams);
    if (scheme == "random") return random_bu(sc.actions, rc.random_bu_per_slot);
    if (scheme == "ddqn") {
        if (checkpoint_path.empty()) {
            throw ConfigError("scheme 'ddqn' needs --checkpoint");
        }
        Checkpoint cp = load_checkpoint(checkpoint_path);
        check_checkpoint_shape(cp, sc.n_sectors, static_cast<int>(sc.actions.size()));
        return ddqn_greedy(std::move(cp.net), sc.actions);
    }
    throw ConfigError("unknown scheme '" + scheme + "' (expected static, random or ddqn)");
}

int cmd_train(const CommonOpts& o) {
    const RunConfig rc = resolve_config(o);
    const SimConfig sc = make_sim_config(rc);
    const TrainConfig tc = make_train_config(rc);
    const fs::path dir(o.out_dir);
    write_resolved_config(rc, dir);

    SimEnv env(sc, rc.seed);
    std::cout << "training " << tc.episodes << " episodes (lambda=" << rc.lambda_total
              << ", rho=" << rc.rho << ", seed=" << rc.seed << ")\n";
    TrainResult result = train(env, tc, rc.seed);

    save_checkpoint(dir / "checkpoint.json", result.net, rc.seed, config_hash(rc));
    atomic_write_text(dir / "training_log.csv", training_log_to_csv(result.log));

    std::vector<double> losses, avg_q;
    for (const EpisodeStats& e : result.log.episodes) {
        losses.push_back(e.loss_mean);
        avg_q.push_back(e.avg_action_value);
    }
    write_curve_csv((dir / "loss_curve.csv").string(), "loss", losses, 0.99);
    write_curve_csv((dir / "avg_action_value_curve.csv").string(), "avg_q", avg_q, 0.99);

    std::cout << "done: " << result.log.total_iterations << " iterations, "
              << result.log.truncated_episodes << " truncated episodes\n"
              << "wrote " << (dir / "checkpoint.json").string() << "\n";
    return 0;
}

int cmd_evaluate(const CommonOpts& o, const std::string& scheme, const std::string& checkpoint_path,
                 int episodes_override) {
    RunConfig rc = resolve_config(o);
    if (episodes_override > 0) rc.eval_episodes = episodes_override;
    const SimConfig sc = make_sim_config(rc);
    const fs::path dir(o.out_dir);
    write_resolved_config(rc, dir);

    const Policy policy = make_scheme(scheme, rc, sc, checkpoint_path);
    DelayStats stats = evaluate(policy, sc, rc.eval_episodes, rc.seed, o.jobs);
    stats.scheme = scheme;
    stats.lambda = rc.lambda_total;
    stats.rho = rc.rho;

    atomic_write_text(dir / "delay_stats.json", delay_stats_to_json(stats).dump(2) + "\n");
    if (!stats.cdf.empty()) write_cdf_csv((dir / "delay_cdf.csv").string(), stats.cdf);
    std::cout << scheme << ": mean delay " << format_double(stats.mean_delay_slots) << " slots over "
              << stats.n_episodes << " episodes (" << stats.truncated_episodes << " truncated)\n";
    return 0;
}

int cmd_compare(const CommonOpts& o, const std::string& checkpoint_path, int episodes_override) {
    RunConfig rc = resolve_config(o);
    if (episodes_override > 0) rc.eval_episodes = episodes_override;
    const SimConfig sc = make_sim_config(rc);
    const fs::path dir(o.out_dir);
    write_resolved_config(rc, dir);

    ComparisonRow row;
    row.lambda = rc.lambda_total;
    row.rho = rc.rho;
    for (const std::string scheme : {"static", "random", "ddqn"}) {
        const Policy policy = make_scheme(scheme, rc, sc, checkpoint_path);
        DelayStats stats = evaluate(policy, sc, rc.eval_episodes, rc.seed, o.jobs);
        stats.scheme = scheme;
        stats.lambda = rc.lambda_total;
        stats.rho = rc.rho;
        atomic_write_text(dir / ("delay_stats_" + scheme + ".json"),
                          delay_stats_to_json(stats).dump(2) + "\n");
        if (scheme == "static") row.static_mean = stats.mean_delay_slots;
        if (scheme == "random") row.random_mean = stats.mean_delay_slots;
        if (scheme == "ddqn") row.ddqn_mean = stats.mean_delay_slots;
        std::cout << scheme << ": mean delay " << format_double(stats.mean_delay_slots) << " slots ("
                  << stats.truncated_episodes << " truncated)\n";
    }
    write_comparison_csv((dir / "comparison.csv").string(), {row});
    std::cout << "wrote " << (dir / "comparison.csv").string() << "\n";
    return 0;
}

int cmd_beam_pattern(const CommonOpts& o, int action_id, int grid_points) {
    const RunConfig rc = resolve_config(o);
    const SimConfig sc = make_sim_config(rc);
    const fs::path dir(o.out_dir);
    write_resolved_config(rc, dir);

    if (action_id < 0 || static_cast<std::size_t>(action_id) >= sc.actions.size()) {
        throw ConfigError("action id " + std::to_string(action_id) + " out of range: the action space has " +
                          std::to_string(sc.actions.size()) + " actions");
    }
    const BeamSet& action = sc.actions.actions[static_cast<std::size_t>(action_id)];

    std::string csv = "action_id,beam_id,theta_rad,amplitude,gain_db\n";
    for (std::size_t b = 0; b < action.beams.size(); ++b) {
        for (int k = 0; k < grid_points; ++k) {
            const double theta = two_pi * k / grid_points;
            const double amp = array_factor_gain(action.beams[b], theta, sc.d_over_lambda);
            csv += std::to_string(action_id);
            csv += ",";
            csv += std::to_string(b);
            csv += ",";
            csv += format_double(theta);
            csv += ",";
            csv += format_double(amp);
            csv += ",";
            csv += format_double(amplitude_to_db(amp));
            csv += "\n";
        }
    }
    atomic_write_text(dir / "beam_pattern.csv", csv);
    std::cout << "wrote " << (dir / "beam_pattern.csv").string() << " (" << grid_points
              << " points per beam)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"beam-based random access simulator and DDQN beam scheduler"};
    app.require_subcommand(1);

    CommonOpts train_opts, eval_opts, compare_opts, pattern_opts;
    std::string eval_scheme = "ddqn", eval_checkpoint, compare_checkpoint;
    int eval_episodes = 0, compare_episodes = 0;
    int pattern_action = 0, pattern_grid = 4096;

    CLI::App* train_cmd = app.add_subcommand("train", "train the DDQN beam scheduler");
    add_common(train_cmd, train_opts);

    CLI::App* eval_cmd = app.add_subcommand("evaluate", "measure access delay of one scheme");
    add_common(eval_cmd, eval_opts);
    eval_cmd->add_option("--scheme", eval_scheme, "static | random | ddqn")->capture_default_str();
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "trained network (for scheme ddqn)");
    eval_cmd->add_option("--episodes", eval_episodes, "evaluation episodes (overrides the config)");

    CLI::App* compare_cmd = app.add_subcommand("compare", "run all three schemes side by side");
    add_common(compare_cmd, compare_opts);
    compare_cmd->add_option("--checkpoint", compare_checkpoint, "trained network for the ddqn scheme")
        ->required();
    compare_cmd->add_option("--episodes", compare_episodes, "evaluation episodes (overrides the config)");

    CLI::App* pattern_cmd = app.add_subcommand("beam-pattern", "export gain patterns of one action");
    add_common(pattern_cmd, pattern_opts);
    pattern_cmd->add_option("--action", pattern_action, "action index")->capture_default_str();
    pattern_cmd->add_option("--grid", pattern_grid, "angular grid points")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(train_opts);
        if (eval_cmd->parsed()) return cmd_evaluate(eval_opts, eval_scheme, eval_checkpoint, eval_episodes);
        if (compare_cmd->parsed()) return cmd_compare(compare_opts, compare_checkpoint, compare_episodes);
        if (pattern_cmd->parsed()) return cmd_beam_pattern(pattern_opts, pattern_action, pattern_grid);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
