#include "kucb/experiment.hpp"

#include "kucb/grid_regressor.hpp"
#include "kucb/mdp_io.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

namespace kucb {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

Json number(double x) {
    if (std::isfinite(x)) { return x; }
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

std::ofstream open_output(const fs::path &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) { throw InvalidInput(fmt::format("cannot write '{}'", path.string())); }
    return out;
}

double realized_info_gain(const RunTrace &trace) {
    GridRegressor reg(trace.kernel, trace.rho, trace.grid);
    for (const auto &r : trace.steps) { reg.add(trace.grid_index(r)); }
    return reg.factorize().info_gain();
}

AgentOutcome summarize(RunTrace trace, double j_star, bool learned) {
    AgentOutcome o;
    o.name = trace.agent;
    double regret = 0.0;
    for (const auto &r : trace.steps) { regret += j_star - r.reward; }
    o.final_regret = regret;
    o.avg_regret = regret / static_cast<double>(trace.steps.size());
    if (learned) { o.info_gain = realized_info_gain(trace); }
    o.trace = std::move(trace);
    return o;
}

void write_trace_csv(const fs::path &path, const RunTrace &trace, double j_star) {
    auto out = open_output(path);
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "seed,t,t0,state,action,reward,regret_cum,sigma_used,beta_used\n");
    double regret = 0.0;
    for (const auto &r : trace.steps) {
        regret += j_star - r.reward;
        fmt::format_to(std::back_inserter(buf), "{},{},{},{},{},{},{},{},{}\n", trace.seed, r.t, r.anchor, r.state,
                       r.action, r.reward, regret, r.sigma, r.beta);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_plot_data(const fs::path &dir, const ExperimentConfig &config, const SeedOutcome &seed) {
    {
        auto out = open_output(dir / fmt::format("plot_regret_seed{}.csv", seed.seed));
        fmt::memory_buffer buf;
        fmt::format_to(std::back_inserter(buf), "t");
        for (const auto &a : seed.agents) { fmt::format_to(std::back_inserter(buf), ",{}", a.name); }
        fmt::format_to(std::back_inserter(buf), "\n");
        std::vector<double> acc(seed.agents.size(), 0.0);
        const auto horizon = seed.agents.front().trace.steps.size();
        for (std::size_t i = 0; i < horizon; ++i) {
            fmt::format_to(std::back_inserter(buf), "{}", i + 1);
            for (std::size_t k = 0; k < seed.agents.size(); ++k) {
                acc[k] += seed.solution.gain - seed.agents[k].trace.steps[i].reward;
                fmt::format_to(std::back_inserter(buf), ",{}", acc[k]);
            }
            fmt::format_to(std::back_inserter(buf), "\n");
        }
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    {
        const auto &trace = seed.agents.front().trace;
        auto out = open_output(dir / fmt::format("plot_info_gain_seed{}.csv", seed.seed));
        fmt::memory_buffer buf;
        fmt::format_to(std::back_inserter(buf), "t,info_gain,gamma_bound_poly\n");
        const auto emit = [&](std::int64_t t, double gain) {
            fmt::format_to(std::back_inserter(buf), "{},{},{}\n", t, gain,
                           gamma_bound_poly(static_cast<double>(t), trace.rho, config.output.gamma_reference_p,
                                            config.output.gamma_reference_c));
        };
        for (const auto &b : trace.batches) { emit(b.anchor, b.info_gain); }
        emit(static_cast<std::int64_t>(trace.steps.size()), seed.agents.front().info_gain);
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
}

Json report_json(const CheckReport &r) {
    Json j;
    j["name"] = r.name;
    j["passed"] = r.passed;
    j["worst_margin"] = number(r.worst_margin);
    j["location"] = r.location;
    j["violations"] = r.violations;
    j["evaluated"] = r.evaluated;
    Json details = Json::object();
    for (const auto &[k, v] : r.details) { details[k] = number(v); }
    j["details"] = details;
    return j;
}

Json seed_json(const SeedOutcome &s) {
    Json j;
    j["index"] = s.index;
    j["seed"] = s.seed;
    j["mdp_seed"] = s.mdp_seed;
    j["status"] = s.ok ? "ok" : "failed";
    if (!s.ok) {
        j["error"] = s.error;
        return j;
    }
    j["j_star"] = number(s.solution.gain);
    j["span"] = number(s.solution.span);
    j["solver_iterations"] = s.solution.iterations;
    j["solver_residual"] = number(s.solution.residual);
    Json agents = Json::object();
    for (const auto &a : s.agents) {
        Json aj;
        aj["final_regret"] = number(a.final_regret);
        aj["avg_regret"] = number(a.avg_regret);
        aj["info_gain"] = number(a.info_gain);
        aj["coverage_violations"] = a.coverage_violations;
        agents[a.name] = aj;
    }
    j["agents"] = agents;
    Json checks = Json::array();
    for (const auto &c : s.checks) { checks.push_back(report_json(c)); }
    j["checks"] = checks;
    j["optimism_asserted"] = s.optimism_asserted;
    return j;
}

double coverage_violation_rate(const std::vector<SeedOutcome> &outcomes) {
    int ok = 0;
    int violated = 0;
    for (const auto &s : outcomes) {
        if (!s.ok) { continue; }
        ++ok;
        if (s.agents.front().coverage_violations > 0) { ++violated; }
    }
    return ok > 0 ? static_cast<double>(violated) / ok : 0.0;
}

void write_summary(const fs::path &path, const ExperimentConfig &config, const std::vector<SeedOutcome> &outcomes) {
    Json root;
    root["config"] = to_yaml(config);
    Json seeds = Json::array();
    for (const auto &s : outcomes) { seeds.push_back(seed_json(s)); }
    root["seeds"] = seeds;

    Json aggregate;
    std::vector<std::string> names;
    for (const auto &s : outcomes) {
        if (!s.ok) { continue; }
        for (const auto &a : s.agents) {
            if (std::find(names.begin(), names.end(), a.name) == names.end()) { names.push_back(a.name); }
        }
    }
    Json mean_regret = Json::object();
    for (const auto &name : names) {
        double sum = 0.0;
        int count = 0;
        for (const auto &s : outcomes) {
            if (!s.ok) { continue; }
            sum += s.agent(name).final_regret;
            ++count;
        }
        mean_regret[name] = number(sum / count);
    }
    aggregate["mean_final_regret"] = mean_regret;
    aggregate["coverage_violation_rate"] = number(coverage_violation_rate(outcomes));
    aggregate["failed_seeds"] = std::count_if(outcomes.begin(), outcomes.end(), [](const auto &s) { return !s.ok; });
    root["aggregate"] = aggregate;

    auto out = open_output(path);
    out << root.dump(2) << "\n";
}

// Runs all seeds, writes per-seed files as they finish and the summary at the end.
std::vector<SeedOutcome> execute(const ExperimentConfig &config, const fs::path &out, std::ostream &log) {
    fs::create_directories(out);
    std::vector<SeedOutcome> outcomes(static_cast<std::size_t>(config.run.n_seeds));
    std::mutex log_mutex;
    parallel_for(config.run.n_seeds, config.run.threads, [&](int i) {
        SeedOutcome s = run_seed(config, i);
        if (s.ok) {
            try {
                for (const auto &a : s.agents) {
                    write_trace_csv(out / fmt::format("trace_seed{}_{}.csv", s.seed, a.name), a.trace, s.solution.gain);
                }
                if (config.output.emit_plot_data) { write_plot_data(out, config, s); }
            } catch (const std::exception &e) {
                s.ok = false;
                s.error = e.what();
            }
            for (auto &a : s.agents) { a.trace = RunTrace{}; }
        }
        const std::lock_guard lock(log_mutex);
        if (s.ok) {
            fmt::print(log, "seed {}: J* = {:.6f}, regret {} = {:.4f}\n", s.seed, s.solution.gain,
                       s.agents.front().name, s.agents.front().final_regret);
        } else {
            fmt::print(log, "seed {}: failed: {}\n", s.seed, s.error);
        }
        outcomes[static_cast<std::size_t>(i)] = std::move(s);
    });
    write_summary(out / "summary.json", config, outcomes);
    return outcomes;
}

bool all_ok(const std::vector<SeedOutcome> &outcomes) {
    return std::all_of(outcomes.begin(), outcomes.end(), [](const auto &s) { return s.ok; });
}

}  // namespace

const AgentOutcome &SeedOutcome::agent(const std::string &name) const {
    for (const auto &a : agents) {
        if (a.name == name) { return a; }
    }
    throw InvalidInput(fmt::format("seed {} has no agent '{}'", seed, name));
}

const CheckReport *SeedOutcome::check(const std::string &name) const {
    for (const auto &c : checks) {
        if (c.name == name) { return &c; }
    }
    return nullptr;
}

bool SeedOutcome::theorem_checks_passed() const {
    for (const auto &c : checks) {
        if (c.name == "coverage") { continue; }
        if (c.name == "optimism" && !optimism_asserted) { continue; }
        if (!c.passed) { return false; }
    }
    return true;
}

Rng make_rng(std::uint64_t seed, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32U),
                      static_cast<std::uint32_t>(stream)};
    return Rng(seq);
}

SeedOutcome run_seed(const ExperimentConfig &config, int index) {
    SeedOutcome out;
    out.index = index;
    out.seed = config.run.seed + static_cast<std::uint64_t>(index);
    try {
        const SmoothMdpParams params = mdp_params(config, index);
        out.mdp_seed = params.seed;
        const MdpModel model = make_smooth_mdp(params);
        out.solution = solve_average_reward(model, config.run.solver_tol, config.run.solver_max_iters);
        const double j_star = out.solution.gain;

        AgentConfig agent = agent_config(config, model);
        agent.retain_plans = true;
        {
            Rng env = make_rng(out.seed, Stream::Environment);
            RunTrace trace = run_agent(model, agent, env);
            trace.seed = out.seed;
            const CheckReport coverage = check_coverage(trace, model);
            AgentOutcome o = summarize(std::move(trace), j_star, true);
            o.coverage_violations = coverage.violations;
            out.checks.push_back(coverage);
            out.agents.push_back(std::move(o));
        }

        for (const auto &name : config.run.baselines) {
            Rng env = make_rng(out.seed, Stream::Environment);
            RunTrace trace;
            bool learned = false;
            if (name == "random") {
                Rng policy = make_rng(out.seed, Stream::Policy);
                trace = run_random(model, config.run.horizon, env, policy);
            } else if (name == "oracle_policy") {
                trace = run_oracle_policy(model, out.solution.q, config.run.horizon, env);
            } else {
                AgentConfig greedy = agent;
                greedy.fixed_beta = 0.0;
                greedy.retain_plans = false;
                trace = run_agent(model, greedy, env);
                trace.agent = "greedy_no_bonus";
                learned = true;
            }
            trace.seed = out.seed;
            out.agents.push_back(summarize(std::move(trace), j_star, learned));
        }

        RunTrace &trace = out.agents.front().trace;
        if (config.run.checks) {
            const GramState replay = replay_trace(trace);
            out.checks.push_back(check_elliptical(trace, replay));
            out.checks.push_back(check_delayed_potential(trace, trace.window, replay));
            Rng sampling = make_rng(out.seed, Stream::Sampling);
            out.checks.push_back(check_variance_ratio(trace, config.run.variance_ratio_samples, sampling, replay));
            out.checks.push_back(check_optimism(trace, model));
            out.optimism_asserted = out.checks.front().passed;
        }
        trace.plans.clear();
        trace.plans.shrink_to_fit();
        out.ok = true;
    } catch (const ConvergenceError &e) {
        out.error = fmt::format("{} (residual {})", e.what(), e.residual());
    } catch (const std::exception &e) {
        out.error = e.what();
    }
    return out;
}

void parallel_for(int n, int threads, const std::function<void(int)> &body) {
    if (n <= 0) { return; }
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, n);
    if (workers == 1) {
        for (int i = 0; i < n; ++i) { body(i); }
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int k = 0; k < workers; ++k) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) { body(i); }
        });
    }
    for (auto &t : pool) { t.join(); }
}

int run_experiment(const ExperimentConfig &config, const fs::path &out, std::ostream &log) {
    const auto outcomes = execute(config, out, log);
    return all_ok(outcomes) ? 0 : 1;
}

int theoretical_window(std::int64_t horizon, double p) {
    if (!(p > 1.0)) { throw InvalidInput("theoretical window needs p > 1"); }
    const double w = std::ceil(std::pow(static_cast<double>(horizon), (p - 1.0) / (4.0 * p + 4.0)) - 1e-12);
    return std::max(1, static_cast<int>(w));
}

int run_sweep(const ExperimentConfig &config, std::vector<int> windows, std::vector<double> rhos, const fs::path &out,
              std::ostream &log) {
    if (windows.empty()) { windows = config.sweep.windows; }
    if (rhos.empty()) { rhos = config.sweep.rhos; }
    if (windows.empty()) { windows = {config.agent.window}; }
    if (rhos.empty()) { rhos = {config.agent.rho}; }

    const MdpModel probe = make_smooth_mdp(mdp_params(config, 0));
    const EigenProfile profile = agent_config(config, probe).confidence.state_profile;
    if (profile.kind == EigenProfile::Kind::Polynomial) {
        const int w = theoretical_window(config.run.horizon, profile.exponent);
        if (std::find(windows.begin(), windows.end(), w) == windows.end()) {
            fmt::print(log, "adding theoretical window w = {}\n", w);
            windows.push_back(w);
        }
    }
    std::sort(windows.begin(), windows.end());
    windows.erase(std::unique(windows.begin(), windows.end()), windows.end());

    fs::create_directories(out);
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "w,rho,seed,final_regret,avg_regret,info_gain,coverage_violations\n");
    bool ok = true;
    for (int w : windows) {
        for (double rho : rhos) {
            ExperimentConfig cell = config;
            cell.agent.window = w;
            cell.agent.rho = rho;
            cell.validate();
            fmt::print(log, "cell w = {}, rho = {}\n", w, rho);
            const auto outcomes = execute(cell, out / fmt::format("w{}_rho{}", w, rho), log);
            for (const auto &s : outcomes) {
                if (!s.ok) {
                    ok = false;
                    fmt::format_to(std::back_inserter(buf), "{},{},{},nan,nan,nan,-1\n", w, rho, s.seed);
                    continue;
                }
                const auto &a = s.agents.front();
                fmt::format_to(std::back_inserter(buf), "{},{},{},{},{},{},{}\n", w, rho, s.seed, a.final_regret,
                               a.avg_regret, a.info_gain, a.coverage_violations);
            }
        }
    }
    auto file = open_output(out / "sweep_summary.csv");
    file.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    return ok ? 0 : 1;
}

int run_verify(const ExperimentConfig &config, const fs::path &out, std::ostream &log) {
    ExperimentConfig checked = config;
    checked.run.checks = true;
    const auto outcomes = execute(checked, out, log);

    static const std::vector<std::string> columns = {"coverage", "elliptical", "delayed_potential", "variance_ratio",
                                                     "optimism"};
    fmt::print(log, "\n{:>8}", "seed");
    for (const auto &c : columns) { fmt::print(log, " {:>20}", c); }
    fmt::print(log, "\n");

    fmt::memory_buffer csv;
    fmt::format_to(std::back_inserter(csv), "seed,check,passed,asserted,worst_margin,violations,location\n");
    bool ok = true;
    for (const auto &s : outcomes) {
        if (!s.ok) {
            ok = false;
            fmt::print(log, "{:>8} failed: {}\n", s.seed, s.error);
            continue;
        }
        fmt::print(log, "{:>8}", s.seed);
        for (const auto &name : columns) {
            const CheckReport *r = s.check(name);
            const bool asserted = name != "coverage" && (name != "optimism" || s.optimism_asserted);
            const std::string mark = r->passed ? "" : (asserted ? " FAIL" : " (x)");
            fmt::print(log, " {:>20}", fmt::format("{:.3e}{}", r->worst_margin, mark));
            fmt::format_to(std::back_inserter(csv), "{},{},{},{},{},{},\"{}\"\n", s.seed, name, r->passed ? 1 : 0,
                           asserted ? 1 : 0, r->worst_margin, r->violations, r->location);
        }
        fmt::print(log, "\n");
        if (!s.theorem_checks_passed()) {
            ok = false;
            for (const auto &r : s.checks) {
                const bool asserted = r.name != "coverage" && (r.name != "optimism" || s.optimism_asserted);
                if (asserted && !r.passed) { fmt::print(log, "check {} failed on seed {} at {}\n", r.name, s.seed, r.location); }
            }
        }
    }
    const double rate = coverage_violation_rate(outcomes);
    const double allowed = config.agent.delta + 0.05;
    fmt::print(log, "coverage violation rate {:.4f} (allowed {:.4f})\n", rate, allowed);
    if (rate > allowed) {
        ok = false;
        fmt::print(log, "check coverage failed: violation rate {:.4f} exceeds {:.4f}\n", rate, allowed);
    }
    auto file = open_output(out / "verify.csv");
    file.write(csv.data(), static_cast<std::streamsize>(csv.size()));
    fmt::print(log, "{}\n", ok ? "verify: all checks passed" : "verify: FAILED");
    return ok ? 0 : 1;
}

int solve_models(const ExperimentConfig &config, const fs::path &out, std::ostream &log) {
    fs::create_directories(out);
    bool ok = true;
    for (int i = 0; i < config.run.n_seeds; ++i) {
        const SmoothMdpParams params = mdp_params(config, i);
        try {
            const MdpModel model = make_smooth_mdp(params);
            const OptimalSolution sol = solve_average_reward(model, config.run.solver_tol, config.run.solver_max_iters);
            Json j;
            j["mdp_seed"] = params.seed;
            j["gain"] = number(sol.gain);
            j["span"] = number(sol.span);
            j["iterations"] = sol.iterations;
            j["residual"] = number(sol.residual);
            j["bias"] = std::vector<double>(sol.bias.data(), sol.bias.data() + sol.bias.size());
            Json q = Json::array();
            for (Eigen::Index s = 0; s < sol.q.rows(); ++s) {
                Json row = Json::array();
                for (Eigen::Index a = 0; a < sol.q.cols(); ++a) { row.push_back(sol.q(s, a)); }
                q.push_back(row);
            }
            j["q"] = q;
            auto file = open_output(out / fmt::format("solution_seed{}.json", params.seed));
            file << j.dump(2) << "\n";
            fmt::print(log, "model {}: J* = {:.12f}, span = {:.6f}, residual = {:.3e}, iterations = {}\n", params.seed,
                       sol.gain, sol.span, sol.residual, sol.iterations);
        } catch (const ConvergenceError &e) {
            ok = false;
            fmt::print(log, "model {}: {} (residual {})\n", params.seed, e.what(), e.residual());
        }
    }
    return ok ? 0 : 1;
}

int generate_models(const ExperimentConfig &config, const fs::path &out, std::ostream &log) {
    fs::create_directories(out);
    for (int i = 0; i < config.run.n_seeds; ++i) {
        const SmoothMdpParams params = mdp_params(config, i);
        const auto path = out / fmt::format("mdp_seed{}.json", params.seed);
        write_model(make_smooth_mdp(params), path);
        fmt::print(log, "wrote {}\n", path.string());
    }
    return 0;
}

}  // namespace kucb
