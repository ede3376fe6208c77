#include "kucb/agent.hpp"
#include "kucb/gram_state.hpp"
#include "kucb/grid_regressor.hpp"
#include "kucb/mdp.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

std::vector<kucb::Point> random_points(int n, int dim, std::uint64_t seed) {
    kucb::Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<kucb::Point> pts(static_cast<std::size_t>(n), kucb::Point(static_cast<std::size_t>(dim)));
    for (auto &p : pts) {
        for (auto &x : p) { x = u(rng); }
    }
    return pts;
}

kucb::SmoothMdpParams bench_params(int states, int actions) {
    kucb::SmoothMdpParams p;
    p.seed = 7;
    p.num_states = states;
    p.num_actions = actions;
    return p;
}

void BM_GramAppend(benchmark::State &state) {
    const auto n = static_cast<int>(state.range(0));
    const auto pts = random_points(n, 2, 1);
    for (auto _ : state) {
        kucb::GramState gs(kucb::KernelSpec::squared_exponential(2, 0.3), 1.0);
        for (const auto &p : pts) { gs.append(p); }
        benchmark::DoNotOptimize(gs.logdet());
    }
    state.SetComplexityN(n);
}
BENCHMARK(BM_GramAppend)->RangeMultiplier(2)->Range(64, 1024)->Complexity(benchmark::oNCubed);

void BM_GridFactorize(benchmark::State &state) {
    const auto model = kucb::make_smooth_mdp(bench_params(static_cast<int>(state.range(0)), 4));
    kucb::GridRegressor reg(kucb::KernelSpec::squared_exponential(2, 0.3), 1.0, model.state_action_grid());
    kucb::Rng rng(3);
    std::uniform_int_distribution<std::size_t> pick(0, model.state_action_grid().size() - 1);
    for (int i = 0; i < 5000; ++i) { reg.add(pick(rng)); }
    for (auto _ : state) { benchmark::DoNotOptimize(reg.factorize().logdet()); }
}
BENCHMARK(BM_GridFactorize)->Arg(10)->Arg(20)->Arg(40);

void BM_PlanWindow(benchmark::State &state) {
    const auto model = kucb::make_smooth_mdp(bench_params(20, 4));
    const auto view = kucb::AgentView::of(model);
    kucb::GridRegressor reg(kucb::KernelSpec::squared_exponential(2, 0.3), 1.0, view.grid);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(view.grid.size()), view.num_states);
    kucb::Rng rng(5);
    int s = 0;
    for (int i = 0; i < 2000; ++i) {
        const int a = i % view.num_actions;
        const auto tr = kucb::step(model, s, a, rng);
        reg.add(static_cast<std::size_t>(model.row(s, a)));
        counts(model.row(s, a), tr.next_state) += 1.0;
        s = tr.next_state;
    }
    const kucb::GridWindowRegression regression(reg.factorize(), counts);
    const int w = static_cast<int>(state.range(0));
    for (auto _ : state) { benchmark::DoNotOptimize(kucb::plan_window(regression, view, w, 1.0, 2000).v.front()(0)); }
}
BENCHMARK(BM_PlanWindow)->Arg(1)->Arg(10)->Arg(50);

void BM_SolveAverageReward(benchmark::State &state) {
    const auto model = kucb::make_smooth_mdp(bench_params(static_cast<int>(state.range(0)), 4));
    for (auto _ : state) { benchmark::DoNotOptimize(kucb::solve_average_reward(model).gain); }
}
BENCHMARK(BM_SolveAverageReward)->Arg(20)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
