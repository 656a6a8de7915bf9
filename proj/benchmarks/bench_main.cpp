#include "ates/baselines.hpp"
#include "ates/config.hpp"
#include "ates/experiments.hpp"
#include "ates/mhe.hpp"
#include "ates/mpc.hpp"
#include "ates/pwa.hpp"
#include "ates/qp.hpp"
#include "ates/surrogate.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace ates;

namespace {

const ScenarioConfig& config() {
  static const ScenarioConfig cfg = default_scenario();
  return cfg;
}

const TruthRun& truth() {
  static const TruthRun run = [] {
    ScenarioConfig cfg = config();
    cfg.steps = 120;
    return generate_truth(cfg);
  }();
  return run;
}

void BM_SurrogateStep(benchmark::State& state) {
  const ScenarioConfig& cfg = config();
  const SurrogateModel model(cfg);
  Vector x = charged_state(cfg);
  const double u = 0.5 * cfg.u_max;
  for (auto _ : state) {
    x = model.step(x, u, cfg.return_temperature(u));
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_SurrogateStep);

void BM_PwaBuild(benchmark::State& state) {
  const ScenarioConfig& cfg = config();
  const SurrogateModel model(cfg);
  for (auto _ : state) {
    PwaModel pwa(model, cfg.u_max, static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(&pwa);
  }
}
BENCHMARK(BM_PwaBuild)->Arg(11)->Arg(51)->Unit(benchmark::kMillisecond);

/// One full-window MHE solve, including window assembly.
void BM_MheUpdate(benchmark::State& state) {
  const ScenarioConfig& cfg = config();
  const auto nominal = std::make_shared<const SurrogateModel>(cfg);
  const auto pwa = std::make_shared<const PwaModel>(*nominal, cfg.u_max, cfg.partitions);
  const TruthRun& run = truth();
  MovingHorizonEstimator mhe(MheSettings::from_config(cfg), ModeSource::lookup(pwa));
  int k = 0;
  for (; k < cfg.mhe_horizon; ++k) mhe.update(run.record(k));
  for (auto _ : state) {
    if (k == run.steps()) {
      state.PauseTiming();
      mhe = MovingHorizonEstimator(MheSettings::from_config(cfg), ModeSource::lookup(pwa));
      for (k = 0; k < cfg.mhe_horizon; ++k) mhe.update(run.record(k));
      state.ResumeTiming();
    }
    benchmark::DoNotOptimize(mhe.update(run.record(k++)));
  }
}
BENCHMARK(BM_MheUpdate)->Unit(benchmark::kMillisecond);

void BM_UkfUpdate(benchmark::State& state) {
  const ScenarioConfig& cfg = config();
  const auto nominal = std::make_shared<const SurrogateModel>(cfg);
  const TruthRun& run = truth();
  const GaussianBelief initial = GaussianBelief::isotropic(cfg.layout().uniform(cfg.initial_guess), 0.4);
  auto make = [&] {
    return UnscentedKalmanFilter(nominal, initial, NoiseSpec::from_settings(cfg.noise),
                                 OutputModel::borehole_sensors(cfg.layout()),
                                 UnscentedParams{cfg.ukf_alpha, cfg.ukf_beta, cfg.ukf_kappa});
  };
  UnscentedKalmanFilter ukf = make();
  int k = 0;
  for (auto _ : state) {
    if (k == run.steps()) {
      state.PauseTiming();
      ukf = make();
      k = 0;
      state.ResumeTiming();
    }
    benchmark::DoNotOptimize(ukf.update(run.record(k++)));
  }
}
BENCHMARK(BM_UkfUpdate)->Unit(benchmark::kMicrosecond);

void BM_OcpSolve(benchmark::State& state) {
  ScenarioConfig cfg = config();
  cfg.mpc_horizon = static_cast<int>(state.range(0));
  const SurrogateModel nominal(cfg);
  const Vector x0 = charged_state(cfg);
  const OcpSpec spec = make_ocp_spec(nominal, x0, cfg, default_demand(cfg.mpc_horizon));
  for (auto _ : state) benchmark::DoNotOptimize(solve_ocp(x0, spec));
}
BENCHMARK(BM_OcpSolve)->Arg(4)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
