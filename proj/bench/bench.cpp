// Times each OpenMP kernel against its serial reference and checks they agree.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <string>

#include "rca/evalharness.hpp"
#include "rca/simulator.hpp"
#include "rca/trainer.hpp"

using namespace rca;

namespace {

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void line(const char* name, double par_ms, double ser_ms, bool same) {
  std::printf("%-14s parallel %9.2f ms  serial %9.2f ms  speedup %5.2fx  %s\n", name, par_ms, ser_ms, ser_ms / par_ms,
              same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::stoul(argv[1]) : 400;
  const int reps = 3;
  std::printf("threads %d, %zu instances, best of %d\n", omp_get_max_threads(), n, reps);

  std::vector<sim::InstanceRequest> req;
  for (std::size_t i = 0; i < n; ++i) req.push_back({kAllCauses[i % kNumCauses], 9000 + i, 0});
  std::vector<sim::LabeledInstance> a, b;
  const double gen_par = best_of(reps, [&] { a = sim::build_batch(req); });
  const double gen_ser = best_of(reps, [&] { b = sim::build_batch_serial(req); });
  line("build_batch", gen_par, gen_ser, a == b);

  std::vector<DatasetRecord> records;
  std::vector<train::TrainItem> items;
  for (std::size_t i = 0; i < a.size(); ++i) {
    records.push_back(make_record(a[i], "b" + std::to_string(i), i));
    items.push_back(train::make_item(records.back()));
  }

  const eval::PolicySampler sampler(train::Policy::random(1, 0.5));
  eval::EvalConfig ecfg;
  ecfg.variant = eval::Variant::RANDOMIZED;
  eval::EvalReport ra, rb;
  const double ev_par = best_of(reps, [&] { ra = eval::evaluate(sampler, records, ecfg); });
  const double ev_ser = best_of(reps, [&] { rb = eval::evaluate_serial(sampler, records, ecfg); });
  line("evaluate", ev_par, ev_ser, ra == rb);

  const auto policy = train::Policy::random(2, 0.5);
  const train::PolicySnapshot old(policy, train::PolicySnapshot::Role::OLD);
  train::TrainConfig tcfg;
  std::vector<std::size_t> picks(items.size());
  for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
  std::vector<train::GroupRollout> ga, gb;
  const double s_par = best_of(reps, [&] { ga = train::sample_batch(old, items, picks, tcfg, 5); });
  const double s_ser = best_of(reps, [&] { gb = train::sample_batch_serial(old, items, picks, tcfg, 5); });
  bool same = ga.size() == gb.size();
  for (std::size_t i = 0; same && i < ga.size(); ++i) {
    for (std::size_t k = 0; k < ga[i].trajectories.size(); ++k)
      same = same && ga[i].trajectories[k].tokens == gb[i].trajectories[k].tokens &&
             ga[i].trajectories[k].advantage == gb[i].trajectories[k].advantage;
  }
  line("sample_batch", s_par, s_ser, same);
  return 0;
}
