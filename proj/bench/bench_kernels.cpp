// Timing comparison of the serial reference kernels against their OpenMP
// counterparts: batched network passes with gradient accumulation, the
// uplink rate matrix, and the oracle enumeration. Results must match
// bit-exactly; only the wall clock may differ.

#include <cstdio>
#include <omp.h>

#include "offload/baselines.hpp"
#include "offload/ddpg.hpp"
#include "offload/dense_net.hpp"
#include "offload/netmodel.hpp"

using namespace offload;

namespace {

template <typename F>
double time_of(F&& fn, int repeats) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    double t0 = omp_get_wtime();
    fn();
    best = std::min(best, omp_get_wtime() - t0);
  }
  return best;
}

void report(const char* name, double serial_s, double omp_s, bool identical) {
  std::printf("%-28s serial %9.4f ms   openmp %9.4f ms   speedup %5.2fx   %s\n", name,
              serial_s * 1e3, omp_s * 1e3, serial_s / omp_s,
              identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("threads available: %d\n\n", omp_get_max_threads());

  // batched forward + backward on a training-sized critic
  {
    RngStream rng(7);
    std::vector<int> hidden = {128, 128};
    DenseNet net = DenseNet::mlp(226, hidden, 1, Activation::Relu, Activation::Linear);
    net.init_uniform(rng);
    const int batch = 256;
    std::vector<double> input(batch * 226);
    for (double& v : input) v = rng.uniform();
    std::vector<double> out_grad(batch, 1.0);

    BatchTrace trace_s, trace_p;
    Gradients gs = net.make_gradients(), gp = net.make_gradients();
    auto serial = [&] {
      forward_batch(net, input, batch, trace_s, ExecMode::Serial);
      gs.zero();
      backward_batch(net, trace_s, out_grad, &gs, nullptr, ExecMode::Serial);
    };
    auto parallel = [&] {
      forward_batch(net, input, batch, trace_p, ExecMode::OpenMP);
      gp.zero();
      backward_batch(net, trace_p, out_grad, &gp, nullptr, ExecMode::OpenMP);
    };
    double ts = time_of(serial, 5), tp = time_of(parallel, 5);
    report("batch grad accumulation", ts, tp,
           trace_s.act.back() == trace_p.act.back() && gs.w == gp.w && gs.b == gp.b);
  }

  // uplink rate matrix with a busy interferer set
  {
    TopologyConfig tc;
    tc.device_count = 512;
    tc.sbs_count = 12;
    tc.mbs_radius_m = 800.0;
    ChannelParams chan;
    Topology topo = build_topology(tc, chan, 99);
    std::vector<Interferer> active;
    for (int i = 0; i < tc.device_count; i += 2) active.push_back({i, 0});

    RateMatrix rs, rp;
    double ts = time_of([&] { rs = compute_rates(topo, chan, active, ExecMode::Serial); }, 5);
    double tp = time_of([&] { rp = compute_rates(topo, chan, active, ExecMode::OpenMP); }, 5);
    report("uplink rate matrix", ts, tp, rs.sbs == rp.sbs && rs.mbs == rp.mbs);
  }

  // exhaustive oracle on the largest default-cap instance
  {
    TopologyConfig tc;
    tc.device_count = 7;
    tc.sbs_count = 2;
    ChannelParams chan;
    Topology topo = build_topology(tc, chan, 5);
    std::vector<TaskSpec> tasks = sample_tasks(7, {}, 11);
    RateMatrix rates = compute_rates(topo, chan, {}, ExecMode::Serial);

    OracleResult os, op;
    OracleLimits limits{10000000};
    double ts =
        time_of([&] { os = exhaustive_oracle(tasks, topo, rates, limits, ExecMode::Serial); }, 3);
    double tp =
        time_of([&] { op = exhaustive_oracle(tasks, topo, rates, limits, ExecMode::OpenMP); }, 3);
    report("oracle enumeration", ts, tp,
           os.feasible == op.feasible && os.energy_j == op.energy_j &&
               os.enumerated == op.enumerated);
  }
  return 0;
}
