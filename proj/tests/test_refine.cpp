#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "offload/refine.hpp"
#include "offload/rng.hpp"
#include "test_util.hpp"

using namespace offload;
using doctest::Approx;

namespace {

FractionalDecision make_w(int n, int strategies, std::vector<double> values) {
  FractionalDecision w;
  w.n = n;
  w.strategies = strategies;
  w.w = std::move(values);
  REQUIRE(static_cast<int>(w.w.size()) == n * strategies);
  return w;
}

FractionalDecision random_row_stochastic(int n, int strategies, RngStream& rng) {
  FractionalDecision w;
  w.n = n;
  w.strategies = strategies;
  w.w.resize(static_cast<std::size_t>(n) * strategies);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < strategies; ++j) {
      double v = rng.uniform();
      w.at(i, j) = v;
      sum += v;
    }
    for (int j = 0; j < strategies; ++j) w.at(i, j) /= sum;
  }
  return w;
}

/// Independent exact matcher: memoized search over (device, used-node mask).
/// Only usable on small graphs; returns the matched node per device.
struct BruteForce {
  const RoundingGraph& g;
  int node_count;
  std::vector<std::vector<std::pair<int, double>>> adj;  // device -> (node, w)
  std::vector<double> memo;
  std::vector<char> known;
  std::vector<int> choice;

  explicit BruteForce(const RoundingGraph& graph) : g(graph) {
    node_count = g.node_count();
    REQUIRE(node_count <= 20);
    adj.resize(g.n_devices);
    for (const RoundingEdge& e : g.edges)
      adj[e.device].push_back({g.node_index(e.strategy, e.slot), e.weight});
    std::size_t states = static_cast<std::size_t>(g.n_devices) << node_count;
    memo.assign(states, 0.0);
    known.assign(states, 0);
    choice.assign(states, -1);
  }

  static constexpr double kNoMatch = -1e18;

  double solve(int device, unsigned mask) {
    if (device == g.n_devices) return 0.0;
    std::size_t key = (static_cast<std::size_t>(device) << node_count) | mask;
    if (known[key]) return memo[key];
    double best = kNoMatch;
    int best_node = -1;
    for (auto [node, w] : adj[device]) {
      if (mask & (1u << node)) continue;
      double rest = solve(device + 1, mask | (1u << node));
      if (rest == kNoMatch) continue;
      if (w + rest > best) {
        best = w + rest;
        best_node = node;
      }
    }
    known[key] = 1;
    memo[key] = best;
    choice[key] = best_node;
    return best;
  }

  /// Total of the optimal matching, re-summed in device order so it is
  /// directly comparable with Matching::total_weight.
  double best_total() {
    if (solve(0, 0) == kNoMatch) return kNoMatch;
    double total = 0.0;
    unsigned mask = 0;
    for (int device = 0; device < g.n_devices; ++device) {
      std::size_t key = (static_cast<std::size_t>(device) << node_count) | mask;
      int node = choice[key];
      REQUIRE(node >= 0);
      for (auto [cand, w] : adj[device])
        if (cand == node) {
          total += w;
          break;
        }
      mask |= 1u << node;
    }
    return total;
  }
};

}  // namespace

TEST_CASE("row normalization: unit rows pass through, others rescale") {
  std::vector<double> x = {0.2, 2.0, 0.0};
  std::vector<double> y = {0.3, 3.0, 0.0};  // M = 1
  std::vector<double> z = {0.5, 5.0, 0.0};
  FractionalDecision w = normalize_rows(x, y, z, 3, 1);
  CHECK(w.at(0, 0) == Approx(0.2).epsilon(1e-12));
  CHECK(w.at(0, 1) == Approx(0.3).epsilon(1e-12));
  CHECK(w.at(0, 2) == Approx(0.5).epsilon(1e-12));
  CHECK(w.at(1, 0) == Approx(0.2).epsilon(1e-12));
  CHECK(w.at(1, 1) == Approx(0.3).epsilon(1e-12));
  CHECK(w.at(1, 2) == Approx(0.5).epsilon(1e-12));
  // the all-zero row becomes uniform over the M+2 strategies
  CHECK(w.at(2, 0) == Approx(1.0 / 3).epsilon(1e-12));
  CHECK(w.at(2, 1) == Approx(1.0 / 3).epsilon(1e-12));
  CHECK(w.at(2, 2) == Approx(1.0 / 3).epsilon(1e-12));

  std::vector<double> neg = {-0.1, 0.0, 0.0};
  CHECK_THROWS_AS(normalize_rows(neg, y, z, 3, 1), std::invalid_argument);
}

TEST_CASE("rounding graph splits a column at the unit boundaries") {
  // column 0 = (0.6, 0.7, 0.7), remainder keeps rows stochastic
  FractionalDecision w =
      make_w(3, 2, {0.6, 0.4, 0.7, 0.3, 0.7, 0.3});
  RoundingGraph g = build_rounding_graph(w);
  REQUIRE(g.slots_per_strategy[0] == 2);
  REQUIRE(g.slots_per_strategy[1] == 1);

  auto edge = [&](int device, int strategy, int slot) -> double {
    for (const RoundingEdge& e : g.edges)
      if (e.device == device && e.strategy == strategy && e.slot == slot) return e.weight;
    return -1.0;
  };
  CHECK(edge(0, 0, 1) == Approx(0.6).epsilon(1e-12));
  CHECK(edge(1, 0, 1) == Approx(0.4).epsilon(1e-12));
  CHECK(edge(1, 0, 2) == Approx(0.3).epsilon(1e-12));
  CHECK(edge(2, 0, 2) == Approx(0.7).epsilon(1e-12));
  CHECK(edge(0, 0, 2) == -1.0);
  CHECK(edge(2, 0, 1) == -1.0);
}

TEST_CASE("a column summing below one keeps a single node") {
  FractionalDecision w = make_w(2, 2, {0.3, 0.7, 0.4, 0.6});
  RoundingGraph g = build_rounding_graph(w);
  CHECK(g.slots_per_strategy[0] == 1);
  int count = 0;
  for (const RoundingEdge& e : g.edges) {
    if (e.strategy != 0) continue;
    CHECK(e.slot == 1);
    count += 1;
    CHECK(e.weight == Approx(e.device == 0 ? 0.3 : 0.4).epsilon(1e-12));
  }
  CHECK(count == 2);
}

TEST_CASE("an all-zero column builds no nodes and no edges") {
  FractionalDecision w = make_w(2, 2, {1.0, 0.0, 1.0, 0.0});
  RoundingGraph g = build_rounding_graph(w);
  CHECK(g.slots_per_strategy[1] == 0);
  for (const RoundingEdge& e : g.edges) CHECK(e.strategy == 0);
}

TEST_CASE("rounding graph invariants hold on random row-stochastic inputs") {
  RngStream rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    int n = 1 + static_cast<int>(rng.uniform_index(20));
    int strategies = 2 + static_cast<int>(rng.uniform_index(6));
    FractionalDecision w = random_row_stochastic(n, strategies, rng);
    RoundingGraph g = build_rounding_graph(w);

    std::vector<double> node_weight(g.node_count(), 0.0);
    std::vector<double> device_weight(n, 0.0);
    for (const RoundingEdge& e : g.edges) {
      CHECK(e.weight > 0.0);
      node_weight[g.node_index(e.strategy, e.slot)] += e.weight;
      device_weight[e.device] += e.weight;
    }
    for (double nw : node_weight) CHECK(nw <= 1.0 + 1e-12);
    for (double dw : device_weight) CHECK(dw == Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("matching picks the single pair on a one-edge graph") {
  FractionalDecision w = make_w(1, 2, {0.7, 0.3});
  RoundingGraph g = build_rounding_graph(w);
  Matching m = max_weight_complete_matching(g);
  CHECK(m.total_weight == Approx(0.7).epsilon(1e-12));
  auto [strategy, slot] = g.node_strategy_slot(m.node_of_device[0]);
  CHECK(strategy == 0);
  CHECK(slot == 1);
}

TEST_CASE("matching maximizes total weight, not the greedy row choice") {
  // weights [[0.9, 0.1], [0.8, 0.7]]: greedy would send both to node 0
  RoundingGraph g;
  g.n_devices = 2;
  g.strategies = 2;
  g.slots_per_strategy = {1, 1};
  g.node_offset = {0, 1};
  g.edges = {{0, 0, 1, 0.9}, {0, 1, 1, 0.1}, {1, 0, 1, 0.8}, {1, 1, 1, 0.7}};
  Matching m = max_weight_complete_matching(g);
  CHECK(m.total_weight == Approx(1.6).epsilon(1e-12));
  CHECK(m.node_of_device[0] == 0);
  CHECK(m.node_of_device[1] == 1);
}

TEST_CASE("matching equals the exhaustive optimum on random instances") {
  RngStream rng(47);
  for (int trial = 0; trial < 60; ++trial) {
    int n = 1 + static_cast<int>(rng.uniform_index(7));
    int strategies = 2 + static_cast<int>(rng.uniform_index(6));
    FractionalDecision w = random_row_stochastic(n, strategies, rng);
    RoundingGraph g = build_rounding_graph(w);
    Matching m = max_weight_complete_matching(g);
    BruteForce bf(g);
    CHECK(m.total_weight == bf.best_total());
  }
}

TEST_CASE("extracted decisions are one-hot and follow the matched strategy") {
  FractionalDecision w =
      make_w(3, 4, {0.6, 0.2, 0.1, 0.1, 0.7, 0.1, 0.1, 0.1, 0.7, 0.1, 0.1, 0.1});
  RoundingGraph g = build_rounding_graph(w);
  Matching m = max_weight_complete_matching(g);
  std::vector<OffloadDecision> d = extract_decisions(g, m);
  REQUIRE(d.size() == 3);
  for (int i = 0; i < 3; ++i) {
    auto [strategy, slot] = g.node_strategy_slot(m.node_of_device[i]);
    (void)slot;
    if (strategy == 0) CHECK(d[i].mode == OffloadDecision::Mode::Local);
    if (strategy == 3) CHECK(d[i].mode == OffloadDecision::Mode::Mbs);
    if (strategy == 1 || strategy == 2) {
      CHECK(d[i].mode == OffloadDecision::Mode::Sbs);
      CHECK(d[i].sbs_id == strategy);
    }
  }
}

namespace {

struct ProjectFixture {
  int n = 2, m = 1;
  std::vector<double> sbs_rates = {1.0e8, 1.0e8};
  std::vector<double> mbs_rates = {5.0e7, 5.0e7};
  std::vector<double> bits = {4.0e7, 4.0e7};
  std::vector<double> cycles = {1.0e9, 1.0e9};
  std::vector<double> deadline = {1.0, 1.0};
  std::vector<double> capacities = {50.0e9, 10.0e9};  // MBS, SBS

  RefineInputs inputs() const {
    return {sbs_rates, mbs_rates, bits, cycles, deadline, capacities};
  }

  EnvAction action(double f0, double f1) const {
    EnvAction a;
    a.n = n;
    a.m = m;
    a.x = {0.0, 0.0};
    a.y = {1.0, 1.0};
    a.z = {0.0, 0.0};
    a.sbs_alloc = {f0, f1};
    a.mbs_alloc = {0.0, 0.0};
    return a;
  }
};

}  // namespace

TEST_CASE("allocation projection keeps feasible requests untouched") {
  ProjectFixture fx;
  EnvAction a = fx.action(5.0e9, 3.0e9);  // sums to 8 GHz at a 10 GHz SBS
  std::vector<OffloadDecision> d = {{OffloadDecision::Mode::Sbs, 1},
                                    {OffloadDecision::Mode::Sbs, 1}};
  RefinedAction out;
  project_allocations(a, d, fx.inputs(), out);
  CHECK(out.sbs_alloc[0] == Approx(5.0e9).epsilon(1e-12));
  CHECK(out.sbs_alloc[1] == Approx(3.0e9).epsilon(1e-12));
}

TEST_CASE("allocation projection rescales an oversubscribed station") {
  ProjectFixture fx;
  EnvAction a = fx.action(12.0e9, 8.0e9);  // 20 GHz requested at 10 GHz
  std::vector<OffloadDecision> d = {{OffloadDecision::Mode::Sbs, 1},
                                    {OffloadDecision::Mode::Sbs, 1}};
  RefinedAction out;
  project_allocations(a, d, fx.inputs(), out);
  CHECK(out.sbs_alloc[0] == Approx(6.0e9).epsilon(1e-12));
  CHECK(out.sbs_alloc[1] == Approx(4.0e9).epsilon(1e-12));
  CHECK(out.sbs_alloc[0] + out.sbs_alloc[1] <= fx.capacities[1] * (1 + 1e-12));
}

TEST_CASE("allocation projection floors at the minimal feasible allocation") {
  ProjectFixture fx;
  EnvAction a = fx.action(0.0, 0.0);  // the actor asked for nothing
  std::vector<OffloadDecision> d = {{OffloadDecision::Mode::Sbs, 1},
                                    {OffloadDecision::Mode::Sbs, 1}};
  RefinedAction out;
  project_allocations(a, d, fx.inputs(), out);
  // f_min = 1e9 / (1 - 4e7/1e8) = 1e9/0.6
  CHECK(out.sbs_alloc[0] == Approx(1.0e9 / 0.6).epsilon(1e-9));
  CHECK(out.sbs_alloc[1] == Approx(1.0e9 / 0.6).epsilon(1e-9));
}

TEST_CASE("stations without offloaders stay at zero") {
  ProjectFixture fx;
  EnvAction a = fx.action(5.0e9, 5.0e9);
  std::vector<OffloadDecision> d = {OffloadDecision{}, OffloadDecision{}};
  RefinedAction out;
  project_allocations(a, d, fx.inputs(), out);
  for (double f : out.sbs_alloc) CHECK(f == 0.0);
  for (double f : out.mbs_alloc) CHECK(f == 0.0);
}

TEST_CASE("refine keeps a dominant local preference local") {
  ProjectFixture fx;
  EnvAction a;
  a.n = 1;
  a.m = 1;
  a.x = {0.9};
  a.y = {0.05};
  a.z = {0.05};
  a.sbs_alloc = {0.0};
  a.mbs_alloc = {0.0};
  std::vector<double> sbs_rates = {1.0e8};
  std::vector<double> mbs_rates = {5.0e7};
  std::vector<double> bits = {4.0e7};
  std::vector<double> cycles = {1.0e9};
  std::vector<double> deadline = {1.0};
  std::vector<double> caps = {50.0e9, 10.0e9};
  RefineInputs in{sbs_rates, mbs_rates, bits, cycles, deadline, caps};
  RefinedAction out = refine(a, in);
  CHECK(out.decisions[0].mode == OffloadDecision::Mode::Local);
}

TEST_CASE("refine is a fixed point on one-hot feasible input") {
  ProjectFixture fx;
  EnvAction a;
  a.n = 2;
  a.m = 1;
  a.x = {1.0, 0.0};
  a.y = {0.0, 1.0};
  a.z = {0.0, 0.0};
  a.sbs_alloc = {0.0, 4.0e9};  // above f_min, below capacity
  a.mbs_alloc = {0.0, 0.0};
  RefinedAction out = refine(a, fx.inputs());
  CHECK(out.decisions[0].mode == OffloadDecision::Mode::Local);
  CHECK(out.decisions[1].mode == OffloadDecision::Mode::Sbs);
  CHECK(out.decisions[1].sbs_id == 1);
  CHECK(out.sbs_alloc[1] == Approx(4.0e9).epsilon(1e-12));
}

TEST_CASE("refined actions preserve support and cardinality bounds") {
  RngStream rng(53);
  ProjectFixture fx;
  Topology topo = test::make_topology({{200.0, 0.0}, {210.0, 0.0}}, {{250.0, 0.0}});
  std::vector<TaskSpec> tasks = {{4e7, 1e9, 1.0}, {4e7, 1e9, 1.0}};

  for (int trial = 0; trial < 300; ++trial) {
    EnvAction a;
    a.n = 2;
    a.m = 1;
    a.x = {rng.uniform(), rng.uniform()};
    a.y = {rng.uniform(), rng.uniform()};
    a.z = {rng.uniform(), rng.uniform()};
    a.sbs_alloc = {rng.uniform() * 10e9, rng.uniform() * 10e9};
    a.mbs_alloc = {rng.uniform() * 50e9, rng.uniform() * 50e9};

    FractionalDecision w = normalize_rows(a.x, a.y, a.z, 2, 1);
    RefinedAction out = refine(a, fx.inputs());

    std::vector<int> per_strategy(3, 0);
    for (int i = 0; i < 2; ++i) {
      int strategy = out.decisions[i].mode == OffloadDecision::Mode::Local ? 0
                     : out.decisions[i].mode == OffloadDecision::Mode::Sbs ? 1
                                                                           : 2;
      per_strategy[strategy] += 1;
      CHECK(w.at(i, strategy) > 0.0);  // support preservation
    }
    for (int j = 0; j < 3; ++j) {
      double col = w.at(0, j) + w.at(1, j);
      CHECK(per_strategy[j] <= static_cast<int>(std::ceil(col - 1e-12)));
    }

    Assignment assignment = to_assignment(out, fx.inputs());
    CHECK(check_feasible(assignment, topo, tasks).structural_ok());
  }
}
