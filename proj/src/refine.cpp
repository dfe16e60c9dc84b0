#include "offload/refine.hpp"

#include <cmath>
#include <stdexcept>

#include "offload/hungarian.hpp"

namespace offload {

namespace {
// Tolerance for cumulative-sum comparisons in the rounding construction.
constexpr double kTol = 1e-12;
}  // namespace

FractionalDecision normalize_rows(std::span<const double> x, std::span<const double> y,
                                  std::span<const double> z, int n_devices, int m_sbs) {
  const int strategies = m_sbs + 2;
  if (static_cast<int>(x.size()) != n_devices ||
      static_cast<int>(y.size()) != n_devices * m_sbs ||
      static_cast<int>(z.size()) != n_devices)
    throw std::invalid_argument("normalize_rows: block length mismatch");

  FractionalDecision w;
  w.n = n_devices;
  w.strategies = strategies;
  w.w.assign(static_cast<std::size_t>(n_devices) * strategies, 0.0);

  for (int i = 0; i < n_devices; ++i) {
    w.at(i, 0) = x[i];
    for (int j = 0; j < m_sbs; ++j) w.at(i, 1 + j) = y[static_cast<std::size_t>(i) * m_sbs + j];
    w.at(i, strategies - 1) = z[i];

    double sum = 0.0;
    for (int j = 0; j < strategies; ++j) {
      if (w.at(i, j) < 0.0)
        throw std::invalid_argument("normalize_rows: negative decision weight");
      sum += w.at(i, j);
    }
    if (sum <= kTol) {
      // a saturated-low actor emits all zeros; keep the row usable
      for (int j = 0; j < strategies; ++j) w.at(i, j) = 1.0 / strategies;
    } else {
      for (int j = 0; j < strategies; ++j) w.at(i, j) /= sum;
    }
  }
  return w;
}

int RoundingGraph::node_count() const {
  return node_offset.empty() ? 0 : node_offset.back() + slots_per_strategy.back();
}

int RoundingGraph::node_index(int strategy, int slot) const {
  return node_offset[strategy] + slot - 1;
}

std::pair<int, int> RoundingGraph::node_strategy_slot(int node) const {
  for (int j = strategies - 1; j >= 0; --j) {
    if (node >= node_offset[j]) return {j, node - node_offset[j] + 1};
  }
  throw std::out_of_range("RoundingGraph: bad node index");
}

RoundingGraph build_rounding_graph(const FractionalDecision& w) {
  RoundingGraph g;
  g.n_devices = w.n;
  g.strategies = w.strategies;
  g.slots_per_strategy.assign(w.strategies, 0);
  g.node_offset.assign(w.strategies, 0);

  for (int j = 0; j < w.strategies; ++j) {
    double col_sum = 0.0;
    for (int i = 0; i < w.n; ++i) col_sum += w.at(i, j);
    g.slots_per_strategy[j] = col_sum <= kTol
                                  ? 0
                                  : static_cast<int>(std::ceil(col_sum - kTol));
  }
  for (int j = 1; j < w.strategies; ++j)
    g.node_offset[j] = g.node_offset[j - 1] + g.slots_per_strategy[j - 1];

  for (int j = 0; j < w.strategies; ++j) {
    const int slots = g.slots_per_strategy[j];
    if (slots == 0) continue;

    if (slots == 1) {
      // one virtual node; every positive weight attaches directly
      for (int i = 0; i < w.n; ++i) {
        if (w.at(i, j) > 0.0)
          g.edges.push_back({i, j, 1, w.at(i, j)});
      }
      continue;
    }

    // Walk devices in index order and split each one's weight across the
    // unit-capacity slots its cumulative interval [cum, cum+w) covers. The
    // device straddling a slot boundary contributes its residual weight to
    // the next slot, so incident weight at every slot stays <= 1.
    double cum = 0.0;
    for (int i = 0; i < w.n; ++i) {
      double wij = w.at(i, j);
      if (wij <= 0.0) continue;
      double lo = cum;
      double hi = std::min(cum + wij, static_cast<double>(slots));
      cum += wij;
      int s_first = std::max(1, static_cast<int>(std::floor(lo + kTol)) + 1);
      int s_last = std::min(slots, static_cast<int>(std::ceil(hi - kTol)));
      for (int s = s_first; s <= s_last; ++s) {
        double piece = std::min(hi, static_cast<double>(s)) -
                       std::max(lo, static_cast<double>(s - 1));
        if (piece > kTol) g.edges.push_back({i, j, s, piece});
      }
    }
  }
  return g;
}

Matching max_weight_complete_matching(const RoundingGraph& g) {
  const int rows = g.n_devices;
  const int cols = g.node_count();
  if (cols < rows)
    throw std::runtime_error(
        "max_weight_complete_matching: fewer virtual nodes than devices");

  std::vector<double> weight(static_cast<std::size_t>(rows) * cols, -1.0);
  for (const RoundingEdge& e : g.edges) {
    int node = g.node_index(e.strategy, e.slot);
    weight[static_cast<std::size_t>(e.device) * cols + node] = e.weight;
  }

  AssignmentResult res = max_weight_assignment(weight, rows, cols, 0.0);
  if (!res.complete)
    throw std::runtime_error(
        "max_weight_complete_matching: no matching covers every device");

  Matching m;
  m.node_of_device = res.match_of_left;
  m.total_weight = res.total_weight;
  return m;
}

std::vector<OffloadDecision> extract_decisions(const RoundingGraph& g, const Matching& m) {
  if (static_cast<int>(m.node_of_device.size()) != g.n_devices)
    throw std::invalid_argument("extract_decisions: matching does not cover devices");
  std::vector<OffloadDecision> out(g.n_devices);
  for (int i = 0; i < g.n_devices; ++i) {
    auto [strategy, slot] = g.node_strategy_slot(m.node_of_device[i]);
    (void)slot;
    OffloadDecision d;
    if (strategy == 0) {
      d.mode = OffloadDecision::Mode::Local;
    } else if (strategy == g.strategies - 1) {
      d.mode = OffloadDecision::Mode::Mbs;
    } else {
      d.mode = OffloadDecision::Mode::Sbs;
      d.sbs_id = strategy;
    }
    out[i] = d;
  }
  return out;
}

void project_allocations(const EnvAction& action,
                         std::span<const OffloadDecision> decisions,
                         const RefineInputs& in, RefinedAction& out) {
  const int n = action.n;
  const int m = action.m;
  out.n = n;
  out.m = m;
  out.decisions.assign(decisions.begin(), decisions.end());
  out.sbs_alloc.assign(static_cast<std::size_t>(n) * m, 0.0);
  out.mbs_alloc.assign(n, 0.0);

  std::vector<double> station_sum(m + 1, 0.0);
  for (int i = 0; i < n; ++i) {
    const OffloadDecision& d = decisions[i];
    if (d.mode == OffloadDecision::Mode::Local) continue;

    TaskSpec residual{in.input_bits[i], in.remaining_cycles[i], 0.0};
    double rate, requested;
    if (d.mode == OffloadDecision::Mode::Sbs) {
      rate = in.sbs_rates[static_cast<std::size_t>(i) * m + (d.sbs_id - 1)];
      requested = action.sbs_alloc[static_cast<std::size_t>(i) * m + (d.sbs_id - 1)];
    } else {
      rate = in.mbs_rates[i];
      requested = action.mbs_alloc[i];
    }

    double f = requested;
    if (auto fmin = min_feasible_alloc(residual, rate, in.deadline_s[i]))
      f = std::max(f, *fmin);

    if (d.mode == OffloadDecision::Mode::Sbs)
      out.sbs_alloc[static_cast<std::size_t>(i) * m + (d.sbs_id - 1)] = f;
    else
      out.mbs_alloc[i] = f;
    station_sum[d.station()] += f;
  }

  // proportional rescale of every oversubscribed station
  for (int st = 0; st <= m; ++st) {
    double cap = in.capacities[st];
    if (station_sum[st] <= cap || station_sum[st] <= 0.0) continue;
    double scale = cap / station_sum[st];
    for (int i = 0; i < n; ++i) {
      const OffloadDecision& d = out.decisions[i];
      if (d.station() != st) continue;
      if (d.mode == OffloadDecision::Mode::Sbs)
        out.sbs_alloc[static_cast<std::size_t>(i) * m + (d.sbs_id - 1)] *= scale;
      else
        out.mbs_alloc[i] *= scale;
    }
  }
}

RefinedAction refine(const EnvAction& action, const RefineInputs& in) {
  FractionalDecision w = normalize_rows(action.x, action.y, action.z, action.n, action.m);
  RoundingGraph g = build_rounding_graph(w);
  Matching m = max_weight_complete_matching(g);
  std::vector<OffloadDecision> decisions = extract_decisions(g, m);
  RefinedAction out;
  project_allocations(action, decisions, in, out);
  return out;
}

Assignment to_assignment(const RefinedAction& a, const RefineInputs& in) {
  Assignment out;
  out.decisions = a.decisions;
  out.alloc.assign(a.n, 0.0);
  out.rate_bps.assign(a.n, 0.0);
  for (int i = 0; i < a.n; ++i) {
    const OffloadDecision& d = a.decisions[i];
    if (d.mode == OffloadDecision::Mode::Local) continue;
    out.alloc[i] = a.alloc_of(i);
    out.rate_bps[i] = d.mode == OffloadDecision::Mode::Sbs
                          ? in.sbs_rates[static_cast<std::size_t>(i) * a.m + (d.sbs_id - 1)]
                          : in.mbs_rates[i];
  }
  return out;
}

}  // namespace offload
