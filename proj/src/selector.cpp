#include "sensorsel/selector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

namespace sensorsel {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start) {
  return std::chrono::duration<double>(clock_type::now() - start).count();
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int tid = 0; tid < threads; ++tid)
    pool.emplace_back([&fn, tid, count, threads] {
      for (int i = tid; i < count; i += threads) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

std::string to_string(ObservabilityReport::Verdict v) {
  switch (v) {
    case ObservabilityReport::Verdict::kVerifiedObservable:
      return "verified-observable";
    case ObservabilityReport::Verdict::kVerifiedUnobservable:
      return "verified-unobservable";
    default:
      return "inconclusive";
  }
}

ObservabilityReport verify_observability(const ObsDataMatrices& obs, RankTolerance threshold,
                                         std::optional<Index> state_dim) {
  const Index k = obs.seed_stacks.cols();
  if (k < 1) throw DataError("verify_observability(): no stacks available");

  const RankInfo seed_info = numerical_rank(obs.seed_stacks, threshold);
  const RankInfo eval_info = numerical_rank(obs.eval_stacks, threshold);

  ObservabilityReport report;
  report.rank_seed = seed_info.rank;
  report.rank_eval = eval_info.rank;
  report.columns = k;
  report.threshold_seed = seed_info.tolerance_used;
  report.threshold_eval = eval_info.tolerance_used;
  report.min_retained_sv_eval =
      eval_info.rank > 0 ? eval_info.singular_values[eval_info.rank - 1] : 0.0;
  report.state_dim = state_dim;

  using Verdict = ObservabilityReport::Verdict;
  if (state_dim) {
    const Index target = static_cast<Index>(obs.window) * obs.input_dim + *state_dim;
    report.target_rank = target;
    if (k < target)
      throw DataError("verify_observability(): fewer stacks than the rank target Nm+n");
    if (eval_info.rank == target)
      report.verdict = Verdict::kVerifiedObservable;
    else if (seed_info.rank == target)
      report.verdict = Verdict::kVerifiedUnobservable;
    else
      report.verdict = Verdict::kInconclusive;
    return report;
  }

  // Without the state dimension: a seed rank strictly below the column count
  // has plateaued at its maximum Nm+n, making the comparison decisive.
  if (seed_info.rank < k) {
    if (eval_info.rank == seed_info.rank)
      report.verdict = Verdict::kVerifiedObservable;
    else if (eval_info.rank < seed_info.rank)
      report.verdict = Verdict::kVerifiedUnobservable;
    else
      report.verdict = Verdict::kInconclusive;
  } else {
    report.verdict = Verdict::kInconclusive;
  }
  return report;
}

SelectionIndex select_topk(const Eigen::Ref<const VectorXd>& scores, int k) {
  const int p = static_cast<int>(scores.size());
  if (k < 1 || k > p) throw DimensionError("select_topk(): k must be in [1, p]");
  for (int i = 0; i < p; ++i)
    if (std::isnan(scores[i])) throw std::invalid_argument("select_topk(): NaN score");

  std::vector<int> order(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&scores](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  std::vector<int> picked(order.begin(), order.begin() + k);
  std::sort(picked.begin(), picked.end());
  for (int& id : picked) ++id;  // to 1-based sensor positions
  return SelectionIndex(picked, p);
}

namespace {

// Greedy step shared by select_greedy_logdet and cardinality relaxation:
// the candidate maximizing (logdet, trace, -position) of running + block.
struct GreedyPick {
  int position = -1;
  double logdet = -std::numeric_limits<double>::infinity();
  bool trace_fallback = false;
};

GreedyPick best_addition(const SymMatrix& running, const std::vector<SymMatrix>& blocks,
                         const std::vector<bool>& taken, double floor) {
  GreedyPick pick;
  double best_trace = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (int j = 0; j < static_cast<int>(blocks.size()); ++j) {
    if (taken[static_cast<std::size_t>(j)]) continue;
    const SymMatrix cand = running + blocks[static_cast<std::size_t>(j)];
    const double ld = log_det(cand, floor);
    const double tr = cand.trace();
    const bool better = !found || ld > pick.logdet || (ld == pick.logdet && tr > best_trace);
    if (better) {
      pick.position = j;
      pick.logdet = ld;
      best_trace = tr;
      found = true;
    }
  }
  pick.trace_fallback = found && std::isinf(pick.logdet);
  return pick;
}

}  // namespace

SelectionIndex select_greedy_logdet(const std::vector<SymMatrix>& blocks, int target_size,
                                    std::optional<SelectionIndex> seed, double floor) {
  const int p = static_cast<int>(blocks.size());
  if (p < 1) throw DimensionError("select_greedy_logdet(): no blocks given");
  const Index bdim = blocks.front().dim();
  for (const auto& b : blocks)
    if (b.dim() != bdim) throw DimensionError("select_greedy_logdet(): mixed block sizes");
  if (target_size < 1 || target_size > p)
    throw DimensionError("select_greedy_logdet(): target size must be in [1, p]");

  std::vector<bool> taken(static_cast<std::size_t>(p), false);
  SymMatrix running(bdim);
  int count = 0;
  if (seed) {
    if (seed->ambient() != p)
      throw DimensionError("select_greedy_logdet(): seed ambient must match block count");
    if (seed->size() > target_size)
      throw std::invalid_argument("select_greedy_logdet(): seed larger than target size");
    for (int id : seed->indices()) {
      taken[static_cast<std::size_t>(id - 1)] = true;
      running += blocks[static_cast<std::size_t>(id - 1)];
      ++count;
    }
  }

  while (count < target_size) {
    const GreedyPick pick = best_addition(running, blocks, taken, floor);
    taken[static_cast<std::size_t>(pick.position)] = true;
    running += blocks[static_cast<std::size_t>(pick.position)];
    ++count;
  }

  std::vector<int> ids;
  for (int j = 0; j < p; ++j)
    if (taken[static_cast<std::size_t>(j)]) ids.push_back(j + 1);
  return SelectionIndex(ids, p);
}

namespace {

Index position_in(const std::vector<int>& sorted_ids, int id) {
  const auto it = std::lower_bound(sorted_ids.begin(), sorted_ids.end(), id);
  if (it == sorted_ids.end() || *it != id)
    throw DimensionError("choose_subset(): sensor id missing from the evaluated set");
  return static_cast<Index>(it - sorted_ids.begin());
}

}  // namespace

SelectionIndex choose_subset(const Metric& metric, const std::vector<int>& evaluated,
                             const Eigen::Ref<const VectorXd>& scores,
                             const std::vector<SymMatrix>& blocks,
                             const std::vector<int>& eligible, int p_prime,
                             const std::optional<SelectionIndex>& seed, int ambient,
                             double floor, bool* tie_fallback) {
  if (static_cast<Index>(evaluated.size()) != scores.size())
    throw DimensionError("choose_subset(): scores misaligned with evaluated ids");
  if (p_prime < 1 || p_prime > static_cast<int>(eligible.size()))
    throw DimensionError("choose_subset(): p' must be in [1, #eligible]");
  if (tie_fallback) *tie_fallback = false;

  if (metric.kind == MetricKind::kTrace) {
    VectorXd eligible_scores(static_cast<Index>(eligible.size()));
    for (std::size_t i = 0; i < eligible.size(); ++i)
      eligible_scores[static_cast<Index>(i)] = scores[position_in(evaluated, eligible[i])];
    const SelectionIndex picked_pos = select_topk(eligible_scores, p_prime);
    std::vector<int> ids;
    for (int pos : picked_pos.indices()) ids.push_back(eligible[static_cast<std::size_t>(pos - 1)]);
    const SelectionIndex picked(ids, ambient);
    return seed ? picked.union_with(*seed) : picked;
  }

  if (blocks.size() != evaluated.size())
    throw DimensionError("choose_subset(): blocks misaligned with evaluated ids");

  std::vector<int> pool_ids = eligible;
  if (seed)
    for (int id : seed->indices()) pool_ids.push_back(id);
  std::sort(pool_ids.begin(), pool_ids.end());
  pool_ids.erase(std::unique(pool_ids.begin(), pool_ids.end()), pool_ids.end());

  std::vector<SymMatrix> pool_blocks;
  pool_blocks.reserve(pool_ids.size());
  for (int id : pool_ids)
    pool_blocks.push_back(blocks[static_cast<std::size_t>(position_in(evaluated, id))]);

  std::vector<bool> taken(pool_ids.size(), false);
  SymMatrix running(pool_blocks.front().dim());
  int count = 0;
  if (seed)
    for (int id : seed->indices()) {
      const auto pos = static_cast<std::size_t>(position_in(pool_ids, id));
      taken[pos] = true;
      running += pool_blocks[pos];
      ++count;
    }

  const int target = p_prime + count;
  while (count < target) {
    const GreedyPick pick = best_addition(running, pool_blocks, taken, floor);
    if (tie_fallback && pick.trace_fallback) *tie_fallback = true;
    taken[static_cast<std::size_t>(pick.position)] = true;
    running += pool_blocks[static_cast<std::size_t>(pick.position)];
    ++count;
  }

  std::vector<int> ids;
  for (std::size_t i = 0; i < pool_ids.size(); ++i)
    if (taken[i]) ids.push_back(pool_ids[i]);
  return SelectionIndex(ids, ambient);
}

namespace {

// Per-sensor estimates plus bookkeeping collected during the scoring phase.
struct ScoringOutput {
  std::vector<GramianEstimate> estimates;  // aligned with evaluated ids
  EstimateDiagnostics diagnostics;         // worst-rank bundle seen
  double collect_seconds = 0.0;
  double assemble_seconds = 0.0;
  double pinv_seconds = 0.0;
};

GramianEstimate estimate_column(const PipelineConfig& cfg, const RegressorBundle* inf_bundle,
                                const FiniteRegressorBundle* fin_bundle, int column) {
  if (cfg.metric.horizon.is_infinite()) return estimate_inf(*inf_bundle, column);
  return estimate_fin(*fin_bundle, column, cfg.metric.horizon.steps());
}

ScoringOutput score_concurrent(const PipelineConfig& cfg, const SelectionIndex& eval_union,
                               Trajectory& traj_out) {
  ScoringOutput out;
  auto t0 = clock_type::now();
  const MatrixXd u = generate_excitation(cfg.excitation, cfg.plant.m());
  traj_out = simulate(cfg.plant, u, cfg.seed_sensors, eval_union);
  out.collect_seconds = seconds_since(t0);

  AssemblyOptions opts;
  opts.pinv_tolerance = cfg.pinv_tolerance;
  std::optional<RegressorBundle> inf_bundle;
  std::optional<FiniteRegressorBundle> fin_bundle;
  t0 = clock_type::now();
  if (cfg.metric.horizon.is_infinite())
    inf_bundle = RegressorBundle::assemble(traj_out, cfg.window,
                                           cfg.metric.horizon.discount(), opts);
  else
    fin_bundle = FiniteRegressorBundle::assemble(traj_out, cfg.window, opts);
  out.pinv_seconds = inf_bundle ? inf_bundle->pinv_seconds() : fin_bundle->pinv_seconds();
  out.assemble_seconds = seconds_since(t0) - out.pinv_seconds;

  const int count = eval_union.size();
  out.estimates.resize(static_cast<std::size_t>(count));
  parallel_for(count, cfg.threads, [&](int i) {
    out.estimates[static_cast<std::size_t>(i)] =
        estimate_column(cfg, inf_bundle ? &*inf_bundle : nullptr,
                        fin_bundle ? &*fin_bundle : nullptr, i);
  });
  out.diagnostics = out.estimates.front().diagnostics;
  return out;
}

ScoringOutput score_sequential(const PipelineConfig& cfg, const SelectionIndex& eval_union) {
  ScoringOutput out;
  const int count = eval_union.size();
  out.estimates.resize(static_cast<std::size_t>(count));
  bool have_diag = false;
  for (int i = 0; i < count; ++i) {
    const int sensor_id = eval_union.indices()[static_cast<std::size_t>(i)];
    ExcitationConfig exc = cfg.excitation;
    exc.seed = cfg.excitation.seed + static_cast<std::uint64_t>(sensor_id);

    auto t0 = clock_type::now();
    const MatrixXd u = generate_excitation(exc, cfg.plant.m());
    const Trajectory traj = simulate(cfg.plant, u, cfg.seed_sensors,
                                     SelectionIndex::single(sensor_id, static_cast<int>(cfg.plant.p())));
    out.collect_seconds += seconds_since(t0);

    AssemblyOptions opts;
    opts.pinv_tolerance = cfg.pinv_tolerance;
    t0 = clock_type::now();
    GramianEstimate est;
    double pinv_s = 0.0;
    if (cfg.metric.horizon.is_infinite()) {
      const auto bundle =
          RegressorBundle::assemble(traj, cfg.window, cfg.metric.horizon.discount(), opts);
      pinv_s = bundle.pinv_seconds();
      est = estimate_inf(bundle, 0);
    } else {
      const auto bundle = FiniteRegressorBundle::assemble(traj, cfg.window, opts);
      pinv_s = bundle.pinv_seconds();
      est = estimate_fin(bundle, 0, cfg.metric.horizon.steps());
    }
    out.pinv_seconds += pinv_s;
    out.assemble_seconds += seconds_since(t0) - pinv_s;

    est.sensor_column = i;  // align with the evaluated-id ordering
    if (!have_diag || est.diagnostics.rank < out.diagnostics.rank) {
      out.diagnostics = est.diagnostics;
      have_diag = true;
    }
    out.estimates[static_cast<std::size_t>(i)] = std::move(est);
  }
  return out;
}

std::vector<Index> positions_in(const SelectionIndex& subset, const SelectionIndex& superset) {
  std::vector<Index> pos;
  pos.reserve(static_cast<std::size_t>(subset.size()));
  for (int id : subset.indices()) {
    const auto& ids = superset.indices();
    const auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id)
      throw DimensionError("run_selection(): chosen sensor missing from evaluated set");
    pos.push_back(static_cast<Index>(it - ids.begin()));
  }
  return pos;
}

Trajectory restrict_eval_channel(const Trajectory& traj, const std::vector<Index>& rows) {
  Trajectory out;
  out.u = traj.u;
  out.y_hat = traj.y_hat;
  out.y_tilde.resize(static_cast<Index>(rows.size()), traj.y_tilde.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.y_tilde.row(static_cast<Index>(i)) = traj.y_tilde.row(rows[i]);
  out.t0 = traj.t0;
  return out;
}

}  // namespace

SelectionResult run_selection(const PipelineConfig& cfg) {
  const auto t_start = clock_type::now();
  cfg.plant.validate();
  const int p = static_cast<int>(cfg.plant.p());
  if (cfg.seed_sensors.ambient() != p)
    throw ConfigError("run_selection(): seed set ambient count must equal p");
  if (cfg.window < 1) throw ConfigError("run_selection(): history length must be >= 1");
  if (!cfg.metric.horizon.is_infinite() && cfg.metric.horizon.steps() < 1)
    throw ConfigError("run_selection(): finite metrics need T >= 1");
  if (cfg.excitation.horizon < cfg.window + 2)
    throw ConfigError("run_selection(): excitation horizon too short for the window");
  if (cfg.candidates.empty()) throw ConfigError("run_selection(): no candidates given");

  const SelectionIndex candidates(cfg.candidates, p);
  const SelectionIndex eval_union = candidates.union_with(cfg.seed_sensors);

  std::vector<int> eligible;
  for (int id : candidates.indices())
    if (!cfg.seed_with_known_set || !cfg.seed_sensors.contains(id)) eligible.push_back(id);
  if (cfg.p_prime < 1 || cfg.p_prime > static_cast<int>(eligible.size()))
    throw ConfigError("run_selection(): p' must be in [1, #eligible candidates]");

  // --- scoring ---
  Trajectory joint_traj;
  ScoringOutput scored = cfg.data_mode == PipelineConfig::DataMode::kConcurrent
                             ? score_concurrent(cfg, eval_union, joint_traj)
                             : score_sequential(cfg, eval_union);

  const auto t_score = clock_type::now();
  VectorXd scores(eval_union.size());
  for (int i = 0; i < eval_union.size(); ++i)
    scores[i] = metric_value(scored.estimates[static_cast<std::size_t>(i)].cost_block,
                             cfg.metric.kind, cfg.logdet_floor);

  // --- subset choice ---
  const auto position_of = [&](int id) {
    return positions_in(SelectionIndex::single(id, p), eval_union).front();
  };

  std::vector<SymMatrix> blocks;
  if (cfg.metric.kind == MetricKind::kLogDet) {
    blocks.reserve(scored.estimates.size());
    for (const auto& est : scored.estimates) blocks.push_back(est.cost_block);
  }
  const std::optional<SelectionIndex> keep_seed =
      cfg.seed_with_known_set ? std::optional<SelectionIndex>(cfg.seed_sensors) : std::nullopt;
  bool tie_fallback = false;
  SelectionIndex chosen =
      choose_subset(cfg.metric, eval_union.indices(), scores, blocks, eligible, cfg.p_prime,
                    keep_seed, p, cfg.logdet_floor, &tie_fallback);

  // --- verification (and optional cardinality relaxation) ---
  const auto scoring_seconds = seconds_since(t_score);
  const auto t_verify = clock_type::now();

  const auto observe = [&](const SelectionIndex& set) {
    if (cfg.data_mode == PipelineConfig::DataMode::kConcurrent) {
      const Trajectory sub = restrict_eval_channel(joint_traj, positions_in(set, eval_union));
      return verify_observability(assemble_obs_matrices(sub, cfg.window),
                                  cfg.verify_threshold);
    }
    ExcitationConfig exc = cfg.excitation;
    exc.seed = cfg.excitation.seed + static_cast<std::uint64_t>(p) + 1;
    const Trajectory traj =
        simulate(cfg.plant, generate_excitation(exc, cfg.plant.m()), cfg.seed_sensors, set);
    return verify_observability(assemble_obs_matrices(traj, cfg.window), cfg.verify_threshold);
  };

  ObservabilityReport report = observe(chosen);
  if (cfg.relax_cardinality) {
    while (report.verdict != ObservabilityReport::Verdict::kVerifiedObservable) {
      std::vector<int> remaining;
      for (int id : eligible)
        if (!chosen.contains(id)) remaining.push_back(id);
      if (remaining.empty()) break;

      int next_id = -1;
      if (cfg.metric.kind == MetricKind::kTrace) {
        double best = -std::numeric_limits<double>::infinity();
        for (int id : remaining) {
          const double s = scores[position_of(id)];
          if (next_id < 0 || s > best) {
            best = s;
            next_id = id;
          }
        }
      } else {
        std::vector<GramianEstimate> members;
        for (int id : chosen.indices())
          members.push_back(scored.estimates[static_cast<std::size_t>(position_of(id))]);
        const SymMatrix running = cost_block_sum(members);
        std::vector<SymMatrix> blocks;
        std::vector<bool> taken(remaining.size(), false);
        for (int id : remaining)
          blocks.push_back(
              scored.estimates[static_cast<std::size_t>(position_of(id))].cost_block);
        const GreedyPick pick = best_addition(running, blocks, taken, cfg.logdet_floor);
        next_id = remaining[static_cast<std::size_t>(pick.position)];
      }
      chosen = chosen.union_with(SelectionIndex::single(next_id, p));
      report = observe(chosen);
    }
  }

  // --- result ---
  SelectionResult result{.chosen = chosen,
                         .evaluated = eval_union.indices(),
                         .scores = scores,
                         .subset_metric = 0.0,
                         .metric = cfg.metric,
                         .observability = report,
                         .regression_diagnostics = scored.diagnostics,
                         .rank_warning = !scored.diagnostics.full_row_rank,
                         .tie_fallback_used = tie_fallback,
                         .logdet_floor = cfg.logdet_floor,
                         .timing = {}};

  if (cfg.metric.kind == MetricKind::kTrace) {
    double total = 0.0;
    for (int id : chosen.indices()) total += scores[position_of(id)];
    result.subset_metric = total;
  } else {
    std::vector<GramianEstimate> members;
    for (int id : chosen.indices())
      members.push_back(scored.estimates[static_cast<std::size_t>(position_of(id))]);
    result.subset_metric = log_det(cost_block_sum(members), cfg.logdet_floor);
  }

  result.timing.collect_seconds = scored.collect_seconds;
  result.timing.assemble_seconds = scored.assemble_seconds;
  result.timing.pinv_seconds = scored.pinv_seconds;
  result.timing.scoring_seconds = scoring_seconds;
  result.timing.verify_seconds = seconds_since(t_verify);
  result.timing.total_seconds = seconds_since(t_start);
  result.estimates = std::move(scored.estimates);
  return result;
}

}  // namespace sensorsel
