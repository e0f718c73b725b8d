#pragma once

#include <optional>
#include <vector>

#include "sensorsel/estimator.hpp"
#include "sensorsel/lti.hpp"
#include "sensorsel/metrics.hpp"
#include "sensorsel/regressors.hpp"

namespace sensorsel {

/// Data-driven observability verdict for an evaluated sensor set.
struct ObservabilityReport {
  enum class Verdict { kVerifiedObservable, kVerifiedUnobservable, kInconclusive };

  Verdict verdict = Verdict::kInconclusive;
  Index rank_seed = 0;   // numerical rank of the seed-channel stack matrix
  Index rank_eval = 0;   // numerical rank of the evaluated-channel stack matrix
  Index columns = 0;     // stacks available
  double min_retained_sv_eval = 0.0;
  double threshold_seed = 0.0;
  double threshold_eval = 0.0;
  std::optional<Index> state_dim;    // supplied out-of-band (tests/oracle)
  std::optional<Index> target_rank;  // Nm+n when state_dim is known
};

std::string to_string(ObservabilityReport::Verdict v);

/// Rank test on the stacked history matrices.  When the state dimension is
/// known (tests, oracle-assisted runs) the verdict follows the exact rank
/// target Nm+n.  Without it, the evaluated channel's rank is compared
/// against the seed channel's: the seed set is observable by assumption, so
/// once its rank has plateaued below the column count it has attained the
/// maximum Nm+n, and equality certifies the evaluated set.  Column-saturated
/// ranks stay inconclusive.
ObservabilityReport verify_observability(const ObsDataMatrices& obs,
                                         RankTolerance threshold = RankTolerance::standard(),
                                         std::optional<Index> state_dim = {});

/// Indices (1-based positions into scores) of the k highest scores; ties
/// prefer the lower position.  Throws on NaN scores or k out of range.
SelectionIndex select_topk(const Eigen::Ref<const VectorXd>& scores, int k);

/// Grows a set to target_size by repeatedly adding the block maximizing the
/// floored log det of the running sum, starting from seed positions when
/// given.  All-minus-infinity marginals fall back to the running trace as a
/// secondary key, then to the lower position.
SelectionIndex select_greedy_logdet(const std::vector<SymMatrix>& blocks, int target_size,
                                    std::optional<SelectionIndex> seed = {},
                                    double floor = kLogDetFloor);

/// The subset rule shared by run_selection and the multi-horizon sweep:
/// top-k scores for the trace metric, seeded greedy for log-det.  scores and
/// blocks are aligned with the ascending evaluated ids; eligible lists the
/// ids that may be picked; when seed is given the result contains it on top
/// of p_prime picks.  Sets *tie_fallback when a greedy step had only -inf
/// marginals.
SelectionIndex choose_subset(const Metric& metric, const std::vector<int>& evaluated,
                             const Eigen::Ref<const VectorXd>& scores,
                             const std::vector<SymMatrix>& blocks,
                             const std::vector<int>& eligible, int p_prime,
                             const std::optional<SelectionIndex>& seed, int ambient,
                             double floor = kLogDetFloor, bool* tie_fallback = nullptr);

struct SelectionTiming {
  double collect_seconds = 0.0;  // excitation + simulation
  double assemble_seconds = 0.0; // feature building, excluding the SVD
  double pinv_seconds = 0.0;     // pseudoinverse factorization
  double scoring_seconds = 0.0;  // per-sensor estimates + subset choice
  double verify_seconds = 0.0;
  double total_seconds = 0.0;
};

struct PipelineConfig {
  enum class DataMode { kConcurrent, kSequential };

  LtiSystem plant;
  SelectionIndex seed_sensors;   // known-observable set used for the history stacks
  std::vector<int> candidates;   // sensor ids to evaluate
  int p_prime = 1;               // how many candidates to pick
  Metric metric;
  int window = 1;                // history length N
  ExcitationConfig excitation;
  DataMode data_mode = DataMode::kConcurrent;

  /// Keep the seed set in the result and pick p' candidates on top of it;
  /// log-det marginals are computed relative to the seed blocks.
  bool seed_with_known_set = false;
  /// After selection, keep adding next-best sensors until the verifier
  /// certifies observability (or candidates run out).
  bool relax_cardinality = false;

  RankTolerance pinv_tolerance = RankTolerance::standard();
  RankTolerance verify_threshold = RankTolerance::standard();
  double logdet_floor = kLogDetFloor;
  int threads = 1;
};

struct SelectionResult {
  SelectionIndex chosen;
  std::vector<int> evaluated;  // ascending ids: candidates plus seed sensors
  VectorXd scores;             // singleton metric value per evaluated sensor
  double subset_metric = 0.0;
  Metric metric;
  ObservabilityReport observability;
  EstimateDiagnostics regression_diagnostics;
  bool rank_warning = false;  // feature matrix short of full row rank
  bool tie_fallback_used = false;  // a greedy step had only -inf marginals
  double logdet_floor = kLogDetFloor;  // floor the scores were computed with
  SelectionTiming timing;

  /// Per-sensor estimates behind the scores, aligned with evaluated;
  /// finite-horizon ones retain their whole step sequence.
  std::vector<GramianEstimate> estimates;
};

/// End-to-end pipeline: collect data, score every evaluated sensor, choose
/// the subset, and verify observability of the choice from data alone.
SelectionResult run_selection(const PipelineConfig& cfg);

}  // namespace sensorsel
