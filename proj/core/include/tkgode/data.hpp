#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tkgode/errors.hpp"

namespace tkg {

struct Quadruple {
  int s = 0;
  int r = 0;
  int o = 0;
  int t = 0;
  bool operator==(const Quadruple&) const = default;
};

/// All events of a temporal KG with dense ids and timestamp-split boundaries.
/// Events are sorted by timestamp. Immutable after construction.
struct QuadrupleStore {
  std::vector<Quadruple> events;
  int num_entities = 0;
  int num_relations = 0;  // pre-augmentation relation count
  int num_timestamps = 0;
  int train_end_t = 0;  // exclusive: train timestamps are [0, train_end_t)
  int valid_end_t = 0;  // exclusive: valid timestamps are [train_end_t, valid_end_t)
  bool augmented = false;
  std::string granularity = "index";
  std::vector<std::string> entity_names;    // optional, pretty-printing only
  std::vector<std::string> relation_names;  // optional, pretty-printing only

  /// Row count of the graph hidden state: entities then relations
  /// (reciprocals included once augmented).
  int state_rows(int dim_relations) const { return num_entities + dim_relations; }
  int relation_rows() const { return augmented ? 2 * num_relations : num_relations; }

  bool in_train(int t) const { return t < train_end_t; }
  bool in_valid(int t) const { return t >= train_end_t && t < valid_end_t; }
  bool in_test(int t) const { return t >= valid_end_t; }
};

/// One timestamp slice of the (augmented) graph.
struct Snapshot {
  struct Edge {
    int s = 0;
    int r = 0;
    int o = 0;
  };

  int t = 0;
  std::vector<Edge> edges;

  /// In-neighbourhood of an object: the (s, r) pairs of edges pointing at it,
  /// multi-edges kept with multiplicity.
  const std::vector<std::pair<int, int>>& in_neighbors(int o) const;

  std::unordered_map<int, std::vector<std::pair<int, int>>> in_index;
};

/// Sparse +1/-1 record of triplets appearing/disappearing between two
/// consecutive snapshots.
struct JumpTensor {
  struct Delta {
    int s = 0;
    int r = 0;
    int o = 0;
    int sign = 0;  // +1 appears at t+1, -1 disappears after t
  };

  int t = 0;  // difference is between snapshots t and t+1
  std::vector<Delta> deltas;
  std::unordered_map<int, std::vector<int>> by_object;  // object -> delta indices

  bool empty() const { return deltas.empty(); }
};

/// Linear map from timestamp index to normalized integration time in
/// [0, 0.01].
struct TimeMap {
  int t_min = 0;
  int t_max = 1;
  static constexpr double kRange = 0.01;

  double tau(double t) const { return kRange * (t - t_min) / (t_max - t_min); }
  double delta_tau() const { return kRange / (t_max - t_min); }
};

QuadrupleStore parse_quadruples(const std::string& path);

/// Reads train.txt / valid.txt / test.txt from a directory, remaps ids over
/// the union, and derives split boundaries from the timestamp ranges.
/// entity2id.txt / relation2id.txt are picked up when present.
QuadrupleStore load_dataset(const std::string& dir);

/// Writes train.txt / valid.txt / test.txt (events routed by split
/// boundaries) plus id maps when names are attached.
void write_dataset(const QuadrupleStore& store, const std::string& dir);

QuadrupleStore augment_reciprocal(const QuadrupleStore& store);

/// Strips reciprocal events back out; test helper for the involution check.
QuadrupleStore strip_reciprocal(const QuadrupleStore& store);

std::vector<Snapshot> build_snapshots(const QuadrupleStore& store);

JumpTensor build_jump_tensor(const Snapshot& g_t, const Snapshot& g_t1);

/// jump[t] = difference between snapshots t and t+1; size T-1.
std::vector<JumpTensor> build_jump_tensors(const std::vector<Snapshot>& snapshots);

TimeMap make_time_map(const QuadrupleStore& store);

/// Test quadruples whose subject and/or object never occurs (as subject or
/// object) in the training split.
std::vector<Quadruple> inductive_subset(const QuadrupleStore& store);

enum class Pattern { Periodic, JumpConsequence, Random };

Pattern pattern_from_name(const std::string& name);
std::string pattern_name(Pattern p);

struct PatternSpec {
  Pattern kind = Pattern::Periodic;
  int period = 2;     // periodic: relation r fires when t % period == r % period
  int max_duration = 3;  // jump_consequence: slot spacing; triggers persist 2..slot+1 steps
  int partners = 3;      // jump_consequence: candidate objects per subject
  int events_per_timestamp = 0;  // random: 0 means num_entities
};

/// Deterministic synthetic store. Split boundaries follow the 80-10-10
/// timestamp convention. Every entity and relation occurs in the events, and
/// every timestamp is populated, so a TSV round trip preserves ids.
QuadrupleStore generate_synthetic_tkg(int num_entities, int num_relations, int timestamps,
                                      const PatternSpec& spec, uint64_t seed);

/// Dataset bundle most of the pipeline consumes: augmented store plus derived
/// snapshots, jump tensors, and the time map.
struct TkgData {
  QuadrupleStore store;  // augmented
  std::vector<Snapshot> snapshots;
  std::vector<JumpTensor> jumps;
  TimeMap time_map;
};

TkgData prepare_data(QuadrupleStore raw_store);

}  // namespace tkg
