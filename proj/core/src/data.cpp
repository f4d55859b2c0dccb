#include "tkgode/data.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <unordered_set>

#include "tkgode/rng.hpp"

namespace tkg {

namespace {

uint64_t pack_triplet(int s, int r, int o) {
  return (static_cast<uint64_t>(s) << 42) | (static_cast<uint64_t>(r) << 21) |
         static_cast<uint64_t>(o);
}

void sort_events(std::vector<Quadruple>& events) {
  std::sort(events.begin(), events.end(), [](const Quadruple& a, const Quadruple& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.s != b.s) return a.s < b.s;
    if (a.r != b.r) return a.r < b.r;
    return a.o < b.o;
  });
}

struct RawQuad {
  long s, r, o, t;
};

std::vector<RawQuad> parse_raw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file: " + path);
  std::vector<RawQuad> rows;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    long fields[4];
    size_t pos = 0;
    for (int f = 0; f < 4; ++f) {
      if (pos > line.size())
        throw ParseError(path + ":" + std::to_string(line_no) + ": expected 4 tab-separated fields");
      size_t tab = line.find('\t', pos);
      const char* first = line.data() + pos;
      const char* last = line.data() + (tab == std::string::npos ? line.size() : tab);
      auto [ptr, ec] = std::from_chars(first, last, fields[f]);
      if (ec != std::errc() || ptr != last)
        throw ParseError(path + ":" + std::to_string(line_no) + ": field " +
                         std::to_string(f + 1) + " is not an integer");
      if (fields[f] < 0)
        throw ParseError(path + ":" + std::to_string(line_no) + ": negative id");
      pos = (tab == std::string::npos) ? line.size() + 1 : tab + 1;
      if (f < 3 && tab == std::string::npos)
        throw ParseError(path + ":" + std::to_string(line_no) + ": expected 4 tab-separated fields");
    }
    // Fields beyond the fourth (ICEWS-style trailing columns) are ignored.
    rows.push_back({fields[0], fields[1], fields[2], fields[3]});
  }
  return rows;
}

QuadrupleStore remap(const std::vector<std::vector<RawQuad>>& splits) {
  std::set<long> ent_ids, rel_ids, ts;
  size_t total = 0;
  for (const auto& rows : splits) {
    total += rows.size();
    for (const auto& q : rows) {
      ent_ids.insert(q.s);
      ent_ids.insert(q.o);
      rel_ids.insert(q.r);
      ts.insert(q.t);
    }
  }
  if (total == 0) throw ParseError("no events");

  std::map<long, int> ent_map, rel_map, t_map;
  int next = 0;
  for (long v : ent_ids) ent_map[v] = next++;
  next = 0;
  for (long v : rel_ids) rel_map[v] = next++;
  next = 0;
  for (long v : ts) t_map[v] = next++;

  QuadrupleStore store;
  store.num_entities = static_cast<int>(ent_ids.size());
  store.num_relations = static_cast<int>(rel_ids.size());
  store.num_timestamps = static_cast<int>(ts.size());

  std::vector<std::pair<int, int>> split_t_range;  // dense [min, max] per split
  for (const auto& rows : splits) {
    int lo = store.num_timestamps, hi = -1;
    for (const auto& q : rows) {
      const int dt = t_map[q.t];
      lo = std::min(lo, dt);
      hi = std::max(hi, dt);
      store.events.push_back({ent_map[q.s], rel_map[q.r], ent_map[q.o], dt});
    }
    split_t_range.push_back({lo, hi});
  }
  sort_events(store.events);

  if (splits.size() == 1) {
    store.train_end_t = store.num_timestamps;
    store.valid_end_t = store.num_timestamps;
    return store;
  }

  const auto& [train_lo, train_hi] = split_t_range[0];
  const auto& [valid_lo, valid_hi] = split_t_range[1];
  const auto& [test_lo, test_hi] = split_t_range[2];
  if (train_hi < 0) throw ParseError("empty training split");
  store.train_end_t = train_hi + 1;
  store.valid_end_t = (valid_hi < 0) ? store.train_end_t : valid_hi + 1;
  if (valid_hi >= 0 && valid_lo < store.train_end_t)
    throw ParseError("validation timestamps overlap the training range");
  if (test_hi >= 0 && test_lo < store.valid_end_t)
    throw ParseError("test timestamps overlap the validation range");
  return store;
}

std::vector<std::string> load_names(const std::string& path, int expected) {
  std::ifstream in(path);
  if (!in) return {};
  std::vector<std::string> names(expected);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t tab = line.rfind('\t');
    if (tab == std::string::npos) continue;
    long id = -1;
    std::from_chars(line.data() + tab + 1, line.data() + line.size(), id);
    if (id >= 0 && id < expected) names[id] = line.substr(0, tab);
  }
  return names;
}

}  // namespace

QuadrupleStore parse_quadruples(const std::string& path) {
  return remap({parse_raw(path)});
}

QuadrupleStore load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  if (!fs::exists(base / "train.txt")) throw ParseError("missing " + (base / "train.txt").string());
  if (!fs::exists(base / "test.txt")) throw ParseError("missing " + (base / "test.txt").string());

  std::vector<std::vector<RawQuad>> splits;
  splits.push_back(parse_raw((base / "train.txt").string()));
  splits.push_back(fs::exists(base / "valid.txt") ? parse_raw((base / "valid.txt").string())
                                                  : std::vector<RawQuad>{});
  splits.push_back(parse_raw((base / "test.txt").string()));

  QuadrupleStore store = remap(splits);
  store.entity_names = load_names((base / "entity2id.txt").string(), store.num_entities);
  store.relation_names = load_names((base / "relation2id.txt").string(), store.num_relations);
  return store;
}

void write_dataset(const QuadrupleStore& store, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);

  auto open = [&](const char* name) {
    std::ofstream out(fs::path(dir) / name, std::ios::trunc);
    if (!out) throw IoError(std::string("cannot write ") + name + " under " + dir);
    return out;
  };
  std::ofstream train = open("train.txt");
  std::ofstream valid = open("valid.txt");
  std::ofstream test = open("test.txt");

  for (const auto& q : store.events) {
    std::ofstream& out = store.in_train(q.t) ? train : (store.in_valid(q.t) ? valid : test);
    out << q.s << '\t' << q.r << '\t' << q.o << '\t' << q.t << '\n';
  }
}

QuadrupleStore augment_reciprocal(const QuadrupleStore& store) {
  if (store.augmented) throw ContractError("augment_reciprocal: store already augmented");
  QuadrupleStore out = store;
  out.augmented = true;
  out.events.reserve(2 * store.events.size());
  const int nr = store.num_relations;
  for (const auto& q : store.events) out.events.push_back({q.o, q.r + nr, q.s, q.t});
  sort_events(out.events);
  return out;
}

QuadrupleStore strip_reciprocal(const QuadrupleStore& store) {
  if (!store.augmented) throw ContractError("strip_reciprocal: store is not augmented");
  QuadrupleStore out = store;
  out.augmented = false;
  out.events.clear();
  for (const auto& q : store.events)
    if (q.r < store.num_relations) out.events.push_back(q);
  sort_events(out.events);
  return out;
}

const std::vector<std::pair<int, int>>& Snapshot::in_neighbors(int o) const {
  static const std::vector<std::pair<int, int>> kEmpty;
  auto it = in_index.find(o);
  return it == in_index.end() ? kEmpty : it->second;
}

std::vector<Snapshot> build_snapshots(const QuadrupleStore& store) {
  std::vector<Snapshot> snaps(store.num_timestamps);
  for (int t = 0; t < store.num_timestamps; ++t) snaps[t].t = t;
  for (const auto& q : store.events) {
    if (q.t < 0 || q.t >= store.num_timestamps)
      throw IndexError("build_snapshots: event timestamp out of range");
    snaps[q.t].edges.push_back({q.s, q.r, q.o});
    snaps[q.t].in_index[q.o].push_back({q.s, q.r});
  }
  return snaps;
}

JumpTensor build_jump_tensor(const Snapshot& g_t, const Snapshot& g_t1) {
  std::unordered_set<uint64_t> before, after;
  before.reserve(g_t.edges.size());
  after.reserve(g_t1.edges.size());
  for (const auto& e : g_t.edges) before.insert(pack_triplet(e.s, e.r, e.o));
  for (const auto& e : g_t1.edges) after.insert(pack_triplet(e.s, e.r, e.o));

  JumpTensor jt;
  jt.t = g_t.t;
  for (const auto& e : g_t1.edges) {
    const uint64_t key = pack_triplet(e.s, e.r, e.o);
    if (!before.count(key)) {
      jt.deltas.push_back({e.s, e.r, e.o, +1});
      before.insert(key);  // dedupe multi-edges
    }
  }
  for (const auto& e : g_t.edges) {
    const uint64_t key = pack_triplet(e.s, e.r, e.o);
    if (!after.count(key)) {
      jt.deltas.push_back({e.s, e.r, e.o, -1});
      after.insert(key);
    }
  }
  std::sort(jt.deltas.begin(), jt.deltas.end(),
            [](const JumpTensor::Delta& a, const JumpTensor::Delta& b) {
              if (a.s != b.s) return a.s < b.s;
              if (a.r != b.r) return a.r < b.r;
              return a.o < b.o;
            });
  for (size_t i = 0; i < jt.deltas.size(); ++i)
    jt.by_object[jt.deltas[i].o].push_back(static_cast<int>(i));
  return jt;
}

std::vector<JumpTensor> build_jump_tensors(const std::vector<Snapshot>& snapshots) {
  std::vector<JumpTensor> jumps;
  if (snapshots.size() < 2) return jumps;
  jumps.reserve(snapshots.size() - 1);
  for (size_t t = 0; t + 1 < snapshots.size(); ++t)
    jumps.push_back(build_jump_tensor(snapshots[t], snapshots[t + 1]));
  return jumps;
}

TimeMap make_time_map(const QuadrupleStore& store) {
  if (store.num_timestamps < 2)
    throw ContractError("make_time_map: need at least two timestamps");
  return TimeMap{0, store.num_timestamps - 1};
}

std::vector<Quadruple> inductive_subset(const QuadrupleStore& store) {
  std::unordered_set<int> seen;
  for (const auto& q : store.events) {
    if (!store.in_train(q.t)) continue;
    seen.insert(q.s);
    seen.insert(q.o);
  }
  std::vector<Quadruple> out;
  for (const auto& q : store.events) {
    if (!store.in_test(q.t)) continue;
    if (!seen.count(q.s) || !seen.count(q.o)) out.push_back(q);
  }
  return out;
}

Pattern pattern_from_name(const std::string& name) {
  if (name == "periodic") return Pattern::Periodic;
  if (name == "jump_consequence") return Pattern::JumpConsequence;
  if (name == "random") return Pattern::Random;
  throw ConfigError("unknown pattern: " + name);
}

std::string pattern_name(Pattern p) {
  switch (p) {
    case Pattern::Periodic: return "periodic";
    case Pattern::JumpConsequence: return "jump_consequence";
    case Pattern::Random: return "random";
  }
  return "?";
}

namespace {

void set_split(QuadrupleStore& store, int timestamps) {
  store.num_timestamps = timestamps;
  store.train_end_t = std::max(1, static_cast<int>(timestamps * 8 / 10));
  store.valid_end_t = std::min(timestamps, store.train_end_t + std::max(1, timestamps / 10));
}

/// One fixed (subject -> object) pairing per relation covering every entity.
std::vector<std::pair<int, int>> relation_pairs(int num_entities, int r, Rng& rng) {
  std::vector<int> perm(num_entities);
  for (int i = 0; i < num_entities; ++i) perm[i] = i;
  rng.shuffle(perm);
  const int offset = 1 + (r % std::max(1, num_entities - 1));
  std::vector<std::pair<int, int>> pairs(num_entities);
  for (int i = 0; i < num_entities; ++i)
    pairs[i] = {perm[i], perm[(i + offset) % num_entities]};
  return pairs;
}

void gen_periodic_relation(std::vector<Quadruple>& events, int num_entities, int r, int timestamps,
                           int period, Rng& rng) {
  const auto pairs = relation_pairs(num_entities, r, rng);
  for (int t = 0; t < timestamps; ++t) {
    if (t % period != r % period) continue;
    for (const auto& [s, o] : pairs) events.push_back({s, r, o, t});
  }
}

}  // namespace

QuadrupleStore generate_synthetic_tkg(int num_entities, int num_relations, int timestamps,
                                      const PatternSpec& spec, uint64_t seed) {
  if (num_entities < 1 || num_relations < 1 || timestamps < 1)
    throw ConfigError("generate_synthetic_tkg: all counts must be >= 1");

  QuadrupleStore store;
  store.num_entities = num_entities;
  store.num_relations = num_relations;
  set_split(store, timestamps);
  Rng rng(seed);

  switch (spec.kind) {
    case Pattern::Periodic: {
      const int period = std::max(1, spec.period);
      for (int r = 0; r < num_relations; ++r)
        gen_periodic_relation(store.events, num_entities, r, timestamps, period, rng);
      break;
    }
    case Pattern::JumpConsequence: {
      if (num_relations < 2)
        throw ConfigError("jump_consequence needs at least two relations");
      // Relation 0 triggers, relation 1 carries the consequence one step
      // later; remaining relations are constant background that keeps every
      // entity and timestamp populated. Each subject cycles through its
      // partners round-robin (shuffled order per round) so partner counts are
      // balanced and no static preference identifies the consequence object.
      // Trigger runs persist 2..slot+1 steps and spill into the next slot, so
      // the lingering presence of an older trigger does not pin down which
      // partner just appeared; the appearance itself does.
      std::set<std::tuple<int, int, int, int>> dedupe;
      auto emit = [&](int s, int r, int o, int t) {
        if (dedupe.insert({t, s, r, o}).second) store.events.push_back({s, r, o, t});
      };
      const int slot = std::max(2, spec.max_duration);
      for (int x = 0; x < num_entities; ++x) {
        std::vector<int> partners;
        while (static_cast<int>(partners.size()) < std::min(spec.partners, num_entities - 1)) {
          const int y = rng.next_int(num_entities);
          if (y == x) continue;
          if (std::find(partners.begin(), partners.end(), y) == partners.end())
            partners.push_back(y);
        }
        const int round_len = slot * static_cast<int>(partners.size());
        for (int round_start = 0; round_start < timestamps; round_start += round_len) {
          rng.shuffle(partners);
          for (size_t i = 0; i < partners.size(); ++i) {
            const int t0 = round_start + slot * static_cast<int>(i);
            if (t0 >= timestamps) break;
            const int duration = 2 + rng.next_int(slot);
            if (t0 + 1 < timestamps) emit(x, 1, partners[i], t0 + 1);  // consequence
            for (int dt = 0; dt < duration && t0 + dt < timestamps; ++dt)
              emit(x, 0, partners[i], t0 + dt);
          }
        }
      }
      for (int r = 2; r < num_relations; ++r)
        gen_periodic_relation(store.events, num_entities, r, timestamps, 1, rng);
      break;
    }
    case Pattern::Random: {
      const int per_t = spec.events_per_timestamp > 0 ? spec.events_per_timestamp : num_entities;
      std::set<std::tuple<int, int, int, int>> dedupe;
      for (int t = 0; t < timestamps; ++t) {
        int emitted = 0;
        while (emitted < per_t) {
          const int s = rng.next_int(num_entities);
          const int r = rng.next_int(num_relations);
          const int o = rng.next_int(num_entities);
          if (dedupe.insert({t, s, r, o}).second) {
            store.events.push_back({s, r, o, t});
            ++emitted;
          }
        }
      }
      break;
    }
  }

  sort_events(store.events);
  return store;
}

TkgData prepare_data(QuadrupleStore raw_store) {
  TkgData data;
  data.store = raw_store.augmented ? std::move(raw_store) : augment_reciprocal(raw_store);
  data.snapshots = build_snapshots(data.store);
  data.jumps = build_jump_tensors(data.snapshots);
  data.time_map = make_time_map(data.store);
  return data;
}

}  // namespace tkg
