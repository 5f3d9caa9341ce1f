#include "kgbench/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "kgbench/errors.hpp"
#include "kgbench/ingest.hpp"
#include "kgbench/rng.hpp"

namespace kgbench {

void SyntheticSpec::check() const {
  if (latent_dim <= 0) throw ConfigError("synthetic latent_dim must be positive");
  if (noise_fraction < 0 || noise_fraction > 1)
    throw ConfigError("synthetic noise fraction must lie in [0,1]");
  if (entities_per_type.empty()) throw ConfigError("synthetic spec has no node types");
  for (const auto& [type, n] : entities_per_type)
    if (n == 0) throw ConfigError("synthetic node type '" + type + "' has zero entities");

  bool has_symmetric = false, has_inverse = false, has_parent = false, has_disjoint = false;
  for (const auto& r : relations) {
    has_symmetric |= r.symmetric;
    has_inverse |= !r.inverse_of.empty();
    has_parent |= !r.parents.empty();
    has_disjoint |= !r.disjoint_with.empty();
  }
  if (!has_symmetric || !has_inverse || !has_parent || !has_disjoint)
    throw ConfigError(
        "synthetic schema must contain a symmetric relation, an inverse pair, a "
        "parent/child pair and a disjoint pair");
  for (const auto& r : relations)
    if (!edges_per_relation.count(r.name))
      throw ConfigError("synthetic spec has no edge count for relation '" + r.name + "'");
}

SyntheticSpec default_synthetic_spec() {
  SyntheticSpec spec;
  spec.entities_per_type = {{"GENE", 150}, {"ANAT", 150}};
  spec.relations = {
      {"interacts", "GENE", "GENE", true, "", {}, {}},
      {"expressed_in", "GENE", "ANAT", false, "", {}, {}},
      {"over_expressed_in", "GENE", "ANAT", false, "", {"expressed_in"}, {"under_expressed_in"}},
      {"under_expressed_in", "GENE", "ANAT", false, "", {"expressed_in"}, {"over_expressed_in"}},
      {"has_part", "ANAT", "ANAT", false, "part_of", {}, {}},
      {"part_of", "ANAT", "ANAT", false, "has_part", {}, {}},
  };
  for (const auto& r : spec.relations) spec.edges_per_relation[r.name] = 500;
  return spec;
}

namespace {

struct PairHash {
  size_t operator()(const std::pair<EntityIdx, EntityIdx>& p) const {
    return (uint64_t(p.first) << 32 | p.second) * 0x9e3779b97f4a7c15ULL >> 17;
  }
};

}  // namespace

SyntheticData generate_synthetic_data(const SyntheticSpec& spec) {
  spec.check();
  SyntheticData data;
  data.schema = RelationSchema::validate(spec.relations);
  const RelationSchema& schema = data.schema;

  // Entities in schema node-type order, zero-padded ids for stable sorting.
  for (NodeTypeIdx ti = 0; ti < schema.node_type_count(); ++ti) {
    const std::string& type_name = schema.node_type_name(ti);
    auto it = spec.entities_per_type.find(type_name);
    if (it == spec.entities_per_type.end())
      throw ConfigError("synthetic spec has no entity count for node type '" + type_name + "'");
    char buf[16];
    for (size_t i = 0; i < it->second; ++i) {
      std::snprintf(buf, sizeof(buf), "%06zu", i);
      data.entities.intern(ti, buf);
    }
  }

  Rng base(spec.seed);
  const int k = spec.latent_dim;

  // Latent translational structure shared by all relations. Symmetric
  // relations translate by zero so their planted criterion is symmetric in
  // (head, tail).
  std::vector<double> latent_entity(data.entities.size() * k);
  Rng ent_rng = base.derive("latent/entity");
  for (double& x : latent_entity) x = ent_rng.uniform(-1.0, 1.0);
  std::vector<double> latent_relation(schema.relation_count() * k);
  Rng rel_rng = base.derive("latent/relation");
  for (double& x : latent_relation) x = rel_rng.uniform(-0.5, 0.5);
  for (RelationIdx r = 0; r < schema.relation_count(); ++r)
    if (schema.relation(r).symmetric)
      std::fill(latent_relation.begin() + r * k, latent_relation.begin() + (r + 1) * k, 0.0);

  auto latent_distance = [&](EntityIdx h, RelationIdx r, EntityIdx t) {
    double acc = 0;
    for (int i = 0; i < k; ++i) {
      double d = latent_entity[h * k + i] + latent_relation[r * k + i] - latent_entity[t * k + i];
      acc += d * d;
    }
    return acc;
  };

  // (h, t) pairs already used per relation, consulted across disjoint
  // partners so the generator never plants a contradiction.
  std::vector<std::unordered_set<std::pair<EntityIdx, EntityIdx>, PairHash>> used(
      schema.relation_count());

  for (RelationIdx r = 0; r < schema.relation_count(); ++r) {
    const RelationDef& def = schema.relation(r);
    const size_t count = spec.edges_per_relation.at(def.name);
    auto heads = data.entities.entities_of_type(def.domain);
    auto tails = data.entities.entities_of_type(def.range);
    const bool same_type = def.domain == def.range;
    // Symmetric relations enumerate unordered pairs (head < tail) so both
    // orientations of one relationship are never planted twice.
    const size_t feasible = def.symmetric
                                ? heads.size() * (heads.size() - 1) / 2
                                : heads.size() * tails.size() - (same_type ? heads.size() : 0);
    if (count > feasible)
      throw ConfigError("synthetic relation '" + def.name + "' requests " +
                        std::to_string(count) + " edges but only " + std::to_string(feasible) +
                        " typed pairs exist");

    auto blocked = [&](EntityIdx h, EntityIdx t) {
      if (used[r].count({h, t})) return true;
      for (RelationIdx d : def.disjoint)
        if (used[d].count({h, t})) return true;
      return false;
    };

    const size_t noise_count =
        static_cast<size_t>(std::llround(spec.noise_fraction * static_cast<double>(count)));
    const size_t planted_count = count - noise_count;

    std::vector<std::pair<EntityIdx, EntityIdx>> chosen;
    chosen.reserve(count);

    if (planted_count > 0) {
      // Rank all typed pairs by latent closeness, best first.
      std::vector<std::pair<double, std::pair<EntityIdx, EntityIdx>>> scored;
      scored.reserve(feasible);
      for (EntityIdx h : heads)
        for (EntityIdx t : tails) {
          if (h == t) continue;
          if (def.symmetric && h > t) continue;
          if (blocked(h, t)) continue;
          scored.emplace_back(latent_distance(h, r, t), std::make_pair(h, t));
        }
      if (scored.size() < planted_count)
        throw ConfigError("synthetic relation '" + def.name +
                          "' cannot plant enough edges after disjointness exclusions");
      std::nth_element(scored.begin(), scored.begin() + planted_count - 1, scored.end());
      std::sort(scored.begin(), scored.begin() + planted_count);
      for (size_t i = 0; i < planted_count; ++i) chosen.push_back(scored[i].second);
    }
    for (const auto& p : chosen) used[r].insert(p);

    // Noise: uniform typed pairs not already taken.
    Rng noise_rng = base.derive("noise/" + def.name);
    size_t added = 0, guard = 0;
    const size_t guard_limit = 1000 * (noise_count + 1);
    while (added < noise_count) {
      if (++guard > guard_limit)
        throw ConfigError("synthetic relation '" + def.name +
                          "' could not place noise edges (too dense)");
      EntityIdx h = heads[noise_rng.below(heads.size())];
      EntityIdx t = tails[noise_rng.below(tails.size())];
      if (def.symmetric && h > t) std::swap(h, t);
      if (h == t || blocked(h, t)) continue;
      used[r].insert({h, t});
      chosen.push_back({h, t});
      ++added;
    }

    // Planted edges carry high confidence scores, noise low ones.
    Rng quality_rng = base.derive("quality/" + def.name);
    for (size_t i = 0; i < chosen.size(); ++i) {
      Triple t;
      t.head = chosen[i].first;
      t.rel = r;
      t.tail = chosen[i].second;
      t.polarity = Polarity::positive;
      const double u = quality_rng.uniform01();
      t.quality = (i < planted_count) ? 0.5 + 0.5 * u : 0.5 * u;
      t.source = "synth";
      data.triples.push_back(std::move(t));
    }
  }

  std::sort(data.triples.begin(), data.triples.end(), triple_less);
  return data;
}

void write_synthetic_files(const SyntheticSpec& spec, const std::string& out_dir) {
  SyntheticData data = generate_synthetic_data(spec);
  std::filesystem::create_directories(out_dir);

  std::ofstream schema_out(out_dir + "/schema.tsv", std::ios::binary);
  if (!schema_out) throw DataError("cannot write " + out_dir + "/schema.tsv");
  write_schema_file(schema_out, data.schema);

  std::ofstream edges_out(out_dir + "/edges.tsv", std::ios::binary);
  if (!edges_out) throw DataError("cannot write " + out_dir + "/edges.tsv");
  write_edges(edges_out, data.triples, data.schema, data.entities);

  std::ofstream thr_out(out_dir + "/thresholds.tsv", std::ios::binary);
  if (!thr_out) throw DataError("cannot write " + out_dir + "/thresholds.tsv");
  thr_out << "synth\t0.75\t0.5\t0.25\n";
}

}  // namespace kgbench
