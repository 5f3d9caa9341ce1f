#include "kgbench/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>

#include "kgbench/errors.hpp"

namespace kgbench {

const char* to_string(ModelKind kind) {
  return kind == ModelKind::transe ? "TRANSE" : "TRANSR";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "transe" || s == "TRANSE") return ModelKind::transe;
  if (s == "transr" || s == "TRANSR") return ModelKind::transr;
  throw ConfigError("unknown model kind '" + std::string(s) + "' (expected transe|transr)");
}

void Hyperparams::check() const {
  if (dim <= 0) throw ConfigError("dim must be positive");
  if (margin <= 0) throw ConfigError("margin must be positive");
  if (learning_rate <= 0) throw ConfigError("learning_rate must be positive");
  if (norm != 1 && norm != 2) throw ConfigError("norm must be 1 or 2");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (eval_every <= 0) throw ConfigError("eval_every must be positive");
  if (patience <= 0) throw ConfigError("patience must be positive");
}

namespace {

constexpr int kTrainCorruptionAttempts = 100;

double pnorm(std::span<const double> v, int p) {
  double acc = 0;
  if (p == 1) {
    for (double x : v) acc += std::abs(x);
    return acc;
  }
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

// Gradient of ||w||_p at w; the L1 subgradient at 0 is taken as 0.
void pnorm_gradient(std::span<const double> w, int p, std::vector<double>& out) {
  out.assign(w.size(), 0.0);
  if (p == 1) {
    for (size_t i = 0; i < w.size(); ++i)
      out[i] = (w[i] > 0) ? 1.0 : (w[i] < 0 ? -1.0 : 0.0);
    return;
  }
  double n = pnorm(w, 2);
  if (n == 0) return;
  for (size_t i = 0; i < w.size(); ++i) out[i] = w[i] / n;
}

// u = v rescaled onto the unit p-ball when outside it.
void clip_to_unit_ball(std::span<const double> v, int p, std::vector<double>& u) {
  u.assign(v.begin(), v.end());
  double n = pnorm(v, p);
  if (n > 1.0)
    for (double& x : u) x /= n;
}

// out = J(v)^T g for u = clip(v). Inside the ball J = I; outside,
// p=2: du_i/dv_j = delta_ij/n - v_i v_j / n^3,
// p=1: du_i/dv_j = delta_ij/S - v_i sign(v_j) / S^2.
void clip_backprop(std::span<const double> v, std::span<const double> g, int p,
                   std::vector<double>& out) {
  double n = pnorm(v, p);
  if (n <= 1.0) {
    out.assign(g.begin(), g.end());
    return;
  }
  out.resize(v.size());
  double dot = 0;
  for (size_t i = 0; i < v.size(); ++i) dot += v[i] * g[i];
  if (p == 2) {
    for (size_t i = 0; i < v.size(); ++i) out[i] = g[i] / n - v[i] * dot / (n * n * n);
  } else {
    for (size_t i = 0; i < v.size(); ++i) {
      double sgn = (v[i] > 0) ? 1.0 : (v[i] < 0 ? -1.0 : 0.0);
      out[i] = g[i] / n - sgn * dot / (n * n);
    }
  }
}

void matvec(std::span<const double> m, std::span<const double> v, int d,
            std::vector<double>& out) {
  out.assign(d, 0.0);
  for (int i = 0; i < d; ++i) {
    double acc = 0;
    for (int j = 0; j < d; ++j) acc += m[i * d + j] * v[j];
    out[i] = acc;
  }
}

void matvec_transposed(std::span<const double> m, std::span<const double> v, int d,
                       std::vector<double>& out) {
  out.assign(d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out[j] += m[i * d + j] * v[i];
}

// Distance of one triple under the training convention: TransR projected
// entities are clipped to the unit p-ball when `clip` is set.
double triple_distance(const EmbeddingModel& m, const TripleKey& k, int p, bool clip) {
  const int d = m.dim;
  std::vector<double> w(d);
  if (m.kind == ModelKind::transe) {
    auto eh = m.entity_row(k.head), er = m.relation_row(k.rel), et = m.entity_row(k.tail);
    for (int i = 0; i < d; ++i) w[i] = eh[i] + er[i] - et[i];
    return pnorm(w, p);
  }
  std::vector<double> vh, vt, uh, ut;
  auto mat = m.projection_matrix(k.rel);
  matvec(mat, m.entity_row(k.head), d, vh);
  matvec(mat, m.entity_row(k.tail), d, vt);
  if (clip) {
    clip_to_unit_ball(vh, p, uh);
    clip_to_unit_ball(vt, p, ut);
  } else {
    uh = vh;
    ut = vt;
  }
  auto er = m.relation_row(k.rel);
  for (int i = 0; i < d; ++i) w[i] = uh[i] + er[i] - ut[i];
  return pnorm(w, p);
}

}  // namespace

double transe_score(const EmbeddingModel& m, uint32_t h, uint32_t r, uint32_t t, int p) {
  return -triple_distance(m, TripleKey{h, r, t}, p, false);
}

double transr_score(const EmbeddingModel& m, uint32_t h, uint32_t r, uint32_t t, int p) {
  return -triple_distance(m, TripleKey{h, r, t}, p, false);
}

double EmbeddingModel::score(uint32_t h, uint32_t r, uint32_t t, int p) const {
  return -triple_distance(*this, TripleKey{h, r, t}, p, false);
}

EmbeddingModel init_model(ModelKind kind, std::vector<std::string> entity_names,
                          std::vector<std::string> relation_names, const Hyperparams& hp) {
  hp.check();
  EmbeddingModel m;
  m.kind = kind;
  m.dim = hp.dim;
  m.entity_names = std::move(entity_names);
  m.relation_names = std::move(relation_names);
  const size_t ne = m.entity_names.size(), nr = m.relation_names.size();
  if (ne == 0 || nr == 0) throw DataError("init_model: entity and relation counts must be > 0");
  const double bound = 6.0 / std::sqrt(static_cast<double>(hp.dim));

  Rng base(hp.seed);
  Rng ent_rng = base.derive("init/entity");
  m.entity.resize(ne * hp.dim);
  for (double& x : m.entity) x = ent_rng.uniform(-bound, bound);

  Rng rel_rng = base.derive("init/relation");
  m.relation.resize(nr * hp.dim);
  for (double& x : m.relation) x = rel_rng.uniform(-bound, bound);
  for (size_t r = 0; r < nr; ++r) {
    auto row = m.relation_row(r);
    double n = pnorm(row, hp.norm);
    if (n > 0)
      for (double& x : row) x /= n;
  }

  if (kind == ModelKind::transr) {
    m.projection.assign(nr * hp.dim * hp.dim, 0.0);
    for (size_t r = 0; r < nr; ++r) {
      auto mat = m.projection_matrix(r);
      for (int i = 0; i < hp.dim; ++i) mat[i * hp.dim + i] = 1.0;
    }
  }
  return m;
}

EmbeddingModel init_model(ModelKind kind, const Graph& g, const Hyperparams& hp) {
  const RelationSchema& schema = g.schema();
  std::vector<std::string> entity_names(g.entities().size());
  for (EntityIdx e = 0; e < entity_names.size(); ++e)
    entity_names[e] = g.entities().name(e, schema);
  std::vector<std::string> relation_names(schema.relation_count());
  for (RelationIdx r = 0; r < relation_names.size(); ++r)
    relation_names[r] = schema.relation(r).name;
  return init_model(kind, std::move(entity_names), std::move(relation_names), hp);
}

void ModelGradients::resize_like(const EmbeddingModel& m) {
  entity.assign(m.entity.size(), 0.0);
  relation.assign(m.relation.size(), 0.0);
  projection.assign(m.projection.size(), 0.0);
}

void ModelGradients::clear() {
  std::fill(entity.begin(), entity.end(), 0.0);
  std::fill(relation.begin(), relation.end(), 0.0);
  std::fill(projection.begin(), projection.end(), 0.0);
}

namespace {

// Accumulates scale * dD/dparams for one triple into grad.
void accumulate_distance_gradient(const EmbeddingModel& m, const TripleKey& k, int p,
                                  double scale, ModelGradients& grad) {
  const int d = m.dim;
  std::vector<double> w(d), gw;
  if (m.kind == ModelKind::transe) {
    auto eh = m.entity_row(k.head), er = m.relation_row(k.rel), et = m.entity_row(k.tail);
    for (int i = 0; i < d; ++i) w[i] = eh[i] + er[i] - et[i];
    pnorm_gradient(w, p, gw);
    double* ge = grad.entity.data();
    double* gr = grad.relation.data();
    for (int i = 0; i < d; ++i) {
      ge[k.head * d + i] += scale * gw[i];
      gr[k.rel * d + i] += scale * gw[i];
      ge[k.tail * d + i] -= scale * gw[i];
    }
    return;
  }

  auto mat = m.projection_matrix(k.rel);
  auto eh = m.entity_row(k.head), et = m.entity_row(k.tail), er = m.relation_row(k.rel);
  std::vector<double> vh, vt, uh, ut, gh, gt, back;
  matvec(mat, eh, d, vh);
  matvec(mat, et, d, vt);
  clip_to_unit_ball(vh, p, uh);
  clip_to_unit_ball(vt, p, ut);
  for (int i = 0; i < d; ++i) w[i] = uh[i] + er[i] - ut[i];
  pnorm_gradient(w, p, gw);

  clip_backprop(vh, gw, p, gh);  // dD/dv_h
  clip_backprop(vt, gw, p, gt);  // -dD/dv_t is applied below

  for (int i = 0; i < d; ++i) grad.relation[k.rel * d + i] += scale * gw[i];

  matvec_transposed(mat, gh, d, back);
  for (int i = 0; i < d; ++i) grad.entity[k.head * d + i] += scale * back[i];
  matvec_transposed(mat, gt, d, back);
  for (int i = 0; i < d; ++i) grad.entity[k.tail * d + i] -= scale * back[i];

  double* gm = grad.projection.data() + static_cast<size_t>(k.rel) * d * d;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) gm[i * d + j] += scale * (gh[i] * eh[j] - gt[i] * et[j]);
}

}  // namespace

double batch_loss(const EmbeddingModel& m, std::span<const TripleKey> pos,
                  std::span<const TripleKey> neg, const Hyperparams& hp) {
  if (pos.size() != neg.size()) throw DataError("batch_loss: pos/neg size mismatch");
  if (pos.empty()) return 0.0;
  double total = 0;
  for (size_t i = 0; i < pos.size(); ++i) {
    double margin_violation = hp.margin + triple_distance(m, pos[i], hp.norm, true) -
                              triple_distance(m, neg[i], hp.norm, true);
    if (margin_violation > 0) total += margin_violation;
  }
  return total / static_cast<double>(pos.size());
}

double batch_loss_and_gradient(const EmbeddingModel& m, std::span<const TripleKey> pos,
                               std::span<const TripleKey> neg, const Hyperparams& hp,
                               ModelGradients& grad) {
  if (pos.size() != neg.size()) throw DataError("batch_loss: pos/neg size mismatch");
  if (grad.entity.size() != m.entity.size()) grad.resize_like(m);
  if (pos.empty()) return 0.0;
  double total = 0;
  const double scale = 1.0 / static_cast<double>(pos.size());
  for (size_t i = 0; i < pos.size(); ++i) {
    double margin_violation = hp.margin + triple_distance(m, pos[i], hp.norm, true) -
                              triple_distance(m, neg[i], hp.norm, true);
    if (margin_violation <= 0) continue;
    total += margin_violation;
    accumulate_distance_gradient(m, pos[i], hp.norm, scale, grad);
    accumulate_distance_gradient(m, neg[i], hp.norm, -scale, grad);
  }
  return total * scale;
}

double train_epoch(EmbeddingModel& model, const std::vector<Triple>& positives, const Graph& g,
                   const Hyperparams& hp, int epoch, const Rng& base_rng) {
  hp.check();
  if (positives.empty()) throw DataError("train_epoch: no positives");

  std::vector<size_t> order(positives.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng = base_rng.derive("train/shuffle").derive(static_cast<uint64_t>(epoch));
  shuffle_rng.shuffle(order);
  Rng corrupt_rng = base_rng.derive("train/corrupt").derive(static_cast<uint64_t>(epoch));

  ModelGradients grad;
  grad.resize_like(model);
  double loss_sum = 0;
  size_t pair_count = 0;

  std::vector<TripleKey> pos_batch, neg_batch;
  const size_t n = positives.size();
  size_t batch_index = 0;
  for (size_t start = 0; start < n; start += hp.batch_size, ++batch_index) {
    const size_t end = std::min(start + static_cast<size_t>(hp.batch_size), n);
    pos_batch.clear();
    neg_batch.clear();
    for (size_t i = start; i < end; ++i) {
      const Triple& p = positives[order[i]];
      Rng rng = corrupt_rng.derive(i);
      auto corrupted = sample_typed_corruption(rng, p, g, kTrainCorruptionAttempts);
      if (!corrupted) continue;  // corruption exhausted; the pair is skipped
      pos_batch.push_back(TripleKey{p.head, p.rel, p.tail});
      neg_batch.push_back(TripleKey{corrupted->head, corrupted->rel, corrupted->tail});
    }
    if (pos_batch.empty()) continue;

    grad.clear();
    double loss = batch_loss_and_gradient(model, pos_batch, neg_batch, hp, grad);
    if (!std::isfinite(loss))
      throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));
    loss_sum += loss * static_cast<double>(pos_batch.size());
    pair_count += pos_batch.size();
    if (loss == 0) continue;  // zero gradient: nothing to update or project

    for (size_t i = 0; i < model.entity.size(); ++i)
      model.entity[i] -= hp.learning_rate * grad.entity[i];
    for (size_t i = 0; i < model.relation.size(); ++i)
      model.relation[i] -= hp.learning_rate * grad.relation[i];
    for (size_t i = 0; i < model.projection.size(); ++i)
      model.projection[i] -= hp.learning_rate * grad.projection[i];

    // Projection constraint: entity embeddings stay inside the unit p-ball.
    for (size_t e = 0; e < model.entity_count(); ++e) {
      auto row = model.entity_row(e);
      double norm = pnorm(row, hp.norm);
      if (norm > 1.0)
        for (double& x : row) x /= norm;
    }
  }
  return pair_count > 0 ? loss_sum / static_cast<double>(pair_count) : 0.0;
}

double filtered_valid_mrr(Scorer& scorer, const Split& split, const Graph& g) {
  if (split.valid.empty()) throw DataError("filtered_valid_mrr: empty valid set");
  TripleSet known;
  for (const std::vector<Triple>* part : {&split.train, &split.valid, &split.test})
    for (const auto& t : *part) known.insert(t);
  std::vector<double> ranks;
  ranks.reserve(split.valid.size() * 2);
  for (const auto& t : split.valid) {
    ranks.push_back(rank_entity(scorer, t, Side::head, g, known).rank);
    ranks.push_back(rank_entity(scorer, t, Side::tail, g, known).rank);
  }
  return mean_reciprocal_rank(ranks);
}

TrainResult train(ModelKind kind, const Split& split, const Graph& g, const Hyperparams& hp) {
  hp.check();
  if (split.train.empty()) throw DataError("train: empty train part");

  TrainResult result;
  EmbeddingModel model = init_model(kind, g, hp);
  Rng base(hp.seed);

  std::optional<EmbeddingModel> best;
  double best_mrr = -1.0;
  int checks_without_improvement = 0;

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    result.losses.push_back(train_epoch(model, split.train, g, hp, epoch, base));
    if (!split.valid.empty() && (epoch + 1) % hp.eval_every == 0) {
      ModelScorer scorer(model, g, hp.norm);
      double mrr = filtered_valid_mrr(scorer, split, g);
      if (mrr > best_mrr) {
        best_mrr = mrr;
        best = model;
        result.best_epoch = epoch;
        checks_without_improvement = 0;
      } else if (++checks_without_improvement >= hp.patience) {
        break;
      }
    }
  }
  result.best_valid_mrr = std::max(best_mrr, 0.0);
  result.model = best ? std::move(*best) : std::move(model);
  return result;
}

void save_model(std::ostream& out, const EmbeddingModel& m) {
  char buf[40];
  auto write_values = [&](std::span<const double> values) {
    for (double v : values) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << '\t' << buf;
    }
    out << '\n';
  };
  out << to_string(m.kind) << '\t' << m.dim << '\t' << m.entity_count() << '\t'
      << m.relation_count() << '\n';
  for (size_t e = 0; e < m.entity_count(); ++e) {
    out << "E\t" << m.entity_names[e];
    write_values(m.entity_row(e));
  }
  for (size_t r = 0; r < m.relation_count(); ++r) {
    out << "R\t" << m.relation_names[r];
    write_values(m.relation_row(r));
  }
  if (m.kind == ModelKind::transr) {
    for (size_t r = 0; r < m.relation_count(); ++r) {
      out << "M\t" << m.relation_names[r];
      write_values(m.projection_matrix(r));
    }
  }
}

void save_model_file(const std::string& path, const EmbeddingModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path);
  save_model(out, m);
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

EmbeddingModel load_model(std::istream& in, std::string_view filename) {
  std::string line;
  size_t line_no = 0;
  auto where = [&]() { return std::string(filename) + ":" + std::to_string(line_no); };
  auto next_line = [&]() {
    if (!std::getline(in, line)) {
      ++line_no;  // the line that should have been there
      throw DataError(where() + ": unexpected end of file (truncated model)");
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };

  next_line();
  auto header = split_tabs(line);
  if (header.size() != 4) throw DataError(where() + ": malformed model header");
  EmbeddingModel m;
  m.kind = parse_model_kind(header[0]);
  m.dim = std::atoi(header[1].c_str());
  long long ne = std::atoll(header[2].c_str());
  long long nr = std::atoll(header[3].c_str());
  if (m.dim <= 0 || ne <= 0 || nr <= 0) throw DataError(where() + ": bad model header counts");

  auto read_row = [&](const char* tag, size_t expected_values, std::string& name,
                      std::vector<double>& dst) {
    next_line();
    auto cols = split_tabs(line);
    if (cols.size() < 2 || cols[0] != tag)
      throw DataError(where() + ": expected a '" + tag + "' row");
    if (cols.size() - 2 != expected_values)
      throw DataError(where() + ": expected " + std::to_string(expected_values) +
                      " values, got " + std::to_string(cols.size() - 2));
    name = cols[1];
    for (size_t i = 2; i < cols.size(); ++i) {
      char* end = nullptr;
      double v = std::strtod(cols[i].c_str(), &end);
      if (end != cols[i].c_str() + cols[i].size())
        throw DataError(where() + ": non-numeric value '" + cols[i] + "'");
      dst.push_back(v);
    }
  };

  const size_t d = static_cast<size_t>(m.dim);
  m.entity.reserve(ne * d);
  m.entity_names.resize(ne);
  for (long long e = 0; e < ne; ++e) read_row("E", d, m.entity_names[e], m.entity);
  m.relation.reserve(nr * d);
  m.relation_names.resize(nr);
  for (long long r = 0; r < nr; ++r) read_row("R", d, m.relation_names[r], m.relation);
  if (m.kind == ModelKind::transr) {
    m.projection.reserve(nr * d * d);
    std::string name;
    for (long long r = 0; r < nr; ++r) {
      read_row("M", d * d, name, m.projection);
      if (name != m.relation_names[r])
        throw DataError(where() + ": projection row order does not match relation rows");
    }
  }
  return m;
}

EmbeddingModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path);
  return load_model(in, path);
}

ModelScorer::ModelScorer(const EmbeddingModel& model, const Graph& g, int norm)
    : model_(&model), norm_(norm) {
  const RelationSchema& schema = g.schema();
  std::unordered_map<std::string, uint32_t> entity_by_name;
  entity_by_name.reserve(model.entity_count());
  for (uint32_t i = 0; i < model.entity_count(); ++i)
    entity_by_name.emplace(model.entity_names[i], i);
  entity_rows_.resize(g.entities().size());
  for (EntityIdx e = 0; e < g.entities().size(); ++e) {
    auto it = entity_by_name.find(g.entities().name(e, schema));
    if (it == entity_by_name.end())
      throw DataError("model has no embedding for entity '" + g.entities().name(e, schema) + "'");
    entity_rows_[e] = it->second;
  }
  std::unordered_map<std::string, uint32_t> relation_by_name;
  for (uint32_t i = 0; i < model.relation_count(); ++i)
    relation_by_name.emplace(model.relation_names[i], i);
  relation_rows_.resize(schema.relation_count());
  for (RelationIdx r = 0; r < schema.relation_count(); ++r) {
    auto it = relation_by_name.find(schema.relation(r).name);
    if (it == relation_by_name.end())
      throw DataError("model has no embedding for relation '" + schema.relation(r).name + "'");
    relation_rows_[r] = it->second;
  }
}

void ModelScorer::score_batch(std::span<const TripleKey> triples, std::vector<double>& out) {
  out.resize(triples.size());
  for (size_t i = 0; i < triples.size(); ++i) {
    const TripleKey& k = triples[i];
    out[i] = model_->score(entity_rows_[k.head], relation_rows_[k.rel], entity_rows_[k.tail],
                           norm_);
  }
}

}  // namespace kgbench
