#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgbench/graph.hpp"
#include "kgbench/metrics.hpp"
#include "kgbench/rng.hpp"
#include "kgbench/split.hpp"

namespace kgbench {

enum class ModelKind : uint8_t { transe, transr };

const char* to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view s);

struct Hyperparams {
  int dim = 100;
  double margin = 1.0;
  double learning_rate = 0.01;
  int norm = 2;  // p, 1 or 2
  int epochs = 100;
  int batch_size = 128;
  uint64_t seed = 0;
  int eval_every = 10;  // filtered valid-MRR checkpoint cadence
  int patience = 3;     // checks without improvement before stopping

  void check() const;
};

// Translational embedding model. Rows are ordered like the entity/relation
// tables of the graph the model was initialized from; names make the file
// form re-bindable.
struct EmbeddingModel {
  ModelKind kind = ModelKind::transe;
  int dim = 0;
  std::vector<std::string> entity_names;
  std::vector<std::string> relation_names;
  std::vector<double> entity;      // |E| x d
  std::vector<double> relation;    // |R| x d
  std::vector<double> projection;  // |R| x d x d row-major, TransR only

  size_t entity_count() const { return entity_names.size(); }
  size_t relation_count() const { return relation_names.size(); }
  std::span<const double> entity_row(size_t i) const { return {entity.data() + i * dim, (size_t)dim}; }
  std::span<double> entity_row(size_t i) { return {entity.data() + i * dim, (size_t)dim}; }
  std::span<const double> relation_row(size_t i) const { return {relation.data() + i * dim, (size_t)dim}; }
  std::span<double> relation_row(size_t i) { return {relation.data() + i * dim, (size_t)dim}; }
  std::span<const double> projection_matrix(size_t r) const {
    return {projection.data() + r * dim * dim, (size_t)(dim * dim)};
  }
  std::span<double> projection_matrix(size_t r) {
    return {projection.data() + r * dim * dim, (size_t)(dim * dim)};
  }

  // -||e_h + e_r - e_t||_p (TransE) or -||M_r e_h + e_r - M_r e_t||_p
  // (TransR), by model row indices. No norm clipping; the clip applies only
  // inside the training loss. p is a hyperparameter, not stored in the file.
  double score(uint32_t h, uint32_t r, uint32_t t, int p) const;
};

// Embeddings drawn uniformly from [-6/sqrt(d), +6/sqrt(d)] with streams
// derived from hp.seed; relation embeddings normalized to unit p-norm;
// TransR projections start as the identity.
EmbeddingModel init_model(ModelKind kind, std::vector<std::string> entity_names,
                          std::vector<std::string> relation_names, const Hyperparams& hp);
EmbeddingModel init_model(ModelKind kind, const Graph& g, const Hyperparams& hp);

double transe_score(const EmbeddingModel& m, uint32_t h, uint32_t r, uint32_t t, int p);
double transr_score(const EmbeddingModel& m, uint32_t h, uint32_t r, uint32_t t, int p);

// Dense same-shape gradient buffers for one minibatch.
struct ModelGradients {
  std::vector<double> entity, relation, projection;
  void resize_like(const EmbeddingModel& m);
  void clear();
};

// Mean hinge loss max(0, margin + dist(pos) - dist(neg)) over aligned
// pos/neg pairs. During training TransR projected entities are norm-clipped
// to the unit p-ball inside dist, and the gradient goes through the clip.
double batch_loss(const EmbeddingModel& m, std::span<const TripleKey> pos,
                  std::span<const TripleKey> neg, const Hyperparams& hp);
double batch_loss_and_gradient(const EmbeddingModel& m, std::span<const TripleKey> pos,
                               std::span<const TripleKey> neg, const Hyperparams& hp,
                               ModelGradients& grad);

// One pass: shuffle positives, one typed corruption per positive (rejecting
// graph positives), SGD step per minibatch, then entity embeddings with
// p-norm > 1 are rescaled onto the unit ball. Returns mean per-triple loss.
// Throws DivergenceError on non-finite loss.
double train_epoch(EmbeddingModel& model, const std::vector<Triple>& positives, const Graph& g,
                   const Hyperparams& hp, int epoch, const Rng& base_rng);

struct TrainResult {
  EmbeddingModel model;
  std::vector<double> losses;  // one entry per epoch actually run
  int best_epoch = -1;         // -1 when no validation checkpointing happened
  double best_valid_mrr = 0;
};

// Runs hp.epochs of train_epoch; with a non-empty valid set, evaluates
// filtered pooled MRR on it every hp.eval_every epochs, keeps the best
// checkpoint and stops after hp.patience checks without improvement.
TrainResult train(ModelKind kind, const Split& split, const Graph& g, const Hyperparams& hp);

// Model file: header "KIND <TAB> d <TAB> |E| <TAB> |R|", then one row per
// entity (E), relation (R) and TransR projection (M): tag <TAB> name <TAB>
// values with 17 significant digits. Round trips bit-exactly.
void save_model(std::ostream& out, const EmbeddingModel& m);
void save_model_file(const std::string& path, const EmbeddingModel& m);
EmbeddingModel load_model(std::istream& in, std::string_view filename = "<model>");
EmbeddingModel load_model_file(const std::string& path);

// Binds a model to a graph by entity/relation name so graph indices can be
// scored directly. Read-only over the model: safe for concurrent batches.
class ModelScorer : public Scorer {
 public:
  ModelScorer(const EmbeddingModel& model, const Graph& g, int norm = 2);
  void score_batch(std::span<const TripleKey> triples, std::vector<double>& out) override;

 private:
  const EmbeddingModel* model_;
  int norm_;
  std::vector<uint32_t> entity_rows_;    // graph entity idx -> model row
  std::vector<uint32_t> relation_rows_;  // graph relation idx -> model row
};

// Filtered pooled MRR of `scorer` on the valid part (known positives =
// train + valid + test); the early-stopping criterion.
double filtered_valid_mrr(Scorer& scorer, const Split& split, const Graph& g);

}  // namespace kgbench
