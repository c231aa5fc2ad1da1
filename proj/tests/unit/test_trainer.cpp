#include <doctest.h>

#include <cmath>

#include "fairdtd/error.hpp"
#include "fairdtd/splits.hpp"
#include "fairdtd/synthetic.hpp"
#include "fairdtd/trainer.hpp"
#include "oracles.hpp"

using namespace fairdtd;

namespace {

Graph small_fixture(std::uint64_t seed = 1, std::size_t n = 200) {
  SyntheticSpec s = standard_fixture(seed);
  s.num_nodes = n;
  s.p_intra = 0.08;
  s.p_inter = 0.016;
  Graph g = generate_biased_sbm(s);
  g.splits = make_splits(g, {}, seed);
  return g;
}

TrainConfig quick_config(std::size_t epochs = 40) {
  TrainConfig c;
  c.epochs = epochs;
  c.hidden = 16;
  c.seeds = {1, 2};
  return c;
}

double train_accuracy(const TrainedModel& tm, const PreparedGraph& pg, const Matrix& input) {
  const ForwardValues fv = evaluate(tm.params, pg.ops, input);
  return accuracy(make_prediction_set(fv.logits, *pg.graph, pg.graph->splits.train));
}

double majority_rate(const Graph& g, const Mask& mask) {
  double n = 0, pos = 0;
  for (std::size_t i = 0; i < g.num_nodes(); ++i)
    if (mask[i]) {
      n += 1;
      pos += g.labels[i];
    }
  return 100.0 * std::max(pos, n - pos) / n;
}

}  // namespace

TEST_CASE("feature teacher fits separable features") {
  Rng rng(1);
  Graph g = oracle::random_graph(rng, 200, 0.0, 2);
  for (std::size_t i = 0; i < 200; ++i) {
    g.features(i, 0) = (g.labels[i] == 1 ? 2.0 : -2.0) + 0.3 * rng.normal();
    g.features(i, 1) = rng.normal();
  }
  g.splits = make_splits(g, {}, 1);
  const PreparedGraph pg = prepare_graph(g, true);
  const TrainedModel tm = train_feature_teacher(pg, quick_config(700), 1);
  CHECK(train_accuracy(tm, pg, pg.features) >= 95.0);
}

TEST_CASE("feature teacher on label-independent features stays near the majority rate") {
  Rng rng(2);
  Graph g = oracle::random_graph(rng, 2000, 0.0, 4);
  g.splits = make_splits(g, {}, 2);
  const PreparedGraph pg = prepare_graph(g, true);
  const TrainedModel tm = train_feature_teacher(pg, quick_config(100), 2);
  CHECK(std::abs(tm.record.val[tm.record.best_epoch].acc - majority_rate(g, g.splits.val)) <= 5.0);
}

TEST_CASE("structure teacher") {
  SUBCASE("recovers communities with distinct degree structure") {
    // Symmetric normalization maps near-regular blocks to row sums near 1,
    // so only degree heterogeneity reaches an all-ones input. Community 0
    // is a dense random block, community 1 a forest of 10-node stars.
    Rng rng(3);
    Graph g = oracle::random_graph(rng, 400, 0.0, 1);
    for (std::size_t i = 0; i < 400; ++i) g.labels[i] = g.sensitive[i] = i < 200 ? 0 : 1;
    g.edges.clear();
    for (std::uint32_t i = 0; i < 400; ++i)
      for (std::uint32_t j = i + 1; j < 400; ++j) {
        bool edge;
        if (j < 200) edge = rng.uniform() < 0.05;
        else if (i >= 200) edge = (i - 200) % 10 == 0 && (j - 200) / 10 == (i - 200) / 10;
        else edge = rng.uniform() < 0.001;
        if (edge) g.edges.emplace_back(i, j);
      }
    g.splits = make_splits(g, {}, 3);
    const PreparedGraph pg = prepare_graph(g, true);
    const TrainedModel tm = train_structure_teacher(pg, quick_config(700), 3);
    CHECK(tm.record.test.acc >= 85.0);
  }
  SUBCASE("edgeless graph predicts one class") {
    Rng rng(4);
    Graph g = oracle::random_graph(rng, 300, 0.0, 2);
    g.splits = make_splits(g, {}, 4);
    const PreparedGraph pg = prepare_graph(g, true);
    const TrainedModel tm = train_structure_teacher(pg, quick_config(100), 4);
    const std::vector<int> yhat = predictions_from_logits(evaluate(tm.params, pg.ops, pg.ones).logits);
    for (int v : yhat) CHECK(v == yhat[0]);
    CHECK(std::abs(tm.record.test.acc - majority_rate(g, g.splits.test)) <= 5.0);
  }
}

TEST_CASE("training is deterministic per seed") {
  const Graph g = small_fixture();
  const PreparedGraph pg = prepare_graph(g, true);
  const TrainConfig cfg = quick_config();
  CHECK(train_feature_teacher(pg, cfg, 7).params == train_feature_teacher(pg, cfg, 7).params);
  CHECK(train_structure_teacher(pg, cfg, 7).params == train_structure_teacher(pg, cfg, 7).params);
  const SeedRun a = run_variant_seed(pg, cfg, Variant::FairDtd, 7);
  const SeedRun b = run_variant_seed(pg, cfg, Variant::FairDtd, 7);
  CHECK(a.student == b.student);
  CHECK(a.temp_fea == b.temp_fea);
  CHECK(a.record.test.acc == b.record.test.acc);
  CHECK(a.record.probe_auc == b.record.probe_auc);
  CHECK_FALSE(run_variant_seed(pg, cfg, Variant::FairDtd, 8).student == a.student);
}

TEST_CASE("student training") {
  const Graph g = small_fixture(2);
  const PreparedGraph pg = prepare_graph(g, true);
  TrainConfig cfg = quick_config();
  const TrainedModel fea = train_feature_teacher(pg, cfg, 1);
  const TrainedModel str = train_structure_teacher(pg, cfg, 1);

  SUBCASE("teachers stay frozen") {
    const TrainedModel fea_copy = fea, str_copy = str;
    (void)train_student(pg, &fea, &str, cfg, 1);
    CHECK(fea.params == fea_copy.params);
    CHECK(str.params == str_copy.params);
  }
  SUBCASE("recorded losses satisfy the accounting identity every epoch") {
    for (double alpha : {0.0, 0.3, 0.5, 1.0}) {
      cfg.distill.alpha = alpha;
      const StudentResult r = train_student(pg, &fea, &str, cfg, 1);
      REQUIRE(r.record.losses.size() == cfg.epochs);
      for (const LossTerms& l : r.record.losses) {
        const double expected = l.hard + alpha * (l.soft_fea + l.mid_fea) + (1 - alpha) * (l.soft_str + l.mid_str);
        CHECK(std::abs(l.final - expected) <= 1e-12);
      }
      REQUIRE(r.record.mean_tau_fea);
      CHECK(*r.record.mean_tau_fea >= cfg.distill.tau_min);
      CHECK(*r.record.mean_tau_fea <= cfg.distill.tau_max);
    }
  }
  SUBCASE("alpha = 1 is bit-identical to dropping the structure teacher") {
    cfg.distill.alpha = 1.0;
    const StudentResult with_str = train_student(pg, &fea, &str, cfg, 1);
    TrainConfig no_str = cfg;
    no_str.distill.use_structure_teacher = false;
    const StudentResult without = train_student(pg, &fea, nullptr, no_str, 1);
    CHECK(with_str.student == without.student);
    CHECK(with_str.temp_fea == without.temp_fea);
    CHECK(with_str.record.best_epoch == without.record.best_epoch);
    for (std::size_t e = 0; e < cfg.epochs; ++e) CHECK(with_str.record.losses[e].final == without.record.losses[e].final);
  }
  SUBCASE("all distillation off reproduces the vanilla trajectory") {
    cfg.distill = apply_variant(cfg.distill, Variant::Vanilla);
    const StudentResult s = train_student(pg, nullptr, nullptr, cfg, 1);
    const TrainedModel v = train_vanilla(pg, cfg, 1);
    CHECK(s.student == v.params);
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
      CHECK(s.record.losses[e].final == v.record.losses[e].final);
      CHECK(s.record.val[e].acc == v.record.val[e].acc);
    }
  }
  SUBCASE("missing teacher and width mismatch") {
    CHECK_THROWS_AS(train_student(pg, &fea, nullptr, cfg, 1), DependencyError);
    TrainConfig wide = cfg;
    wide.hidden = 32;
    CHECK_THROWS_AS(train_student(pg, &fea, &str, wide, 1), CompatibilityError);
  }
  SUBCASE("GIN student runs and stays finite") {
    cfg.student_kind = EncoderKind::Gin;
    const StudentResult r = train_student(pg, &fea, &str, cfg, 1);
    CHECK(r.student.all_finite());
    CHECK(r.student.kind == EncoderKind::Gin);
  }
}

TEST_CASE("ablation and partial-data runners") {
  const Graph g = small_fixture(3);
  const PreparedGraph pg = prepare_graph(g, true);
  const TrainConfig cfg = quick_config(20);
  const std::vector<VariantRuns> abl = run_ablation(pg, cfg);
  REQUIRE(abl.size() == 5);
  for (const VariantRuns& vr : abl) {
    REQUIRE(vr.runs.size() == cfg.seeds.size());
    for (std::size_t k = 0; k < cfg.seeds.size(); ++k) CHECK(vr.runs[k].seed == cfg.seeds[k]);
  }
  for (const LossTerms& l : abl[3].runs[0].record.losses) CHECK(l.mid_fea + l.mid_str == 0.0);
  for (const LossTerms& l : abl[1].runs[0].record.losses) CHECK(l.soft_fea == 0.0);
  CHECK_FALSE(abl[4].runs[0].temp_fea.has_value());

  const std::vector<StrategyRuns> partial = run_partial_data(pg, cfg);
  REQUIRE(partial.size() == 3);
  for (const StrategyRuns& s : partial) {
    REQUIRE(s.runs.size() == 2);
    CHECK(s.runs[0].seed == 1);
    CHECK(s.runs[1].seed == 2);
  }
  CHECK(partial[0].report().acc().count == 2);
}

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.resolved_student_lr() == kGcnLearningRate);
  c.student_kind = EncoderKind::Gin;
  CHECK(c.resolved_student_lr() == kGinLearningRate);
  c.student_kind = EncoderKind::Mlp;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.seeds.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  Graph g = small_fixture();
  g.splits.val.assign(g.num_nodes(), 0);
  CHECK_THROWS_AS(prepare_graph(g, true), EmptySelectionError);
}
