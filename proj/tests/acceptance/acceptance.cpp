// Acceptance harness: one PASS/FAIL/SKIP line per criterion.
//
//   fairdtd_acceptance --cli <path to fairdtd> --workdir <scratch dir>
//                      [--documented-failures 5,6]
//
// Criteria listed in --documented-failures still print FAIL when they fail;
// they only stop counting toward the exit status.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fairdtd/distill.hpp"
#include "fairdtd/error.hpp"
#include "fairdtd/metrics.hpp"
#include "fairdtd/ops.hpp"
#include "fairdtd/splits.hpp"
#include "fairdtd/synthetic.hpp"
#include "fairdtd/trainer.hpp"
#include "oracles.hpp"

namespace {

using namespace fairdtd;
using ad::Tape;
using ad::Var;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// Tolerances and budgets.
constexpr double kFdTol = 1e-4;
constexpr double kFdStep = 1e-6;
constexpr int kFdInstances = 20;
constexpr double kOracleTol = 1e-12;
constexpr double kAccountingTol = 1e-12;
constexpr double kGradientBudget = 30.0;
constexpr double kPartialBudget = 180.0;
constexpr double kPartialFairnessRatio = 0.7;   // partial strategies vs full data
constexpr double kTradeoffFairnessRatio = 0.7;  // FairDTD vs vanilla
constexpr double kTradeoffAccuracySlack = 2.0;
constexpr double kAblationSlack = 1.0;
constexpr double kPokecAcc = 69.71, kPokecAccSlack = 2.0, kPokecSpMax = 3.5;
constexpr double kTotalBudget = 600.0;
const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  enum Status { Pass, Fail, Skip } status = Pass;
  std::string detail;
};

class Report {
 public:
  explicit Report(std::set<int> documented) : documented_(std::move(documented)) {}

  void emit(int id, const char* name, const Outcome& o) {
    static const char* const kWords[] = {"PASS", "FAIL", "SKIP"};
    std::string note;
    if (o.status == Outcome::Fail && documented_.count(id)) note = " [documented]";
    std::printf("%s  %d %-24s %s%s\n", kWords[o.status], id, name, o.detail.c_str(), note.c_str());
    std::fflush(stdout);
    if (o.status == Outcome::Fail && !documented_.count(id)) ++blocking_;
  }
  int blocking() const { return blocking_; }

 private:
  std::set<int> documented_;
  int blocking_ = 0;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Finite-difference gradients

struct FdCase {
  std::string name;
  std::function<double(Rng&)> run;  // worst relative error of one instance
};

Var project(Tape& t, Var out, const Matrix& w) { return ad::sum(ad::mul(out, t.constant(w))); }

Matrix signed_away_from_zero(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m = oracle::random_matrix(rng, r, c, 0.1, 1.0);
  for (double& v : m.values())
    if (rng.bernoulli(0.5)) v = -v;
  return m;
}

// Random student/teacher pair for the composed losses.
struct LossFixture {
  std::size_t n, h;
  std::vector<int> labels;
  Mask train;
  TeacherOutputs fea, str;
  ModelParams net_fea, net_str;
  Matrix z, r;

  explicit LossFixture(Rng& rng) : n(3 + rng.below(6)), h(2 + rng.below(4)) {
    for (std::size_t i = 0; i < n; ++i) {
      labels.push_back(static_cast<int>(rng.below(2)));
      train.push_back(rng.bernoulli(0.6) ? 1 : 0);
    }
    train[0] = 1;
    fea = {oracle::random_matrix(rng, n, 2, -3, 3), oracle::random_matrix(rng, n, h, 0.1, 1)};
    str = {oracle::random_matrix(rng, n, 2, -3, 3), oracle::random_matrix(rng, n, h, 0.1, 1)};
    net_fea = init_temperature_net(2, rng.next_u64());
    net_str = init_temperature_net(2, rng.next_u64());
    z = oracle::random_matrix(rng, n, 2, -3, 3);
    r = oracle::random_matrix(rng, n, h, 0.1, 1);
  }
};

std::vector<FdCase> fd_cases() {
  using V = std::vector<Var>;
  std::vector<FdCase> cs;
  auto dims = [](Rng& rng) { return std::pair<std::size_t, std::size_t>{1 + rng.below(5), 2 + rng.below(3)}; };
  auto unary = [&](std::string name, std::function<Var(Tape&, Var)> op, bool avoid_zero) {
    cs.push_back({name, [=](Rng& rng) {
                    const auto [r, c] = dims(rng);
                    const Matrix w = oracle::random_matrix(rng, r, c);
                    const Matrix x = avoid_zero ? signed_away_from_zero(rng, r, c) : oracle::random_matrix(rng, r, c, -2, 2);
                    return oracle::check_gradients(
                        {x}, [&](Tape& t, const V& v) { return project(t, op(t, v[0]), w); }, kFdStep);
                  }});
  };
  auto binary = [&](std::string name, std::function<Var(Var, Var)> op) {
    cs.push_back({name, [=](Rng& rng) {
                    const auto [r, c] = dims(rng);
                    const Matrix w = oracle::random_matrix(rng, r, c);
                    return oracle::check_gradients(
                        {oracle::random_matrix(rng, r, c), oracle::random_matrix(rng, r, c)},
                        [&](Tape& t, const V& v) { return project(t, op(v[0], v[1]), w); }, kFdStep);
                  }});
  };
  binary("add", ad::add);
  binary("sub", ad::sub);
  binary("mul", ad::mul);
  unary("scale", [](Tape&, Var a) { return ad::scale(a, -1.7); }, false);
  unary("add_scalar", [](Tape&, Var a) { return ad::add_scalar(a, 0.4); }, false);
  unary("square", [](Tape&, Var a) { return ad::square(a); }, false);
  unary("relu", [](Tape&, Var a) { return ad::relu(a); }, true);
  unary("sigmoid", [](Tape&, Var a) { return ad::sigmoid(a); }, false);
  unary("softmax", [](Tape&, Var a) { return ad::softmax_rows(a); }, false);
  unary("softmax_fixed_tau", [](Tape&, Var a) { return ad::softmax_rows(a, 2.5); }, false);
  unary("l2_normalize_rows", [](Tape&, Var a) { return ad::l2_normalize_rows(a); }, true);
  cs.push_back({"matmul", [](Rng& rng) {
                  const std::size_t r = 1 + rng.below(5), m = 1 + rng.below(4), c = 1 + rng.below(4);
                  const Matrix w = oracle::random_matrix(rng, r, c);
                  return oracle::check_gradients(
                      {oracle::random_matrix(rng, r, m), oracle::random_matrix(rng, m, c)},
                      [&](Tape& t, const V& v) { return project(t, ad::matmul(v[0], v[1]), w); }, kFdStep);
                }});
  cs.push_back({"add_row", [](Rng& rng) {
                  const std::size_t r = 1 + rng.below(5), c = 1 + rng.below(4);
                  const Matrix w = oracle::random_matrix(rng, r, c);
                  return oracle::check_gradients(
                      {oracle::random_matrix(rng, r, c), oracle::random_matrix(rng, 1, c)},
                      [&](Tape& t, const V& v) { return project(t, ad::add_row(v[0], v[1]), w); }, kFdStep);
                }});
  cs.push_back({"div_rows", [](Rng& rng) {
                  const std::size_t r = 1 + rng.below(5), c = 1 + rng.below(4);
                  const Matrix w = oracle::random_matrix(rng, r, c);
                  return oracle::check_gradients(
                      {oracle::random_matrix(rng, r, c), oracle::random_matrix(rng, r, 1, 0.5, 3)},
                      [&](Tape& t, const V& v) { return project(t, ad::div_rows(v[0], v[1]), w); }, kFdStep);
                }});
  cs.push_back({"softmax_node_tau", [](Rng& rng) {
                  const std::size_t r = 1 + rng.below(5), c = 2 + rng.below(3);
                  const Matrix w = oracle::random_matrix(rng, r, c);
                  return oracle::check_gradients(
                      {oracle::random_matrix(rng, r, c, -3, 3), oracle::random_matrix(rng, r, 1, 0.5, 5)},
                      [&](Tape& t, const V& v) { return project(t, ad::softmax_rows(v[0], v[1]), w); }, kFdStep);
                }});
  cs.push_back({"spmm", [](Rng& rng) {
                  const Graph g = oracle::random_graph(rng, 1 + rng.below(10), 0.4);
                  const SparseAdjacency a = normalize_adjacency(g);
                  const std::size_t c = 1 + rng.below(3);
                  const Matrix w = oracle::random_matrix(rng, g.num_nodes(), c);
                  return oracle::check_gradients(
                      {oracle::random_matrix(rng, g.num_nodes(), c)},
                      [&](Tape& t, const V& v) { return project(t, ad::spmm(a, v[0]), w); }, kFdStep);
                }});
  cs.push_back({"kl_div_rows", [](Rng& rng) {
                  const std::size_t r = 1 + rng.below(5), c = 2 + rng.below(3);
                  return oracle::check_gradients(
                      {oracle::random_matrix(rng, r, c, -3, 3), oracle::random_matrix(rng, r, c, -3, 3)},
                      [&](Tape&, const V& v) {
                        return ad::kl_div_rows(ad::softmax_rows(v[0]), ad::softmax_rows(v[1]));
                      },
                      kFdStep);
                }});
  cs.push_back({"sum_mean", [](Rng& rng) {
                  const Matrix w = oracle::random_matrix(rng, 3, 4);
                  return oracle::check_gradients(
                      {oracle::random_matrix(rng, 3, 4)},
                      [&](Tape& t, const V& v) {
                        return ad::add(ad::mean(ad::mul(v[0], t.constant(w))), ad::sum(ad::square(v[0])));
                      },
                      kFdStep);
                }});
  cs.push_back({"loss_hard", [](Rng& rng) {
                  const LossFixture f(rng);
                  return oracle::check_gradients(
                      {f.z}, [&](Tape&, const V& v) { return ad::cross_entropy_masked(v[0], f.labels, f.train); },
                      kFdStep);
                }});
  cs.push_back({"loss_soft_fixed_tau", [](Rng& rng) {
                  const LossFixture f(rng);
                  const double tau = rng.uniform(0.5, 5);
                  return oracle::check_gradients(
                      {f.z}, [&](Tape& t, const V& v) { return soft_loss(v[0], t.constant(f.fea.logits), tau); },
                      kFdStep);
                }});
  cs.push_back({"loss_soft_node_tau", [](Rng& rng) {
                  const LossFixture f(rng);
                  const ModelParams& p = f.net_fea;
                  return oracle::check_gradients(
                      {f.z, p.w1, p.b1, p.w2, p.b2},
                      [&](Tape& t, const V& v) {
                        const Var tau = node_temperatures({v[1], v[2], v[3], v[4]}, f.fea.logits, 1.0, 5.0);
                        return soft_loss(v[0], t.constant(f.fea.logits), tau);
                      },
                      kFdStep);
                }});
  cs.push_back({"loss_mid", [](Rng& rng) {
                  const LossFixture f(rng);
                  return oracle::check_gradients(
                      {f.r}, [&](Tape& t, const V& v) { return mid_loss(v[0], t.constant(f.str.hidden)); }, kFdStep);
                }});
  cs.push_back({"loss_final", [](Rng& rng) {
                  const LossFixture f(rng);
                  DistillConfig cfg;
                  cfg.alpha = rng.uniform();
                  return oracle::check_gradients(
                      {f.z, f.r, f.net_fea.w1, f.net_str.w2},
                      [&](Tape& t, const V& v) {
                        BoundParams nf = bind(t, f.net_fea, false), ns = bind(t, f.net_str, false);
                        nf.w1 = v[2];
                        ns.w2 = v[3];
                        return student_objective(t, v[0], v[1], f.labels, f.train, &f.fea, &f.str, &nf, &ns, cfg)
                            .loss;
                      },
                      kFdStep);
                }});
  for (EncoderKind kind : {EncoderKind::Mlp, EncoderKind::Gcn, EncoderKind::Gin}) {
    cs.push_back({"encoder_" + std::string(to_string(kind)), [kind](Rng& rng) {
                    const Graph g = oracle::random_graph(rng, 6, 0.4, 3);
                    const GraphOperators ops = make_operators(g);
                    const ModelParams p = init_params(kind, 3, 4, 2, rng.next_u64());
                    const Matrix w = oracle::random_matrix(rng, 6, 2);
                    return oracle::check_gradients(
                        {p.w1, oracle::random_matrix(rng, 1, 4), p.w2, p.b2},
                        [&](Tape& t, const V& v) {
                          const BoundParams bp{v[0], v[1], v[2], v[3]};
                          return project(t, forward_any(bp, kind, ops, t.constant(g.features)).logits, w);
                        },
                        kFdStep);
                  }});
  }
  return cs;
}

Outcome criterion_gradients() {
  const auto t0 = Clock::now();
  Rng rng(20240601);
  double worst = 0.0;
  std::string worst_name;
  std::size_t cases = 0;
  for (const FdCase& c : fd_cases()) {
    ++cases;
    for (int k = 0; k < kFdInstances; ++k) {
      const double e = c.run(rng);
      if (!(e <= worst)) {
        worst = e;
        worst_name = c.name;
      }
    }
  }
  const double secs = since(t0);
  Outcome o;
  o.status = worst <= kFdTol && secs < kGradientBudget ? Outcome::Pass : Outcome::Fail;
  o.detail = fmt("%.0f checks x 20 instances, worst rel err %.2e", static_cast<double>(cases), worst) + " (" +
             worst_name + ")" + fmt(", %.1fs", secs);
  return o;
}

// ---------------------------------------------------------------------------
// 2. Oracle equivalence

Outcome criterion_oracles() {
  Rng rng(7);
  std::size_t mismatches = 0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 1 + rng.below(60);
    PredictionSet p;
    for (std::size_t i = 0; i < n; ++i) {
      p.predicted.push_back(static_cast<int>(rng.below(2)));
      p.labels.push_back(static_cast<int>(rng.below(2)));
      p.sensitive.push_back(rng.bernoulli(0.85) ? static_cast<int>(rng.below(2)) : 1);
      p.mask.push_back(rng.bernoulli(0.8) ? 1 : 0);
    }
    const oracle::BruteMetrics want = oracle::brute_metrics(p.predicted, p.labels, p.sensitive, p.mask);
    if (!want.acc) {
      try {
        (void)accuracy(p);
        ++mismatches;
      } catch (const EmptySelectionError&) {
      }
      continue;
    }
    const MetricRow got = evaluate_predictions(p);
    if (got.acc != *want.acc || got.delta_sp != want.sp || got.delta_eo != want.eo) ++mismatches;
  }

  double spmm_err = 0.0, norm_err = 0.0;
  for (std::size_t n = 1; n <= 50; ++n) {
    for (int rep = 0; rep < 4; ++rep) {
      const Graph g = oracle::random_graph(rng, n, rng.uniform(0.0, 0.6));
      const Matrix dense = oracle::dense_normalized(g);
      const SparseAdjacency a = normalize_adjacency(g);
      const Matrix sparse = a.to_dense();
      for (std::size_t k = 0; k < dense.size(); ++k)
        norm_err = std::max(norm_err, std::abs(dense.values()[k] - sparse.values()[k]));
      const Matrix x = oracle::random_matrix(rng, n, 1 + rng.below(5));
      const Matrix want = oracle::dense_matmul(dense, x), got = a.multiply(x);
      for (std::size_t k = 0; k < want.size(); ++k)
        spmm_err = std::max(spmm_err, std::abs(want.values()[k] - got.values()[k]));
    }
  }
  Outcome o;
  o.status = mismatches == 0 && spmm_err <= kOracleTol && norm_err <= kOracleTol ? Outcome::Pass : Outcome::Fail;
  o.detail = fmt("metric mismatches %.0f/1000, spmm err %.1e, normalized-adjacency err %.1e",
                 static_cast<double>(mismatches), spmm_err, norm_err);
  return o;
}

// ---------------------------------------------------------------------------
// 3. Loss properties (static part; per-epoch accounting uses the training runs)

struct LossPropertyStats {
  std::size_t failures = 0;
  std::vector<std::string> notes;
  void fail(const std::string& what) {
    if (failures++ < 3) notes.push_back(what);
  }
};

void static_loss_properties(LossPropertyStats& st) {
  Rng rng(33);
  Tape t;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t c = 2 + rng.below(3);
    const Matrix p = oracle::random_probs(rng, 4, c), q = oracle::random_probs(rng, 4, c);
    if (!(ad::kl_div_rows(t.constant(p), t.constant(q)).scalar() > 0.0)) st.fail("KL not positive for p != q");
    if (ad::kl_div_rows(t.constant(p), t.constant(p)).scalar() > 1e-12) st.fail("KL(p, p) != 0");

    const Matrix rs = oracle::random_matrix(rng, 5, 3), rt = oracle::random_matrix(rng, 5, 3);
    Matrix scaled = rs;
    for (std::size_t i = 0; i < 5; ++i) {
      const double s = rng.uniform(0.01, 100);
      for (std::size_t j = 0; j < 3; ++j) scaled(i, j) *= s;
    }
    if (std::abs(mid_loss(t.constant(scaled), t.constant(rt)).scalar() -
                 mid_loss(t.constant(rs), t.constant(rt)).scalar()) > 1e-12)
      st.fail("mid loss not scale invariant");

    ModelParams net = init_temperature_net(2, rng.next_u64());
    for (Matrix* m : net.tensors()) *m = oracle::random_matrix(rng, m->rows(), m->cols(), -20, 20);
    const double lo = rng.uniform(0.1, 3), hi = lo + rng.uniform(0, 5);
    const Matrix tau = node_temperatures(bind(t, net, false), oracle::random_matrix(rng, 8, 2, -50, 50), lo, hi).value();
    for (double v : tau.values())
      if (v < lo || v > hi) st.fail("temperature outside range");
    t.reset();
  }

  // Flag semantics on the objective: disabled pieces get exactly zero gradient.
  for (int k = 0; k < 50; ++k) {
    const LossFixture f(rng);
    for (Variant v : kAblationVariants) {
      DistillConfig cfg = apply_variant(DistillConfig{}, v);
      cfg.alpha = rng.uniform(0.05, 0.95);
      Tape tp;
      const BoundParams nf = bind(tp, f.net_fea, true), ns = bind(tp, f.net_str, true);
      const Var z = tp.param(f.z), r = tp.param(f.r);
      const StudentObjective o = student_objective(tp, z, r, f.labels, f.train, &f.fea, &f.str, &nf, &ns, cfg);
      tp.backward(o.loss);
      auto zero = [&](const BoundParams& b) {
        for (const Var& x : b.vars())
          if (!(tp.grad(x) == Matrix(x.rows(), x.cols()))) return false;
        return true;
      };
      const bool r_zero = tp.grad(r) == Matrix(f.n, f.h);
      const LossTerms& l = o.terms;
      bool ok = true;
      switch (v) {
        case Variant::WithoutFt: ok = l.soft_fea == 0 && l.mid_fea == 0 && zero(nf); break;
        case Variant::WithoutSt: ok = l.soft_str == 0 && l.mid_str == 0 && zero(ns); break;
        case Variant::WithoutGd: ok = l.mid_fea == 0 && l.mid_str == 0 && r_zero; break;
        case Variant::WithoutNst: ok = zero(nf) && zero(ns); break;
        default: ok = !zero(nf) && !zero(ns) && !r_zero; break;
      }
      if (!ok) st.fail(std::string("flag semantics broken for ") + std::string(variant_label(v)));
    }
  }
}

/// Per-epoch accounting identity and recorded flag semantics of one run.
void check_record(const RunRecord& rec, const DistillConfig& cfg, LossPropertyStats& st, double& worst) {
  for (const LossTerms& l : rec.losses) {
    const double want =
        l.hard + cfg.alpha * (l.soft_fea + l.mid_fea) + (1.0 - cfg.alpha) * (l.soft_str + l.mid_str);
    worst = std::max(worst, std::abs(l.final - want));
    if (!cfg.use_feature_teacher && (l.soft_fea != 0 || l.mid_fea != 0)) st.fail("feature terms present");
    if (!cfg.use_structure_teacher && (l.soft_str != 0 || l.mid_str != 0)) st.fail("structure terms present");
    if (!cfg.use_mid_loss && (l.mid_fea != 0 || l.mid_str != 0)) st.fail("mid terms present");
  }
  for (const auto& tau : {rec.mean_tau_fea, rec.mean_tau_str})
    if (tau && (*tau < cfg.tau_min || *tau > cfg.tau_max)) st.fail("mean temperature outside range");
}

// ---------------------------------------------------------------------------
// 4-6. Seeded experiments on the standard fixture

struct Experiments {
  std::vector<StrategyRuns> partial;
  std::vector<VariantRuns> ablation;
  TrainConfig cfg;
  double partial_seconds = 0.0, ablation_seconds = 0.0;
};

Experiments run_experiments() {
  Experiments ex;
  ex.cfg.seeds = kSeeds;
  static Graph g = [] {
    Graph gg = generate_biased_sbm(standard_fixture());
    gg.splits = make_splits(gg, {}, 1);
    return gg;
  }();
  const PreparedGraph pg = prepare_graph(g, ex.cfg.standardize);

  auto t0 = Clock::now();
  ex.partial = run_partial_data(pg, ex.cfg);
  ex.partial_seconds = since(t0);

  // The partial-data runs already hold both teachers of every seed: their
  // phase streams are the ones the distillation pipeline would use.
  t0 = Clock::now();
  for (Variant v : kAblationVariants) ex.ablation.push_back({v, {}});
  for (std::size_t k = 0; k < kSeeds.size(); ++k) {
    TeacherPair teachers;
    teachers.fea = TrainedModel{ex.partial[1].runs[k].student, ex.partial[1].runs[k].record};
    teachers.str = TrainedModel{ex.partial[2].runs[k].student, ex.partial[2].runs[k].record};
    for (VariantRuns& vr : ex.ablation)
      vr.runs.push_back(run_variant_seed(pg, ex.cfg, vr.variant, kSeeds[k], &teachers));
  }
  ex.ablation_seconds = since(t0);
  return ex;
}

Outcome criterion_partial(const Experiments& ex) {
  const MeanStd full_sp = ex.partial[0].report().delta_sp();
  const double full_acc = ex.partial[0].report().acc().mean;
  bool ok = ex.partial_seconds < kPartialBudget;
  std::string detail = fmt("full-data acc %.2f sp %.2f", full_acc, full_sp.mean);
  for (std::size_t s = 1; s < 3; ++s) {
    const FairnessReport r = ex.partial[s].report();
    ok = ok && r.delta_sp().mean <= kPartialFairnessRatio * full_sp.mean && r.acc().mean < full_acc;
    detail += "; " + ex.partial[s].label + fmt(" acc %.2f sp %.2f (ratio %.2f)", r.acc().mean, r.delta_sp().mean,
                                               r.delta_sp().mean / full_sp.mean);
  }
  detail += fmt("; %.1fs", ex.partial_seconds);
  return {ok ? Outcome::Pass : Outcome::Fail, detail};
}

Outcome criterion_tradeoff(const Experiments& ex) {
  const FairnessReport van = ex.partial[0].report(), dtd = ex.ablation[0].report();
  const double ratio = dtd.delta_sp().mean / van.delta_sp().mean;
  const bool ok = ratio <= kTradeoffFairnessRatio && dtd.acc().mean >= van.acc().mean - kTradeoffAccuracySlack;
  return {ok ? Outcome::Pass : Outcome::Fail,
          fmt("FairDTD acc %.2f sp %.2f vs vanilla acc %.2f sp %.2f", dtd.acc().mean, dtd.delta_sp().mean,
              van.acc().mean, van.delta_sp().mean) +
              fmt(" (sp ratio %.2f, need <= %.2f)", ratio, kTradeoffFairnessRatio)};
}

Outcome criterion_ablation(const Experiments& ex) {
  const double full = ex.ablation[0].report().delta_sp().mean;
  bool ok = true;
  std::string detail = fmt("FairDTD sp %.2f", full);
  for (std::size_t k = 1; k < ex.ablation.size(); ++k) {
    const double sp = ex.ablation[k].report().delta_sp().mean;
    ok = ok && full <= sp + kAblationSlack;
    detail += "; " + std::string(variant_label(ex.ablation[k].variant)) + fmt(" %.2f", sp);
  }
  detail += fmt("; %.1fs", ex.ablation_seconds);
  return {ok ? Outcome::Pass : Outcome::Fail, detail};
}

// ---------------------------------------------------------------------------
// 7. CLI determinism

int run(const std::string& cmd) {
  const std::string full = cmd + " >/dev/null 2>&1";
  return std::system(full.c_str());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Relative paths of every file under `root` except the wall-time sidecar.
std::vector<std::string> listing(const fs::path& root) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().filename() != "timing.csv")
      out.push_back(fs::relative(e.path(), root).generic_string());
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t compare_trees(const fs::path& a, const fs::path& b, std::size_t& files) {
  const auto la = listing(a), lb = listing(b);
  if (la != lb) return la.size() + lb.size();
  std::size_t diffs = 0;
  for (const std::string& f : la) diffs += slurp(a / f) != slurp(b / f) ? 1 : 0;
  files += la.size();
  return diffs;
}

Outcome criterion_determinism(const std::string& cli, const fs::path& work) {
  const fs::path dir = work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string q = "\"" + cli + "\"";
  int failures = 0;
  for (const char* d : {"data_a", "data_b"}) {
    failures += run(q + " gen-data --n 300 --p-intra 0.05 --p-inter 0.01 --seed 3 -o \"" + (dir / d).string() + "\"") != 0;
  }
  {
    std::ofstream cfg(dir / "config.json");
    cfg << R"({
  "data": {"dataset": {"nodes": "data_a/nodes.csv", "edges": "data_a/edges.csv", "splits": "data_a/splits.csv"}},
  "train": {"epochs": 25, "hidden": 16, "seeds": [1, 2]}
})";
  }
  const std::string cfg = " -c \"" + (dir / "config.json").string() + "\"";
  for (const char* d : {"train_a", "train_b"})
    failures += run(q + " train" + cfg + " -o \"" + (dir / d).string() + "\"") != 0;
  for (const char* d : {"ablate_a", "ablate_b"})
    failures += run(q + " ablate" + cfg + " --seeds 1 -o \"" + (dir / d).string() + "\"") != 0;
  for (const char* d : {"eval_a.csv", "eval_b.csv"})
    failures += run(q + " evaluate" + cfg + " --checkpoint \"" + (dir / "train_a/runs/fairdtd_seed1/student").string() +
                    "\" -o \"" + (dir / d).string() + "\"") != 0;
  if (failures) return {Outcome::Fail, fmt("%.0f CLI invocations failed", failures)};

  std::size_t files = 0, diffs = 0;
  diffs += compare_trees(dir / "data_a", dir / "data_b", files);
  diffs += compare_trees(dir / "train_a", dir / "train_b", files);
  diffs += compare_trees(dir / "ablate_a", dir / "ablate_b", files);
  diffs += slurp(dir / "eval_a.csv") != slurp(dir / "eval_b.csv");
  files += 1;
  const bool has_outputs = fs::exists(dir / "train_a/metrics.csv") && fs::exists(dir / "train_a/runs/fairdtd_seed1/student.bin");
  return {diffs == 0 && has_outputs ? Outcome::Pass : Outcome::Fail,
          fmt("%.0f files compared across gen-data/train/ablate/evaluate, %.0f differ", static_cast<double>(files),
              static_cast<double>(diffs))};
}

// ---------------------------------------------------------------------------
// 8. Pokec-z reproduction when the dataset is supplied

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  return out;
}

Outcome criterion_pokec(const std::string& cli, const fs::path& work) {
  const char* cfg = std::getenv("FAIRDTD_POKEC_CONFIG");
  if (cfg == nullptr || !fs::exists(cfg)) return {Outcome::Skip, "set FAIRDTD_POKEC_CONFIG to a Pokec-z config to run"};
  const fs::path out = work / "pokec";
  if (run("\"" + cli + "\" train -c \"" + std::string(cfg) + "\" --overwrite -o \"" + out.string() + "\"") != 0)
    return {Outcome::Fail, "train command failed"};
  std::ifstream in(out / "summary.csv");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  const auto f = split_csv(line);
  if (f.size() < 6 || f[2] == "NA" || f[4] == "NA") return {Outcome::Fail, "summary row missing"};
  const double acc = std::stod(f[2]), sp = std::stod(f[4]);
  const bool ok = std::abs(acc - kPokecAcc) <= kPokecAccSlack && sp <= kPokecSpMax;
  return {ok ? Outcome::Pass : Outcome::Fail, fmt("acc %.2f (target %.2f +- %.1f), sp %.2f", acc, kPokecAcc, kPokecAccSlack, sp)};
}

std::set<int> parse_ids(const std::string& s) {
  std::set<int> out;
  for (const std::string& f : split_csv(s))
    if (!f.empty()) out.insert(std::stoi(f));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  fs::path work = fs::temp_directory_path() / "fairdtd_acceptance";
  std::set<int> documented;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--cli") cli = argv[i + 1];
    else if (flag == "--workdir") work = argv[i + 1];
    else if (flag == "--documented-failures") documented = parse_ids(argv[i + 1]);
    else {
      std::fprintf(stderr, "unknown flag %s\n", flag.c_str());
      return 2;
    }
  }
  if (cli.empty()) {
    std::fprintf(stderr, "usage: fairdtd_acceptance --cli <fairdtd> [--workdir DIR] [--documented-failures 5,6]\n");
    return 2;
  }
  fs::create_directories(work);

  const auto t0 = Clock::now();
  Report report(documented);
  report.emit(1, "gradient-correctness", criterion_gradients());
  report.emit(2, "oracle-equivalence", criterion_oracles());

  LossPropertyStats props;
  static_loss_properties(props);
  const Experiments ex = run_experiments();
  double worst_accounting = 0.0;
  for (const VariantRuns& vr : ex.ablation) {
    const DistillConfig dc = apply_variant(ex.cfg.distill, vr.variant);
    for (const SeedRun& r : vr.runs) check_record(r.record, dc, props, worst_accounting);
  }
  if (worst_accounting > kAccountingTol) props.fail("accounting identity violated");
  std::string notes;
  for (const std::string& n : props.notes) notes += "; " + n;
  report.emit(3, "loss-properties",
              {props.failures == 0 ? Outcome::Pass : Outcome::Fail,
               fmt("%.0f violations, worst per-epoch accounting gap %.1e over all ablation epochs",
                   static_cast<double>(props.failures), worst_accounting) + notes});

  report.emit(4, "partial-data", criterion_partial(ex));
  report.emit(5, "fairdtd-tradeoff", criterion_tradeoff(ex));
  report.emit(6, "ablation-sanity", criterion_ablation(ex));
  report.emit(7, "determinism", criterion_determinism(cli, work));
  report.emit(8, "pokec-z", criterion_pokec(cli, work));
  const double total = since(t0);
  report.emit(9, "end-to-end-budget",
              {total < kTotalBudget ? Outcome::Pass : Outcome::Fail, fmt("%.1fs (budget %.0fs)", total, kTotalBudget)});
  return report.blocking() == 0 ? 0 : 1;
}
