#include "fairdtd/distill.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "fairdtd/error.hpp"
#include "fairdtd/keyvalue.hpp"
#include "fairdtd/ops.hpp"

namespace fairdtd {

std::string_view to_string(KlDirection d) {
  return d == KlDirection::StudentTeacher ? "student-teacher" : "teacher-student";
}

KlDirection parse_kl_direction(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "student-teacher") return KlDirection::StudentTeacher;
  if (lower == "teacher-student") return KlDirection::TeacherStudent;
  throw ConfigError("unknown KL direction '" + std::string(name) +
                    "' (expected student-teacher or teacher-student)");
}

void DistillConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1], got " + format_double(alpha));
  if (!(tau_min > 0.0)) throw ConfigError("tau_min must be > 0, got " + format_double(tau_min));
  if (!(tau_min <= tau_max) || !std::isfinite(tau_max)) {
    throw ConfigError("need tau_min <= tau_max, got [" + format_double(tau_min) + ", " +
                      format_double(tau_max) + "]");
  }
  if (!(fixed_tau > 0.0) || !std::isfinite(fixed_tau)) {
    throw ConfigError("fixed_tau must be a positive finite number, got " + format_double(fixed_tau));
  }
}

Matrix entropy_rows(const Matrix& probs) {
  Matrix out(probs.rows(), 1);
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    double h = 0.0;
    for (double p : probs.row(i)) {
      if (p < 0.0 || !std::isfinite(p)) throw DomainError("entropy_rows: entry outside [0, 1]");
      if (p > 0.0) h -= p * std::log(p);
    }
    out(i, 0) = h;
  }
  return out;
}

Matrix temperature_inputs(const Matrix& teacher_logits) {
  ad::Tape tape;
  const Matrix probs = ad::softmax_rows(tape.constant(teacher_logits)).value();
  const Matrix ent = entropy_rows(probs);
  const std::size_t c = probs.cols();
  Matrix in(probs.rows(), c + 1);
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    for (std::size_t k = 0; k < c; ++k) in(i, k) = probs(i, k);
    in(i, c) = ent(i, 0);
  }
  return in;
}

ModelParams init_temperature_net(std::size_t num_classes, std::uint64_t seed) {
  return init_params(EncoderKind::Mlp, num_classes + 1, kTemperatureHidden, 1, seed);
}

ad::Var node_temperatures(const BoundParams& net, const Matrix& teacher_logits, double tau_min,
                          double tau_max) {
  if (!(tau_min > 0.0)) throw ConfigError("tau_min must be > 0, got " + format_double(tau_min));
  if (!(tau_min <= tau_max)) throw ConfigError("tau_min must not exceed tau_max");
  ad::Tape& tape = *net.w1.tape();
  const ad::Var in = tape.constant(temperature_inputs(teacher_logits));
  const ad::Var raw = forward_feature_teacher(net, in).logits;
  return ad::add_scalar(ad::scale(ad::sigmoid(raw), tau_max - tau_min), tau_min);
}

namespace {

ad::Var directed_kl(ad::Var p_student, ad::Var p_teacher, KlDirection dir) {
  return dir == KlDirection::StudentTeacher ? ad::kl_div_rows(p_student, p_teacher)
                                            : ad::kl_div_rows(p_teacher, p_student);
}

void require_same_shape(ad::Var a, ad::Var b, const char* what) {
  if (!a.value().same_shape(b.value())) {
    throw DimensionError(std::string(what) + ": student " + a.value().shape_string() + " vs teacher " +
                         b.value().shape_string());
  }
}

}  // namespace

ad::Var soft_loss(ad::Var z_student, ad::Var z_teacher, ad::Var temps, KlDirection dir) {
  require_same_shape(z_student, z_teacher, "soft_loss");
  const ad::Var teacher = ad::detach(z_teacher);
  return directed_kl(ad::softmax_rows(z_student, temps), ad::softmax_rows(teacher, temps), dir);
}

ad::Var soft_loss(ad::Var z_student, ad::Var z_teacher, double tau, KlDirection dir) {
  require_same_shape(z_student, z_teacher, "soft_loss");
  const ad::Var teacher = ad::detach(z_teacher);
  return directed_kl(ad::softmax_rows(z_student, tau), ad::softmax_rows(teacher, tau), dir);
}

ad::Var mid_loss(ad::Var r_student, ad::Var r_teacher) {
  require_same_shape(r_student, r_teacher, "mid_loss");
  if (r_student.rows() == 0) throw EmptySelectionError("mid_loss on zero rows");
  const ad::Var diff =
      ad::sub(ad::l2_normalize_rows(r_student), ad::l2_normalize_rows(ad::detach(r_teacher)));
  return ad::scale(ad::sum(ad::square(diff)), 1.0 / static_cast<double>(r_student.rows()));
}

ad::Var dual_loss(ad::Var soft, ad::Var mid) { return ad::add(soft, mid); }

ad::Var final_loss(ad::Var hard, std::optional<ad::Var> dual_fea, std::optional<ad::Var> dual_str,
                   double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1], got " + format_double(alpha));
  ad::Var total = hard;
  if (dual_fea && alpha != 0.0) total = ad::add(total, ad::scale(*dual_fea, alpha));
  if (dual_str && alpha != 1.0) total = ad::add(total, ad::scale(*dual_str, 1.0 - alpha));
  return total;
}

StudentObjective student_objective(ad::Tape& tape, ad::Var z_student, ad::Var r_student,
                                   std::span<const int> labels, std::span<const std::uint8_t> train,
                                   const TeacherOutputs* fea, const TeacherOutputs* str,
                                   const BoundParams* temp_fea, const BoundParams* temp_str,
                                   const DistillConfig& cfg) {
  cfg.validate();
  StudentObjective out;
  const ad::Var hard = ad::cross_entropy_masked(z_student, labels, train);
  out.terms.hard = hard.scalar();

  struct Dual {
    std::optional<ad::Var> loss;
    double soft = 0.0;
    double mid = 0.0;
  };
  auto teacher_terms = [&](bool enabled, const TeacherOutputs* t, const BoundParams* net,
                           const char* role) {
    Dual d;
    if (!enabled) return d;
    if (t == nullptr) throw DependencyError(std::string(role) + " teacher enabled but not supplied");
    const ad::Var z_t = tape.constant(t->logits);
    ad::Var soft;
    if (cfg.use_node_temps) {
      if (net == nullptr) throw DependencyError(std::string(role) + " temperature net not supplied");
      soft = soft_loss(z_student, z_t, node_temperatures(*net, t->logits, cfg.tau_min, cfg.tau_max),
                       cfg.kl_direction);
    } else {
      soft = soft_loss(z_student, z_t, cfg.fixed_tau, cfg.kl_direction);
    }
    d.soft = soft.scalar();
    if (cfg.use_mid_loss) {
      const ad::Var mid = mid_loss(r_student, tape.constant(t->hidden));
      d.mid = mid.scalar();
      d.loss = dual_loss(soft, mid);
    } else {
      d.loss = soft;
    }
    return d;
  };

  const Dual f = teacher_terms(cfg.use_feature_teacher, fea, temp_fea, "feature");
  const Dual s = teacher_terms(cfg.use_structure_teacher, str, temp_str, "structure");
  out.terms.soft_fea = f.soft;
  out.terms.mid_fea = f.mid;
  out.terms.soft_str = s.soft;
  out.terms.mid_str = s.mid;
  out.loss = final_loss(hard, f.loss, s.loss, cfg.alpha);
  out.terms.final = out.loss.scalar();
  return out;
}

}  // namespace fairdtd
