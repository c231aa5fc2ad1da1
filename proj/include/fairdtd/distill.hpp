#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "fairdtd/autodiff.hpp"
#include "fairdtd/matrix.hpp"
#include "fairdtd/models.hpp"

namespace fairdtd {

/// Which side of the KL divergence holds the student distribution.
enum class KlDirection {
  StudentTeacher,  // KL(student || teacher), the default
  TeacherStudent,  // KL(teacher || student), classical distillation
};

std::string_view to_string(KlDirection d);
KlDirection parse_kl_direction(std::string_view name);

inline constexpr std::size_t kTemperatureHidden = 16;

struct DistillConfig {
  double alpha = 0.5;
  double fixed_tau = 2.0;
  double tau_min = 1.0;
  double tau_max = 5.0;
  bool use_feature_teacher = true;
  bool use_structure_teacher = true;
  bool use_mid_loss = true;
  bool use_node_temps = true;
  KlDirection kl_direction = KlDirection::StudentTeacher;

  /// True when no distillation term can be active.
  bool is_vanilla() const noexcept { return !use_feature_teacher && !use_structure_teacher; }

  /// Throws ConfigError on alpha outside [0, 1], tau_min <= 0,
  /// tau_min > tau_max or fixed_tau <= 0.
  void validate() const;
};

/// Row entropies -sum_c p ln p (0 ln 0 := 0) as an N x 1 matrix.
/// Throws DomainError on negative entries.
Matrix entropy_rows(const Matrix& probs);

/// Temperature-net input: softmax(teacher_logits) ++ entropy, N x (C + 1).
Matrix temperature_inputs(const Matrix& teacher_logits);

/// Temperature MLP (C + 1) -> 16 -> 1, Glorot init.
ModelParams init_temperature_net(std::size_t num_classes, std::uint64_t seed);

/// Per-node temperatures (N x 1) in [tau_min, tau_max]:
/// tau_min + (tau_max - tau_min) * sigmoid(net(probs ++ entropy)).
/// Differentiable with respect to the bound net. Throws ConfigError when
/// tau_min <= 0 or tau_min > tau_max.
ad::Var node_temperatures(const BoundParams& net, const Matrix& teacher_logits, double tau_min,
                          double tau_max);

/// KL between softmax(student / tau) and softmax(teacher / tau), averaged over
/// nodes. The teacher side never receives gradient.
ad::Var soft_loss(ad::Var z_student, ad::Var z_teacher, ad::Var temps,
                  KlDirection dir = KlDirection::StudentTeacher);
ad::Var soft_loss(ad::Var z_student, ad::Var z_teacher, double tau,
                  KlDirection dir = KlDirection::StudentTeacher);

/// Mean over nodes of ||normalize(r_student) - normalize(r_teacher)||^2.
/// Range [0, 4]; the teacher side never receives gradient.
ad::Var mid_loss(ad::Var r_student, ad::Var r_teacher);

ad::Var dual_loss(ad::Var soft, ad::Var mid);

/// hard + alpha * dual_fea + (1 - alpha) * dual_str. An absent dual term, or
/// one whose weight is exactly 0, is not added at all so that it cannot touch
/// any gradient. Throws ConfigError for alpha outside [0, 1].
ad::Var final_loss(ad::Var hard, std::optional<ad::Var> dual_fea, std::optional<ad::Var> dual_str,
                   double alpha);

/// Scalar loss values of one student step. Disabled terms are 0.
struct LossTerms {
  double hard = 0.0;
  double soft_fea = 0.0;
  double soft_str = 0.0;
  double mid_fea = 0.0;
  double mid_str = 0.0;
  double final = 0.0;
};

/// Frozen outputs of one teacher.
struct TeacherOutputs {
  Matrix logits;
  Matrix hidden;
};

/// Student objective on an existing tape. Temperature nets are only read when
/// node temperatures are enabled for the corresponding teacher.
struct StudentObjective {
  ad::Var loss;
  LossTerms terms;
};

StudentObjective student_objective(ad::Tape& tape, ad::Var z_student, ad::Var r_student,
                                   std::span<const int> labels, std::span<const std::uint8_t> train,
                                   const TeacherOutputs* fea, const TeacherOutputs* str,
                                   const BoundParams* temp_fea, const BoundParams* temp_str,
                                   const DistillConfig& cfg);

}  // namespace fairdtd
