#pragma once

// Central finite-difference check of the analytic gradients of the joint
// loss on a tiny random model and batch.

#include <cstdint>
#include <string>
#include <vector>

#include "sbelkit/model.hpp"

namespace sbelkit::model {

struct GradcheckOptions {
  ModelShape shape{.vocab_size = 24, .dim = 8, .blocks = 1, .ffn_mult = 4, .max_seq_len = 16};
  std::size_t batch = 3;
  std::size_t seq_len = 7;
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor of the relative error, so entries whose gradient is
  // at rounding level are compared absolutely.
  double floor = 1e-6;
  std::uint64_t seed = 0;
  FunctionWeights weights = default_function_weights();
  bool mask_function_loss_on_negative = false;
  LossTerms terms = LossTerms::joint();
  // Feed random precomputed encodings and check the head parameters only.
  bool heads_only = false;
  // Negative control: perturb one analytic gradient entry before comparing.
  bool corrupt_gradient = false;
};

struct TensorCheck {
  std::string name;
  std::size_t entries = 0;
  double max_rel_error = 0.0;
};

struct GradcheckReport {
  std::vector<TensorCheck> tensors;
  double max_rel_error = 0.0;
  std::string worst_tensor;
  double loss = 0.0;
  bool passed = false;
};

double relative_error(double analytic, double numeric, double floor);

GradcheckReport gradcheck(const GradcheckOptions& opt);

}  // namespace sbelkit::model
