#pragma once

// Independent reference checks shared by the unit tests and the acceptance
// runner. Everything here recomputes expected values from first principles
// instead of calling back into the code under test where possible.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "f2f/autodiff.hpp"
#include "f2f/image.hpp"

namespace f2f::testing {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

bool all_pass(const std::vector<Check>& checks);
std::string failures(const std::vector<Check>& checks);

// |a - b| / max(|a|, |b|, 1e-6).
double relative_error(double analytic, double numeric);

using DTensor = BasicTensor4<double>;
using DParam = BasicParameter<double>;
using DTape = BasicTape<double>;
using DVar = BasicVar<double>;

// Builds a scalar loss from leaves created for `inputs` (same order).
using LossBuilder = std::function<DVar(DTape&, const std::vector<DVar>&)>;

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t entries = 0;
};

// Compares backpropagated gradients of every input entry and every parameter
// value entry against central differences with step h.
GradCheck check_gradients(const LossBuilder& build, std::vector<DTensor> inputs, const std::vector<DParam*>& params,
                          double h = 1e-4);

DTensor random_tensor(DTensor::Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0);
// Uniform values with |x| >= margin (keeps ReLU and |.| away from their kinks).
DTensor random_away_from_zero(DTensor::Shape shape, std::uint64_t seed, double margin);

struct OperatorGradients {
  std::string op;
  int instances = 0;
  double max_rel_error = 0.0;
};

// Finite-difference checks on `instances` random small problems per
// differentiable operator.
std::vector<OperatorGradients> gradient_suite(int instances, std::uint64_t seed);

// Mean endpoint error over the central 80% of the domain.
double central_epe(const FlowField& flow, double u, double v);

struct RegistrationResult {
  double epe_clean = 0.0;
  double epe_noisy = 0.0;
};

// Periodic blurred-noise texture translated by (2, 1) px, with and without
// independent AWGN 25/255 on both frames.
RegistrationResult registration_suite(int size = 96, std::uint64_t seed = 7);

std::vector<Check> warp_suite();
std::vector<Check> noise_suite(std::uint64_t seed = 2024);

}  // namespace f2f::testing
