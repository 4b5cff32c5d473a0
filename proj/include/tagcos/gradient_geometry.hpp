#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tagcos/feature_store.hpp"

namespace tagcos {

/// Optimizer state at step t: moments m, v and the Adam hyperparameters.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

/// Bias-corrected Adam update direction for one raw gradient:
///   m' = (b1 m + (1-b1) g) / (1 - b1^t)
///   v' = (b2 v + (1-b2) g^2) / (1 - b2^t)
///   out = m' / (sqrt(v') + eps)
/// The learning rate is a constant factor and is not applied.
std::vector<double> adam_direction(std::span<const double> raw_grad, const AdamState& state);

struct ProjectionSpec {
    std::uint64_t source_dim = 0;
    std::uint64_t target_dim = 0;
    std::uint64_t seed = 0;
    // Test hook: with source_dim == target_dim, use the identity in place of
    // the random sign matrix (output is then grad / sqrt(d)).
    bool identity_signs = false;

    void validate() const;
};

/// Sign of entry (row, col) of the implicit P x d Rademacher matrix.
int rademacher_sign(const ProjectionSpec& spec, std::uint64_t row, std::uint64_t col) noexcept;

/// (1/sqrt(d)) * Pi^T grad, with Pi regenerated on the fly from the spec's
/// seed. Parallel over output coordinates; bit-identical for any thread count.
std::vector<double> rademacher_project(std::span<const double> grad, const ProjectionSpec& spec);
std::vector<double> rademacher_project(std::span<const float> grad, const ProjectionSpec& spec);

/// Elementwise mean of per-checkpoint feature matrices (accumulated in double).
GradientFeatureMatrix combine_checkpoints(std::span<const GradientFeatureMatrix> per_checkpoint);

}  // namespace tagcos
