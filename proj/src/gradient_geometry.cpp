#include "tagcos/gradient_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tagcos/error.hpp"
#include "tagcos/parallel.hpp"
#include "tagcos/random.hpp"

namespace tagcos {

void AdamState::validate() const {
    require(m.size() == v.size(), ErrorKind::length_mismatch, "adam m/v lengths differ");
    require(beta1 > 0.0 && beta1 < 1.0, ErrorKind::invalid_argument, "beta1 must lie in (0,1)");
    require(beta2 > 0.0 && beta2 < 1.0, ErrorKind::invalid_argument, "beta2 must lie in (0,1)");
    require(eps > 0.0, ErrorKind::invalid_argument, "eps must be positive");
    require(step >= 1, ErrorKind::invalid_argument, "step must be >= 1");
    for (std::size_t i = 0; i < v.size(); ++i) {
        require(std::isfinite(m[i]) && std::isfinite(v[i]), ErrorKind::non_finite, "adam moments");
        require(v[i] >= 0.0, ErrorKind::invalid_argument, "second moment must be nonnegative");
    }
}

std::vector<double> adam_direction(std::span<const double> raw_grad, const AdamState& state) {
    state.validate();
    require(raw_grad.size() == state.m.size(), ErrorKind::length_mismatch,
            "gradient length " + std::to_string(raw_grad.size()) + " vs state " +
                std::to_string(state.m.size()));
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);

    std::vector<double> out(raw_grad.size());
    for (std::size_t i = 0; i < raw_grad.size(); ++i) {
        const double g = raw_grad[i];
        require(std::isfinite(g), ErrorKind::non_finite, "raw gradient entry " + std::to_string(i));
        const double m_next = (state.beta1 * state.m[i] + (1.0 - state.beta1) * g) / c1;
        const double v_next = (state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g) / c2;
        out[i] = m_next / (std::sqrt(v_next) + state.eps);
    }
    return out;
}

void ProjectionSpec::validate() const {
    require(source_dim >= 1 && target_dim >= 1, ErrorKind::invalid_argument, "projection dims must be >= 1");
    require(target_dim <= source_dim, ErrorKind::invalid_argument, "target_dim exceeds source_dim");
    require(!identity_signs || source_dim == target_dim, ErrorKind::invalid_argument,
            "identity projection requires source_dim == target_dim");
}

// Each hash yields the signs of 64 consecutive columns of one row.
int rademacher_sign(const ProjectionSpec& spec, std::uint64_t row, std::uint64_t col) noexcept {
    const std::uint64_t bits = counter_hash(spec.seed, row, col / 64);
    return ((bits >> (col % 64)) & 1u) ? -1 : 1;
}

namespace {

template <typename T>
std::vector<double> project_impl(std::span<const T> grad, const ProjectionSpec& spec) {
    spec.validate();
    require(grad.size() == spec.source_dim, ErrorKind::length_mismatch,
            "gradient length " + std::to_string(grad.size()) + " vs source_dim " +
                std::to_string(spec.source_dim));
    const std::size_t d = spec.target_dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<double> out(d, 0.0);

    if (spec.identity_signs) {
        for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<double>(grad[j]) * scale;
        return out;
    }

    const std::size_t blocks = (d + 63) / 64;
    parallel_for(
        blocks,
        [&](std::size_t b0, std::size_t b1) {
            double acc[64];
            for (std::size_t block = b0; block < b1; ++block) {
                const std::size_t col0 = block * 64;
                const std::size_t width = std::min<std::size_t>(64, d - col0);
                std::fill(acc, acc + 64, 0.0);
                for (std::size_t i = 0; i < grad.size(); ++i) {
                    const double g = static_cast<double>(grad[i]);
                    if (g == 0.0) continue;
                    const std::uint64_t bits = counter_hash(spec.seed, i, block);
                    for (std::size_t b = 0; b < 64; ++b) acc[b] += ((bits >> b) & 1u) ? -g : g;
                }
                for (std::size_t b = 0; b < width; ++b) out[col0 + b] = acc[b] * scale;
            }
        },
        1);
    return out;
}

}  // namespace

std::vector<double> rademacher_project(std::span<const double> grad, const ProjectionSpec& spec) {
    return project_impl(grad, spec);
}

std::vector<double> rademacher_project(std::span<const float> grad, const ProjectionSpec& spec) {
    return project_impl(grad, spec);
}

GradientFeatureMatrix combine_checkpoints(std::span<const GradientFeatureMatrix> per_checkpoint) {
    require(!per_checkpoint.empty(), ErrorKind::invalid_argument, "no checkpoints to combine");
    const auto& first = per_checkpoint.front();
    for (const auto& m : per_checkpoint) {
        require(m.n_samples() == first.n_samples() && m.dim() == first.dim(), ErrorKind::dim_mismatch,
                "checkpoint feature shapes differ");
        m.validate();
    }
    if (per_checkpoint.size() == 1) return first;

    const std::size_t total = first.n_samples() * first.dim();
    const double count = static_cast<double>(per_checkpoint.size());
    std::vector<float> data(total);
    for (std::size_t i = 0; i < total; ++i) {
        double sum = 0.0;
        for (const auto& m : per_checkpoint) sum += static_cast<double>(m.data()[i]);
        data[i] = static_cast<float>(sum / count);
    }
    return GradientFeatureMatrix(first.n_samples(), first.dim(), std::move(data),
                                 static_cast<std::uint32_t>(per_checkpoint.size()));
}

}  // namespace tagcos
