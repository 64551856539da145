#pragma once

#include "tvsh/core.hpp"
#include "tvsh/tvs.hpp"

#include <cstdint>
#include <vector>

namespace tvsh::datagen {

struct SyntheticSpec {
    Index N = 300;
    int K = 4;
    Index D = 30;
    Index d = 3;
    Index L_min = 50;
    double sigma = 0.01;
    bool orthogonal = true;
    std::uint64_t rng_seed = 0;

    /// Throws InvalidInput when K * L_min > N, or d * K > D for orthogonal bases.
    void validate() const;
};

/// N=300, K=4, D=30, d=3, L_min=50, sigma=0.01, orthogonal.
SyntheticSpec preset_s1(std::uint64_t seed = 0);

struct SyntheticInstance {
    /// Raw D x N columns; FeatureSequence normalization is left to the caller.
    Matrix X;
    Labels labels;
    tvs::AdjacencySequence eq;
    /// D x d orthonormal basis per segment.
    std::vector<Matrix> bases;
    std::vector<Index> lengths;
};

/// Segment g has length L_min plus a multinomial share of the remainder and
/// columns B_g c + eps with c uniform on [-1, 1]^d and eps ~ N(0, sigma^2 I).
SyntheticInstance generate(const SyntheticSpec& spec);

/// 1 - sigma_max(B_g^T B_h)^2 for one pair of orthonormal bases.
double subspace_distance2(const Matrix& Bg, const Matrix& Bh);
/// Minimum pairwise subspace_distance2; 1 when fewer than two bases exist.
double separation(const std::vector<Matrix>& bases);

}  // namespace tvsh::datagen
