#pragma once

#include <cstdint>
#include <functional>

#include "polyrec/dense.hpp"
#include "polyrec/graph.hpp"

// Dense spectral reference implementation used to verify the polynomial
// filter path on small instances. Test-scale only; never in the
// recommendation path.
namespace polyrec::oracle {

struct SpectralDecomposition {
    Vector eigenvalues;  // ascending
    Matrix eigenvectors; // orthonormal columns
};

inline constexpr std::int64_t kDefaultSizeCap = 512;

// L~ = I - P; rejects matrices that are not symmetric to roundoff.
Matrix laplacian(const Matrix& p);
Matrix laplacian(const SimilarityGraph& graph);

SpectralDecomposition eigendecompose(const Matrix& symmetric,
                                     std::int64_t size_cap = kDefaultSizeCap);

// U diag(h(lambda_1)..h(lambda_n)) U^T x
Vector spectral_filter_apply(const SpectralDecomposition& decomposition,
                             const std::function<double(double)>& response, const Vector& x);

// U diag(h(lambda)) U^T as a matrix, for whole-filter comparisons.
Matrix spectral_filter_matrix(const SpectralDecomposition& decomposition,
                              const std::function<double(double)>& response);

// x^T L x
double smoothness(const Vector& x, const Matrix& laplacian);

}  // namespace polyrec::oracle
