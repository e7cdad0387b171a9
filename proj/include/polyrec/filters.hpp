#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "polyrec/errors.hpp"

namespace polyrec {

enum class FilterKind { linear, second_order, ideal_approx, custom };

FilterKind parse_filter_kind(const std::string& name);
std::string filter_kind_name(FilterKind kind);

// Rank-deficient fit grids and other unusable fit setups.
class FitError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Polynomial low-pass filter sum_{k=1..K} a_k P^k with frequency response
// h(lambda) = sum a_k (1-lambda)^k. No constant term: k starts at 1.
struct FilterSpec {
    FilterKind kind = FilterKind::linear;
    std::vector<double> coeffs;  // a_1..a_K
    double tau = 0.0;            // ideal_approx only
    double beta = 0.0;           // ideal_approx only: P + beta * f_tau(P)

    std::size_t order() const { return coeffs.size(); }

    // Coefficients of the polynomial actually applied to P. For ideal_approx
    // the linear blend is folded in: b_1 = 1 + beta*a_1, b_k = beta*a_k.
    std::vector<double> effective_coeffs() const;

    void validate() const;
};

struct ResponseCurve {
    std::vector<double> lambdas;
    std::vector<double> gains;
};

struct FitResult {
    std::vector<double> coeffs;
    double residual_rms = 0.0;
};

// h(lambda) = sum_k coeffs[k-1] * (1-lambda)^k
double response_at(std::span<const double> coeffs, double lambda);

// Gains on the given grid; ideal_approx reports the blended response.
ResponseCurve frequency_response(const FilterSpec& filter, std::span<const double> lambdas);

std::vector<double> uniform_grid(double lo, double hi, std::size_t points);

// linear -> [1]; second_order -> [2,-1]; ideal_approx -> order-3 least-squares
// fit of the step 1[lambda<=tau] with the blend weight beta recorded.
// fit_grid_max widens the fit grid beyond [0,1] for graphs whose spectrum
// exceeds it (pair with rescaling or an empirical spectral range).
FilterSpec predefined_filter(FilterKind kind, double tau = 0.1, double beta = 0.3,
                             double fit_grid_max = 1.0);

FilterSpec custom_filter(std::vector<double> coeffs);

// Solver hook: maps (grid, target samples, weights, order) to coefficients of
// sum a_k (1-lambda)^k. When empty, the default linear least-squares solve of
// the order x order normal equations is used; a nonlinear optimizer can be
// swapped in here.
using FitSolver = std::function<std::vector<double>(
    std::span<const double> grid, std::span<const double> target,
    std::span<const double> weights, int order)>;

// Weighted least squares of sum a_k (1-lambda)^k against an arbitrary target
// response. Default grid: 1001 uniform points on [0,1]; default weights:
// uniform. Reports the weighted residual RMS of the returned coefficients.
FitResult fit_ideal_lpf(const std::function<double(double)>& target, int order,
                        std::span<const double> grid = {},
                        std::span<const double> weights = {},
                        const FitSolver& solver = {});

// Target 1[lambda<=tau], the ideal low-pass step with cutoff tau.
FitResult fit_ideal_lpf(double tau, int order, std::span<const double> grid = {},
                        std::span<const double> weights = {},
                        const FitSolver& solver = {});

// Plain-text key-value filter files (kind, tau, beta, coeffs).
FilterSpec load_filter_file(const std::filesystem::path& path);
void save_filter_file(const FilterSpec& filter, const std::filesystem::path& path);

}  // namespace polyrec
