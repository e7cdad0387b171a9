#include "polyrec/filters.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "polyrec/util.hpp"

namespace polyrec {

FilterKind parse_filter_kind(const std::string& name) {
    if (name == "linear") return FilterKind::linear;
    if (name == "second_order") return FilterKind::second_order;
    if (name == "ideal_approx") return FilterKind::ideal_approx;
    if (name == "custom") return FilterKind::custom;
    throw ConfigError("unknown filter kind: " + name);
}

std::string filter_kind_name(FilterKind kind) {
    switch (kind) {
        case FilterKind::linear: return "linear";
        case FilterKind::second_order: return "second_order";
        case FilterKind::ideal_approx: return "ideal_approx";
        case FilterKind::custom: return "custom";
    }
    return "custom";
}

void FilterSpec::validate() const {
    if (coeffs.empty()) {
        throw ConfigError("filter needs at least one coefficient");
    }
    for (const double a : coeffs) {
        if (!std::isfinite(a)) {
            throw ConfigError("filter coefficients must be finite");
        }
    }
    if (kind == FilterKind::ideal_approx) {
        if (!(tau > 0.0 && tau < 1.0)) {
            throw ConfigError("ideal_approx cutoff tau must lie in (0,1)");
        }
        if (beta < 0.0) {
            throw ConfigError("ideal_approx blend beta must be nonnegative");
        }
    }
}

std::vector<double> FilterSpec::effective_coeffs() const {
    if (kind != FilterKind::ideal_approx) {
        return coeffs;
    }
    std::vector<double> blended(std::max<std::size_t>(coeffs.size(), 1), 0.0);
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
        blended[k] = beta * coeffs[k];
    }
    blended[0] += 1.0;  // the linear LPF the approximation is blended with
    while (blended.size() > 1 && blended.back() == 0.0) {
        blended.pop_back();  // beta = 0 degenerates to the plain linear filter
    }
    return blended;
}

double response_at(std::span<const double> coeffs, double lambda) {
    const double x = 1.0 - lambda;
    double acc = 0.0;
    for (std::size_t k = coeffs.size(); k > 0; --k) {
        acc = (acc + coeffs[k - 1]) * x;
    }
    return acc;
}

ResponseCurve frequency_response(const FilterSpec& filter, std::span<const double> lambdas) {
    const auto coeffs = filter.effective_coeffs();
    ResponseCurve curve;
    curve.lambdas.assign(lambdas.begin(), lambdas.end());
    curve.gains.resize(lambdas.size());
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
        curve.gains[j] = response_at(coeffs, lambdas[j]);
    }
    return curve;
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t points) {
    if (points < 2 || !(hi > lo)) {
        throw ConfigError("grid needs at least two points with hi > lo");
    }
    std::vector<double> grid(points);
    const double step = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t j = 0; j < points; ++j) {
        grid[j] = lo + step * static_cast<double>(j);
    }
    grid.back() = hi;
    return grid;
}

FilterSpec predefined_filter(FilterKind kind, double tau, double beta, double fit_grid_max) {
    FilterSpec f;
    f.kind = kind;
    switch (kind) {
        case FilterKind::linear:
            f.coeffs = {1.0};
            break;
        case FilterKind::second_order:
            f.coeffs = {2.0, -1.0};
            break;
        case FilterKind::ideal_approx: {
            f.tau = tau;
            f.beta = beta;
            if (!(tau > 0.0 && tau < 1.0)) {
                throw ConfigError("ideal_approx cutoff tau must lie in (0,1)");
            }
            if (beta < 0.0) {
                throw ConfigError("ideal_approx blend beta must be nonnegative");
            }
            if (!(fit_grid_max > tau)) {
                throw ConfigError("fit grid must extend beyond tau");
            }
            const auto grid = uniform_grid(0.0, fit_grid_max, 1001);
            f.coeffs = fit_ideal_lpf(tau, 3, grid).coeffs;
            break;
        }
        case FilterKind::custom:
            throw ConfigError("custom filters take explicit coefficients");
    }
    f.validate();
    return f;
}

FilterSpec custom_filter(std::vector<double> coeffs) {
    FilterSpec f;
    f.kind = FilterKind::custom;
    f.coeffs = std::move(coeffs);
    f.validate();
    return f;
}

FitResult fit_ideal_lpf(const std::function<double(double)>& target, int order,
                        std::span<const double> grid, std::span<const double> weights) {
    if (order < 1) {
        throw ConfigError("fit order must be >= 1");
    }
    std::vector<double> default_grid;
    if (grid.empty()) {
        default_grid = uniform_grid(0.0, 1.0, 1001);
        grid = default_grid;
    }
    if (!weights.empty() && weights.size() != grid.size()) {
        throw ConfigError("weights must match the grid length");
    }

    const auto m = grid.size();
    const auto n = static_cast<std::size_t>(order);

    // Normal equations G a = b with basis phi_k(lambda) = (1-lambda)^k.
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(order, order);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(order);
    std::vector<double> phi(n);
    double weight_sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double w = weights.empty() ? 1.0 : weights[j];
        if (w < 0.0) {
            throw ConfigError("fit weights must be nonnegative");
        }
        const double x = 1.0 - grid[j];
        double pk = 1.0;
        for (std::size_t k = 0; k < n; ++k) {
            pk *= x;
            phi[k] = pk;
        }
        const double y = target(grid[j]);
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a; b < n; ++b) {
                gram(a, b) += w * phi[a] * phi[b];
            }
            rhs(a) += w * phi[a] * y;
        }
        weight_sum += w;
    }
    if (weight_sum <= 0.0) {
        throw FitError("all fit weights are zero");
    }
    for (int a = 0; a < order; ++a) {
        for (int b = 0; b < a; ++b) {
            gram(a, b) = gram(b, a);
        }
    }

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    if (lu.rank() < order) {
        throw FitError("singular normal matrix: fit grid cannot resolve order " +
                       std::to_string(order));
    }
    const Eigen::VectorXd a = lu.solve(rhs);

    double sq = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double w = weights.empty() ? 1.0 : weights[j];
        const double r = response_at({a.data(), n}, grid[j]) - target(grid[j]);
        sq += w * r * r;
    }

    FitResult result;
    result.coeffs.assign(a.data(), a.data() + order);
    result.residual_rms = std::sqrt(sq / weight_sum);
    return result;
}

FitResult fit_ideal_lpf(double tau, int order, std::span<const double> grid,
                        std::span<const double> weights) {
    return fit_ideal_lpf([tau](double lambda) { return lambda <= tau ? 1.0 : 0.0; }, order,
                         grid, weights);
}

FilterSpec load_filter_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open filter file: " + path.string());
    }
    FilterSpec f;
    f.kind = FilterKind::custom;
    std::string line;
    bool have_coeffs = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream kv(line);
        std::string key;
        kv >> key;
        if (key == "kind") {
            std::string value;
            kv >> value;
            f.kind = parse_filter_kind(value);
        } else if (key == "tau") {
            kv >> f.tau;
        } else if (key == "beta") {
            kv >> f.beta;
        } else if (key == "coeffs") {
            std::string rest;
            std::getline(kv, rest);
            f.coeffs.clear();
            std::stringstream parts(rest);
            std::string piece;
            while (std::getline(parts, piece, ',')) {
                if (piece.find_first_not_of(" \t") == std::string::npos) continue;
                try {
                    f.coeffs.push_back(std::stod(piece));
                } catch (const std::exception&) {
                    throw DataError("malformed coefficient '" + piece +
                                    "' in filter file: " + path.string());
                }
            }
            have_coeffs = true;
        }
        if (kv.fail() && key != "coeffs") {
            throw DataError("malformed value for '" + key + "' in filter file: " + path.string());
        }
    }
    if (!have_coeffs) {
        throw DataError("filter file has no coeffs entry: " + path.string());
    }
    f.validate();
    return f;
}

void save_filter_file(const FilterSpec& filter, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write filter file: " + path.string());
    }
    out << "kind " << filter_kind_name(filter.kind) << '\n';
    if (filter.kind == FilterKind::ideal_approx) {
        out << "tau " << format_double(filter.tau) << '\n';
        out << "beta " << format_double(filter.beta) << '\n';
    }
    out << "coeffs ";
    for (std::size_t k = 0; k < filter.coeffs.size(); ++k) {
        if (k > 0) out << ",";
        out << format_double(filter.coeffs[k]);
    }
    out << '\n';
}

}  // namespace polyrec
