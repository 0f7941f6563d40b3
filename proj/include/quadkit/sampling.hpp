#pragma once

#include "quadkit/error.hpp"
#include "quadkit/linalg.hpp"
#include "quadkit/orthopoly.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quadkit {

/// Counter-based SplitMix64: draw number c of stream `seed` is
/// mix(seed + (c + 1) * 0x9E3779B97F4A7C15). Any draw can be produced
/// independently of the others.
class CounterRng {
public:
    static constexpr std::string_view algorithm = "splitmix64-counter";

    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t bits(std::uint64_t counter) const
    {
        std::uint64_t z = seed_ + (counter + 1) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform on the open interval (0, 1).
    double uniform(std::uint64_t counter) const
    {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

/// Standard normal quantile: Acklam's rational approximation polished by
/// one Halley step.
inline double normal_quantile(double p)
{
    require(p > 0.0 && p < 1.0, "normal_quantile: probability must lie in (0, 1)");
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double low = 0.02425;
    double x;
    if (p < low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

enum class SamplingStrategy { monte_carlo, christoffel };

inline std::string_view to_string(SamplingStrategy s)
{
    return s == SamplingStrategy::monte_carlo ? "monte_carlo" : "christoffel";
}

inline SamplingStrategy parse_sampling_strategy(std::string_view s)
{
    if (s == "monte_carlo" || s == "monte-carlo" || s == "mc") return SamplingStrategy::monte_carlo;
    if (s == "christoffel") return SamplingStrategy::christoffel;
    throw InvalidArgument("unknown sampling strategy '" + std::string(s) + "'");
}

struct SampleSet {
    Matrix points; // m x d
    SamplingStrategy strategy = SamplingStrategy::monte_carlo;
    std::uint64_t seed = 0;
    std::vector<Distribution> densities;
    std::string algorithm{CounterRng::algorithm};

    Index size() const { return points.rows(); }
    int dim() const { return static_cast<int>(points.cols()); }
};

namespace detail {

// Coordinate (i, j) of an m x d sample uses draw number i * d + j.
template <class Transform>
Matrix draw_points(std::uint64_t seed, Index m, int d, Transform&& transform)
{
    const CounterRng rng(seed);
    Matrix out(m, d);
    for (Index i = 0; i < m; ++i) {
        for (int j = 0; j < d; ++j) {
            const auto counter = static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(d) +
                                 static_cast<std::uint64_t>(j);
            out(i, j) = transform(j, rng.uniform(counter));
        }
    }
    return out;
}

} // namespace detail

/// i.i.d. draws from the product density by inverse-CDF transforms.
inline SampleSet monte_carlo_sample(std::span<const Distribution> densities, Index m, std::uint64_t seed)
{
    require(m >= 1, "monte_carlo_sample: m must be positive");
    require(!densities.empty(), "monte_carlo_sample: no densities");
    for (const auto& density : densities) {
        if (density.family == Family::jacobi || density.family == Family::custom) {
            throw InvalidArgument("monte_carlo_sample: unsupported density family '" +
                                  std::string(to_string(density.family)) + "'");
        }
    }
    SampleSet s;
    s.strategy = SamplingStrategy::monte_carlo;
    s.seed = seed;
    s.densities.assign(densities.begin(), densities.end());
    s.points = detail::draw_points(seed, m, static_cast<int>(densities.size()), [&](int j, double u) {
        switch (densities[static_cast<std::size_t>(j)].family) {
        case Family::legendre: return 2.0 * u - 1.0;
        case Family::chebyshev1: return std::cos(std::numbers::pi * u);
        default: return normal_quantile(u);
        }
    });
    return s;
}

inline SampleSet monte_carlo_sample(const Distribution& density, int d, Index m, std::uint64_t seed)
{
    const std::vector<Distribution> all(static_cast<std::size_t>(d), density);
    return monte_carlo_sample(all, m, seed);
}

/// Arcsine (Chebyshev) draws on [-1, 1]^d for the uniform density.
inline SampleSet christoffel_sample(int d, Index m, std::uint64_t seed,
                                    const Distribution& density = Distribution{Family::legendre})
{
    require(d >= 1, "christoffel_sample: dimension must be positive");
    require(m >= 1, "christoffel_sample: m must be positive");
    if (density.family != Family::legendre) {
        throw InvalidArgument("christoffel_sample: only the uniform density is supported");
    }
    SampleSet s;
    s.strategy = SamplingStrategy::christoffel;
    s.seed = seed;
    s.densities.assign(static_cast<std::size_t>(d), density);
    s.points = detail::draw_points(seed, m, d, [](int, double u) { return std::cos(std::numbers::pi * u); });
    return s;
}

/// Christoffel-type weights w_i proportional to (n/m) / K_n(zeta_i), where
/// K_n = sum_j psi_j^2 is the diagonal of the projection kernel.
inline Vector sample_weights(const Matrix& points, const MultiIndexSet& basis,
                             std::span<const RecurrenceTable> recurrences)
{
    require(points.rows() >= 1, "sample_weights: no points");
    const Matrix psi = evaluate_basis(basis, recurrences, points);
    const double n = static_cast<double>(basis.size());
    const double m = static_cast<double>(points.rows());
    Vector w(points.rows());
    for (Index i = 0; i < points.rows(); ++i) {
        const double kernel = psi.row(i).squaredNorm();
        if (!(kernel > 1e-300)) {
            throw NumericalError("sample_weights: kernel vanishes at point " + std::to_string(i));
        }
        w(i) = (n / m) / kernel;
    }
    return w / w.sum();
}

} // namespace quadkit
