#pragma once

#include "membrane/types.hpp"

#include <Eigen/Core>
#include <cmath>
#include <numbers>
#include <random>

namespace testing_util {

// Small hand-rolled generators on top of a seeded engine.
struct Gen {
    std::mt19937_64 rng;
    explicit Gen(unsigned long long seed) : rng(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

    membrane::Sym2d sym2(double scale = 1.0)
    {
        return membrane::Sym2d(scale * normal(), scale * normal(), scale * normal());
    }
    membrane::Vec2d vec2(double scale = 1.0) { return membrane::Vec2d(scale * normal(), scale * normal()); }

    // Positive semi-definite 2x2 tensor, occasionally singular.
    membrane::Sym2d psd2(double scale = 1.0)
    {
        const double phi = uniform(0.0, std::numbers::pi);
        const membrane::Vec2d e(std::cos(phi), std::sin(phi));
        const membrane::Vec2d f(-e(1), e(0));
        const double a = scale * std::abs(normal());
        const double b = integer(0, 4) == 0 ? 0.0 : scale * std::abs(normal());
        return a * membrane::outer(e) + b * membrane::outer(f);
    }
};

inline double rel_err(double a, double b)
{
    return std::abs(a - b) / std::max(1e-300, std::max(std::abs(a), std::abs(b)));
}

} // namespace testing_util
