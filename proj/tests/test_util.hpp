#pragma once

#include <random>

#include "fits3/linalg.hpp"

namespace fits3::test {

inline DenseMatrix random_matrix(std::size_t m, std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> N;
    DenseMatrix A(m, n);
    for (double& e : A.data()) e = N(rng);
    return A;
}

inline Vector random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> N;
    Vector v(n);
    for (double& e : v) e = scale * N(rng);
    return v;
}

} // namespace fits3::test
