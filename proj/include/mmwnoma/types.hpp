// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace mmwnoma {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

// All stochastic components take an explicitly passed engine.
using Rng = std::mt19937_64;

}  // namespace mmwnoma
