#pragma once

#include <span>
#include <variant>

#include <Eigen/Dense>

#include "iomc/fourier.hpp"
#include "iomc/imaging.hpp"

namespace iomc {

/// H = I on a pixel grid.
struct IdentityOperator {
    GridSize dims{};
};

/// Dense discrete-to-discrete operator g = H f, output shaped as `out_dims`.
struct MatrixOperator {
    Eigen::MatrixXd matrix;
    GridSize out_dims{};
};

/// Discrete imaging operators that can be applied to a generated object image.
using ImagingOperator = std::variant<IdentityOperator, MatrixOperator, FourierSamplingOperator>;

Measurement apply_operator(const ImagingOperator& op, std::span<const double> object_image);

/// Number of object pixels the operator expects.
std::size_t operator_input_size(const ImagingOperator& op);

/// Row-major matrix of the PRF system applied to a pixelized object whose pixel
/// (x, y) is a unit-area sample at integer coordinates: H[m, n] = h_m(r_n).
MatrixOperator discretize_prf(const GaussianPrfSystem& sys, GridSize object_grid);

}  // namespace iomc
