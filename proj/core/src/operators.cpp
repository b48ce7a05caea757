#include "iomc/operators.hpp"

#include <cmath>
#include <numbers>

namespace iomc {

Measurement apply_operator(const ImagingOperator& op, std::span<const double> object_image) {
    return std::visit(
        [&](const auto& o) -> Measurement {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, IdentityOperator>) {
                require_same_size(object_image.size(), o.dims.count(), "identity operator");
                return {std::vector<double>(object_image.begin(), object_image.end()), Layout::real, o.dims};
            } else if constexpr (std::is_same_v<T, MatrixOperator>) {
                require_same_size(object_image.size(), static_cast<std::size_t>(o.matrix.cols()), "matrix operator");
                Measurement out{std::vector<double>(static_cast<std::size_t>(o.matrix.rows())), Layout::real,
                                o.out_dims};
                Eigen::Map<const Eigen::VectorXd> f(object_image.data(), o.matrix.cols());
                Eigen::Map<Eigen::VectorXd>(out.data.data(), o.matrix.rows()).noalias() = o.matrix * f;
                return out;
            } else {
                return apply_fourier_operator(object_image, o);
            }
        },
        op);
}

std::size_t operator_input_size(const ImagingOperator& op) {
    return std::visit(
        [](const auto& o) -> std::size_t {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, IdentityOperator>)
                return o.dims.count();
            else if constexpr (std::is_same_v<T, MatrixOperator>)
                return static_cast<std::size_t>(o.matrix.cols());
            else
                return o.dims.count();
        },
        op);
}

MatrixOperator discretize_prf(const GaussianPrfSystem& sys, GridSize object_grid) {
    sys.validate();
    if (!object_grid.valid()) throw DimensionError("discretize_prf: invalid object grid");
    MatrixOperator out;
    out.out_dims = sys.grid;
    out.matrix.resize(static_cast<Eigen::Index>(sys.grid.count()), static_cast<Eigen::Index>(object_grid.count()));
    const double norm = sys.height / (2.0 * std::numbers::pi * sys.width * sys.width);
    const double inv = 1.0 / (2.0 * sys.width * sys.width);
    for (std::size_t m = 0; m < sys.grid.count(); ++m) {
        const Point2 rm = sys.detector(m);
        for (int y = 0; y < object_grid.height; ++y)
            for (int x = 0; x < object_grid.width; ++x)
                out.matrix(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(y) * object_grid.width + x) =
                    norm * std::exp(-squared_distance(rm, {double(x), double(y)}) * inv);
    }
    return out;
}

}  // namespace iomc
