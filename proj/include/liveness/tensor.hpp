#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "liveness/errors.hpp"

namespace liveness {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

inline Index shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "," : "") << shape[i];
    }
    os << ']';
    return os.str();
}

/// Dense row-major N-d array. Storage is an Eigen column vector so flat and
/// matrix views are zero-copy Eigen::Map expressions.
template <typename Scalar>
class Tensor {
public:
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using MatrixMap = Eigen::Map<RowMatrix>;
    using ConstMatrixMap = Eigen::Map<const RowMatrix>;

    Tensor() = default;

    explicit Tensor(Shape shape, Scalar fill = Scalar(0)) : shape_(std::move(shape)) {
        validate_shape(shape_);
        data_ = Vector::Constant(shape_size(shape_), fill);
    }

    Tensor(Shape shape, std::span<const Scalar> values) : shape_(std::move(shape)) {
        validate_shape(shape_);
        if (static_cast<Index>(values.size()) != shape_size(shape_)) {
            throw ShapeError("tensor: " + std::to_string(values.size()) + " values for shape " +
                             shape_string(shape_));
        }
        data_ = Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
    }

    Tensor(Shape shape, std::initializer_list<Scalar> values)
        : Tensor(std::move(shape), std::span<const Scalar>(values.begin(), values.size())) {}

    const Shape& shape() const { return shape_; }
    Index rank() const { return static_cast<Index>(shape_.size()); }
    Index dim(Index axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
    Index size() const { return data_.size(); }
    bool empty() const { return data_.size() == 0; }

    Scalar* data() { return data_.data(); }
    const Scalar* data() const { return data_.data(); }
    std::span<Scalar> values() { return {data_.data(), static_cast<std::size_t>(data_.size())}; }
    std::span<const Scalar> values() const {
        return {data_.data(), static_cast<std::size_t>(data_.size())};
    }

    Vector& vec() { return data_; }
    const Vector& vec() const { return data_; }

    /// View the elements from `offset` as a rows x cols row-major matrix.
    MatrixMap matrix(Index rows, Index cols, Index offset = 0) {
        check_window(rows * cols, offset);
        return MatrixMap(data_.data() + offset, rows, cols);
    }
    ConstMatrixMap matrix(Index rows, Index cols, Index offset = 0) const {
        check_window(rows * cols, offset);
        return ConstMatrixMap(data_.data() + offset, rows, cols);
    }

    Scalar& operator[](Index i) { return data_[i]; }
    Scalar operator[](Index i) const { return data_[i]; }

    template <typename... Ix>
    Scalar& operator()(Ix... ix) {
        return data_[offset_of({static_cast<Index>(ix)...})];
    }
    template <typename... Ix>
    Scalar operator()(Ix... ix) const {
        return data_[offset_of({static_cast<Index>(ix)...})];
    }

    /// Same data, new shape with equal element count.
    Tensor reshaped(Shape shape) const {
        Tensor out;
        out.shape_ = std::move(shape);
        validate_shape(out.shape_);
        if (shape_size(out.shape_) != size()) {
            throw ShapeError("reshape " + shape_string(shape_) + " -> " + shape_string(out.shape_));
        }
        out.data_ = data_;
        return out;
    }

    void fill(Scalar v) { data_.setConstant(v); }
    void set_zero() { data_.setZero(); }

    template <typename Other>
    Tensor<Other> cast() const {
        Tensor<Other> out(shape_);
        out.vec() = data_.template cast<Other>();
        return out;
    }

    bool all_finite() const { return data_.allFinite(); }

    Scalar sum() const { return data_.sum(); }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    static void validate_shape(const Shape& shape) {
        for (Index d : shape) {
            if (d <= 0) {
                throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
            }
        }
    }

    void check_window(Index count, Index offset) const {
        if (offset < 0 || count < 0 || offset + count > size()) {
            throw ShapeError("matrix view out of range");
        }
    }

    Index offset_of(std::initializer_list<Index> ix) const {
        if (ix.size() != shape_.size()) {
            throw ShapeError("index rank mismatch for shape " + shape_string(shape_));
        }
        Index off = 0;
        std::size_t axis = 0;
        for (Index i : ix) {
            off = off * shape_[axis++] + i;
        }
        return off;
    }

    Shape shape_;
    Vector data_;
};

using Tensor32 = Tensor<float>;
using Tensor64 = Tensor<double>;

template <typename Scalar>
void require_shape(const Tensor<Scalar>& t, const Shape& expected, const char* what) {
    if (t.shape() != expected) {
        throw ShapeError(std::string(what) + ": expected shape " + shape_string(expected) + ", got " +
                         shape_string(t.shape()));
    }
}

template <typename Scalar>
void require_finite(const Tensor<Scalar>& t, const std::string& where) {
    if (!t.all_finite()) {
        throw NumericError("non-finite value in " + where);
    }
}

}  // namespace liveness
