#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace fsa {

// Dense row-major double tensor. The shape is fixed at construction; data is
// mutable through span()/data().
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);
    Tensor(std::vector<std::size_t> shape, double fill);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor ones(std::vector<std::size_t> shape) { return Tensor(std::move(shape), 1.0); }
    static Tensor scalar(double v) { return Tensor({1}, std::vector<double>{v}); }
    // 2-D from nested lists, e.g. Tensor::matrix({{1,2},{3,4}})
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor vector(std::vector<double> v);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t ndim() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t numel() const { return data_.size(); }
    bool is_vector() const { return shape_.size() == 1; }
    bool is_matrix() const { return shape_.size() == 2; }

    // Matrix view helpers: a 1-D tensor counts as an n x 1 column.
    std::size_t rows() const;
    std::size_t cols() const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> span() { return {data_.data(), data_.size()}; }
    std::span<const double> span() const { return {data_.data(), data_.size()}; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at2(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double at2(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    void fill(double v);
    bool all_finite() const;

    std::string shape_str() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

bool same_shape(const Tensor& a, const Tensor& b);
std::string shape_str(const std::vector<std::size_t>& shape);

}  // namespace fsa
