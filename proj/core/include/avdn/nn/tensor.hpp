#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace avdn {
class Rng;
}

namespace avdn::nn {

// Dense row-major matrix of doubles.
class Tensor2 {
public:
    Tensor2() = default;
    Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0);
    // Throws ShapeError when data.size() != rows * cols.
    Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data);
    static Tensor2 from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    void fill(double value);
    bool all_finite() const;

    Tensor2& operator+=(const Tensor2& other);
    Tensor2& operator*=(double s);

    friend bool operator==(const Tensor2&, const Tensor2&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

std::string shape_string(const Tensor2& t);

Tensor2 operator+(Tensor2 a, const Tensor2& b);
Tensor2 operator*(double s, Tensor2 a);

Tensor2 matmul(const Tensor2& a, const Tensor2& b);     // a · b
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);  // aᵀ · b
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);  // a · bᵀ
Tensor2 transpose(const Tensor2& a);
Tensor2 hadamard(const Tensor2& a, const Tensor2& b);

// x + bias broadcast over rows; bias is 1×cols.
Tensor2 add_row(Tensor2 x, const Tensor2& bias);
// 1×cols sums over rows.
Tensor2 column_sums(const Tensor2& x);

// Row-wise softmax with max subtraction. Entries equal to -inf get weight 0.
Tensor2 softmax_rows(const Tensor2& x);

Tensor2 random_normal(std::size_t rows, std::size_t cols, double stddev, Rng& rng);

// Trainable tensor with its accumulated gradient.
struct Parameter {
    Tensor2 value;
    Tensor2 grad;

    Parameter() = default;
    explicit Parameter(Tensor2 v) : value(std::move(v)), grad(value.rows(), value.cols()) {}
    Parameter(std::size_t rows, std::size_t cols) : value(rows, cols), grad(rows, cols) {}

    void zero_grad() { grad.fill(0.0); }
};

using ParameterVisitor = std::function<void(const std::string& name, Parameter& param)>;

}  // namespace avdn::nn
