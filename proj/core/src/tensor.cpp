#include "avdn/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "avdn/errors.hpp"
#include "avdn/rng.hpp"

namespace avdn::nn {

namespace {

void require_same_shape(const Tensor2& a, const Tensor2& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
    }
}

}  // namespace

Tensor2::Tensor2(std::size_t rows, std::size_t cols, double fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor2::Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw ShapeError("tensor: " + std::to_string(rows) + "x" + std::to_string(cols) + " needs " +
                         std::to_string(rows * cols) + " values, got " + std::to_string(data_.size()));
    }
}

Tensor2 Tensor2::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("tensor: ragged row initializer");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor2(r, c, std::move(data));
}

void Tensor2::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor2::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor2& Tensor2::operator+=(const Tensor2& other) {
    require_same_shape(*this, other, "add");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor2& Tensor2::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

std::string shape_string(const Tensor2& t) { return std::to_string(t.rows()) + "x" + std::to_string(t.cols()); }

Tensor2 operator+(Tensor2 a, const Tensor2& b) {
    a += b;
    return a;
}

Tensor2 operator*(double s, Tensor2 a) {
    a *= s;
    return a;
}

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
    if (a.cols() != b.rows()) throw ShapeError("matmul: " + shape_string(a) + " · " + shape_string(b));
    Tensor2 out(a.rows(), b.cols());
    const std::size_t n = a.cols();
    const std::size_t m = b.cols();
    std::size_t i = 0;
    // four output rows share each load of b; per-element summation order is unchanged
    for (; i + 4 <= a.rows(); i += 4) {
        double* o0 = out.row(i).data();
        double* o1 = o0 + m;
        double* o2 = o1 + m;
        double* o3 = o2 + m;
        const double* a0 = a.row(i).data();
        for (std::size_t k = 0; k < n; ++k) {
            const double x0 = a0[k];
            const double x1 = a0[n + k];
            const double x2 = a0[2 * n + k];
            const double x3 = a0[3 * n + k];
            const double* bk = b.row(k).data();
            for (std::size_t j = 0; j < m; ++j) {
                const double bj = bk[j];
                o0[j] += x0 * bj;
                o1[j] += x1 * bj;
                o2[j] += x2 * bj;
                o3[j] += x3 * bj;
            }
        }
    }
    for (; i < a.rows(); ++i) {
        double* o = out.row(i).data();
        const double* ai = a.row(i).data();
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = ai[k];
            const double* bk = b.row(k).data();
            for (std::size_t j = 0; j < m; ++j) o[j] += aik * bk[j];
        }
    }
    return out;
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
    if (a.rows() != b.rows()) throw ShapeError("matmul_tn: " + shape_string(a) + "ᵀ · " + shape_string(b));
    Tensor2 out(a.cols(), b.cols());
    const std::size_t m = b.cols();
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* ak = a.row(k).data();
        const double* bk = b.row(k).data();
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            double* o = out.row(i).data();
            for (std::size_t j = 0; j < m; ++j) o[j] += aki * bk[j];
        }
    }
    return out;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
    if (a.cols() != b.cols()) throw ShapeError("matmul_nt: " + shape_string(a) + " · " + shape_string(b) + "ᵀ");
    Tensor2 out(a.rows(), b.rows());
    const std::size_t n = a.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i).data();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* bj = b.row(j).data();
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += ai[k] * bj[k];
            out(i, j) = s;
        }
    }
    return out;
}

Tensor2 transpose(const Tensor2& a) {
    Tensor2 out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Tensor2 hadamard(const Tensor2& a, const Tensor2& b) {
    require_same_shape(a, b, "hadamard");
    Tensor2 out = a;
    auto o = out.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bd[i];
    return out;
}

Tensor2 add_row(Tensor2 x, const Tensor2& bias) {
    if (bias.rows() != 1 || bias.cols() != x.cols()) {
        throw ShapeError("add_row: bias " + shape_string(bias) + " for input " + shape_string(x));
    }
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto r = x.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias(0, j);
    }
    return x;
}

Tensor2 column_sums(const Tensor2& x) {
    Tensor2 out(1, x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto r = x.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) out(0, j) += r[j];
    }
    return out;
}

Tensor2 softmax_rows(const Tensor2& x) {
    Tensor2 out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto in = x.row(i);
        auto o = out.row(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (double v : in) mx = std::max(mx, v);
        if (!std::isfinite(mx)) continue;  // fully masked row stays zero
        double sum = 0.0;
        for (std::size_t j = 0; j < in.size(); ++j) {
            o[j] = std::exp(in[j] - mx);
            sum += o[j];
        }
        for (double& v : o) v /= sum;
    }
    return out;
}

Tensor2 random_normal(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
    Tensor2 out(rows, cols);
    for (double& v : out.data()) v = stddev * rng.normal();
    return out;
}

}  // namespace avdn::nn
