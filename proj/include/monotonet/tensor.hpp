#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace monotonet {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ')';
    return os.str();
}

// Dense n-dimensional array of doubles, row-major. Rank 0 is a scalar,
// rank 1 a vector, rank 2 a matrix; the ops below only need rank <= 2.
class Tensor {
public:
    Tensor() : shape_{}, data_(1, 0.0) {}
    explicit Tensor(Shape shape, double fill = 0.0)
        : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}
    Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != shape_size(shape_))
            throw std::invalid_argument("Tensor: data length does not match shape " + shape_str(shape_));
    }

    static Tensor scalar(double v) {
        Tensor t;
        t.data_[0] = v;
        return t;
    }
    static Tensor vector(std::vector<double> v) {
        Shape s{v.size()};
        return Tensor(std::move(s), std::move(v));
    }
    static Tensor matrix(std::size_t r, std::size_t c, std::vector<double> v) {
        return Tensor(Shape{r, c}, std::move(v));
    }
    static Tensor zeros(const Shape& s) { return Tensor(s, 0.0); }
    static Tensor ones(const Shape& s) { return Tensor(s, 1.0); }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t rows() const { require_rank(2); return shape_[0]; }
    std::size_t cols() const { require_rank(2); return shape_[1]; }
    std::size_t length() const { require_rank(1); return shape_[0]; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    double scalar_value() const {
        if (size() != 1) throw std::invalid_argument("Tensor: not a scalar, shape " + shape_str(shape_));
        return data_[0];
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

private:
    void require_rank(std::size_t r) const {
        if (rank() != r)
            throw std::invalid_argument("Tensor: expected rank " + std::to_string(r) + ", got shape " + shape_str(shape_));
    }

    Shape shape_;
    std::vector<double> data_;
};

namespace kernel {

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

inline Tensor div(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "div");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] / b[i];
    return out;
}

inline Tensor neg(const Tensor& a) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = -a[i];
    return out;
}

inline Tensor max_const(const Tensor& a, double c) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] > c ? a[i] : c;
    return out;
}

inline Tensor tanh(const Tensor& a) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::tanh(a[i]);
    return out;
}

inline Tensor exp(const Tensor& a) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::exp(a[i]);
    return out;
}

inline Tensor log(const Tensor& a) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::log(a[i]);
    return out;
}

inline Tensor square(const Tensor& a) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * a[i];
    return out;
}

inline Tensor scale(const Tensor& a, double c) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * c;
    return out;
}

inline Tensor shift(const Tensor& a, double c) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + c;
    return out;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
        throw std::invalid_argument("matmul: incompatible shapes " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out(Shape{m, n});
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        double* orow = po + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aval = pa[i * k + p];
            if (aval == 0.0) continue;
            const double* brow = pb + p * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += aval * brow[j];
        }
    }
    return out;
}

inline Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw std::invalid_argument("transpose: rank-2 tensor required");
    Tensor out(Shape{a.cols(), a.rows()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

inline Tensor sum_all(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    return Tensor::scalar(s);
}

inline Tensor mean_all(const Tensor& a) {
    if (a.size() == 0) throw std::invalid_argument("mean_all: empty tensor");
    return Tensor::scalar(sum_all(a).scalar_value() / static_cast<double>(a.size()));
}

// column sums: (m x n) -> (n)
inline Tensor sum_axis0(const Tensor& a) {
    if (a.rank() != 2) throw std::invalid_argument("sum_axis0: rank-2 tensor required");
    Tensor out(Shape{a.cols()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out[j] += a(i, j);
    return out;
}

// row sums: (m x n) -> (m)
inline Tensor sum_axis1(const Tensor& a) {
    if (a.rank() != 2) throw std::invalid_argument("sum_axis1: rank-2 tensor required");
    Tensor out(Shape{a.rows()});
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j);
        out[i] = s;
    }
    return out;
}

// repeat a length-n vector as m rows: (n) -> (m x n)
inline Tensor bcast_axis0(const Tensor& a, std::size_t rows) {
    if (a.rank() != 1) throw std::invalid_argument("bcast_axis0: rank-1 tensor required");
    Tensor out(Shape{rows, a.length()});
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < a.length(); ++j) out(i, j) = a[j];
    return out;
}

// repeat a length-m vector as n columns: (m) -> (m x n)
inline Tensor bcast_axis1(const Tensor& a, std::size_t cols) {
    if (a.rank() != 1) throw std::invalid_argument("bcast_axis1: rank-1 tensor required");
    Tensor out(Shape{a.length(), cols});
    for (std::size_t i = 0; i < a.length(); ++i)
        for (std::size_t j = 0; j < cols; ++j) out(i, j) = a[i];
    return out;
}

inline Tensor bcast_scalar(const Tensor& a, const Shape& target) {
    Tensor out(target, a.scalar_value());
    return out;
}

// softmax along the last axis; stable via per-row max subtraction
inline Tensor softmax(const Tensor& a) {
    if (a.rank() == 1) {
        Tensor out(a.shape());
        double mx = a[0];
        for (std::size_t i = 1; i < a.size(); ++i) mx = std::max(mx, a[i]);
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            out[i] = std::exp(a[i] - mx);
            s += out[i];
        }
        for (std::size_t i = 0; i < a.size(); ++i) out[i] /= s;
        return out;
    }
    if (a.rank() == 2) {
        Tensor out(a.shape());
        for (std::size_t r = 0; r < a.rows(); ++r) {
            double mx = a(r, 0);
            for (std::size_t j = 1; j < a.cols(); ++j) mx = std::max(mx, a(r, j));
            double s = 0.0;
            for (std::size_t j = 0; j < a.cols(); ++j) {
                out(r, j) = std::exp(a(r, j) - mx);
                s += out(r, j);
            }
            for (std::size_t j = 0; j < a.cols(); ++j) out(r, j) /= s;
        }
        return out;
    }
    throw std::invalid_argument("softmax: rank-1 or rank-2 tensor required");
}

// contiguous range along the last axis; vectors give subvectors,
// matrices give column blocks
inline Tensor slice_last(const Tensor& a, std::size_t start, std::size_t len) {
    if (a.rank() == 1) {
        if (start + len > a.length()) throw std::invalid_argument("slice: out of range");
        Tensor out(Shape{len});
        for (std::size_t i = 0; i < len; ++i) out[i] = a[start + i];
        return out;
    }
    if (a.rank() == 2) {
        if (start + len > a.cols()) throw std::invalid_argument("slice: out of range");
        Tensor out(Shape{a.rows(), len});
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < len; ++j) out(i, j) = a(i, start + j);
        return out;
    }
    throw std::invalid_argument("slice: rank-1 or rank-2 tensor required");
}

// zero-pad along the last axis up to width `out_width`, placing the input
// at offset `start`; adjoint counterpart of slice_last
inline Tensor embed_last(const Tensor& a, std::size_t start, std::size_t out_width) {
    if (a.rank() == 1) {
        if (start + a.length() > out_width) throw std::invalid_argument("embed: out of range");
        Tensor out(Shape{out_width});
        for (std::size_t i = 0; i < a.length(); ++i) out[start + i] = a[i];
        return out;
    }
    if (a.rank() == 2) {
        if (start + a.cols() > out_width) throw std::invalid_argument("embed: out of range");
        Tensor out(Shape{a.rows(), out_width});
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < a.cols(); ++j) out(i, start + j) = a(i, j);
        return out;
    }
    throw std::invalid_argument("embed: rank-1 or rank-2 tensor required");
}

inline Tensor concat_last(const std::vector<const Tensor*>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    const std::size_t rank = parts[0]->rank();
    if (rank == 1) {
        std::size_t total = 0;
        for (const Tensor* p : parts) {
            if (p->rank() != 1) throw std::invalid_argument("concat: mixed ranks");
            total += p->length();
        }
        Tensor out(Shape{total});
        std::size_t off = 0;
        for (const Tensor* p : parts)
            for (std::size_t i = 0; i < p->length(); ++i) out[off++] = (*p)[i];
        return out;
    }
    if (rank == 2) {
        const std::size_t rows = parts[0]->rows();
        std::size_t total = 0;
        for (const Tensor* p : parts) {
            if (p->rank() != 2 || p->rows() != rows)
                throw std::invalid_argument("concat: row count mismatch");
            total += p->cols();
        }
        Tensor out(Shape{rows, total});
        std::size_t off = 0;
        for (const Tensor* p : parts) {
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < p->cols(); ++j) out(i, off + j) = (*p)(i, j);
            off += p->cols();
        }
        return out;
    }
    throw std::invalid_argument("concat: rank-1 or rank-2 tensors required");
}

} // namespace kernel
} // namespace monotonet
