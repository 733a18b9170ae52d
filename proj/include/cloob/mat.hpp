#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cloob {

/// Dense real matrix, row-major, 64-bit floats. The universal numeric
/// carrier of the project. Entries must stay finite; construction and
/// mutation paths check this.
class Mat {
public:
    Mat() : rows_(0), cols_(0) {}

    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        if (rows == 0 || cols == 0)
            throw std::invalid_argument("Mat: rows and cols must be >= 1");
        if (!std::isfinite(fill))
            throw std::invalid_argument("Mat: non-finite fill value");
    }

    Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (rows == 0 || cols == 0)
            throw std::invalid_argument("Mat: rows and cols must be >= 1");
        if (data_.size() != rows * cols)
            throw std::invalid_argument("Mat: data size does not match shape");
        check_finite();
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }
    double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }

    std::vector<double> row(std::size_t r) const {
        return std::vector<double>(row_ptr(r), row_ptr(r) + cols_);
    }
    void set_row(std::size_t r, const std::vector<double>& v) {
        if (v.size() != cols_)
            throw std::invalid_argument("Mat::set_row: length mismatch");
        for (std::size_t c = 0; c < cols_; ++c) data_[r * cols_ + c] = v[c];
    }

    void check_finite() const {
        for (double v : data_)
            if (!std::isfinite(v))
                throw std::invalid_argument("Mat: non-finite entry");
    }

    bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    std::string shape_str() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

private:
    std::size_t rows_, cols_;
    std::vector<double> data_;
};

using Vec = std::vector<double>;

}  // namespace cloob
