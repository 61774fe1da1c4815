#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace ginnlp {

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows)
        , cols_(cols)
        , data_(rows * cols, fill)
    {
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept
    {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const noexcept
    {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    [[nodiscard]] std::span<double> row(std::size_t r) noexcept { return { data_.data() + r * cols_, cols_ }; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept { return { data_.data() + r * cols_, cols_ }; }

    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
    [[nodiscard]] std::span<double> data() noexcept { return data_; }

    // Rows picked by index, in the given order.
    [[nodiscard]] Matrix select_rows(std::span<const std::size_t> idx) const
    {
        Matrix out(idx.size(), cols_);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            auto src = row(idx[i]);
            std::copy(src.begin(), src.end(), out.row(i).begin());
        }
        return out;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ { 0 };
    std::size_t cols_ { 0 };
    std::vector<double> data_;
};

} // namespace ginnlp
