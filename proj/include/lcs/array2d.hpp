#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "lcs/errors.hpp"

namespace lcs {

// Dense row-major 2D array. Rows are time steps, columns are lattice sites
// when used as a field; rows are samples when used as a data matrix.
template <typename T>
class Array2D {
public:
    using value_type = T;

    Array2D() = default;
    Array2D(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Array2D(std::size_t rows, std::size_t cols, std::vector<T> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_)
            throw ConfigError("Array2D: data size does not match shape");
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    // Rows [first, first + count) as a new array.
    Array2D slice_rows(std::size_t first, std::size_t count) const {
        if (first + count > rows_) throw ConfigError("Array2D: row slice out of range");
        return Array2D(count, cols_,
                       std::vector<T>(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_),
                                      data_.begin() + static_cast<std::ptrdiff_t>((first + count) * cols_)));
    }

    // Stacks `below` under this array; column counts must agree.
    Array2D vstack(const Array2D& below) const {
        if (below.cols_ != cols_ && !empty() && !below.empty())
            throw ConfigError("Array2D: vstack column mismatch");
        std::vector<T> out(data_);
        out.insert(out.end(), below.data_.begin(), below.data_.end());
        return Array2D(rows_ + below.rows_, empty() ? below.cols_ : cols_, std::move(out));
    }

    friend bool operator==(const Array2D&, const Array2D&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

// Real observable field X(t, r): rows are time steps, columns are sites.
using SpacetimeField = Array2D<double>;

// Integer latent field S(t, r) with kMargin at unassigned points.
using StateField = Array2D<std::int32_t>;

// Generic sample matrix (one lightcone vector per row).
using Matrix = Array2D<double>;

inline constexpr std::int32_t kMargin = -1;

// Periodic site index.
inline std::size_t wrap(std::ptrdiff_t r, std::size_t n) {
    const auto m = static_cast<std::ptrdiff_t>(n);
    return static_cast<std::size_t>(((r % m) + m) % m);
}

// Rotates every row of `a` right by k sites: out(t, r + k) = a(t, r).
template <typename T>
Array2D<T> roll_sites(const Array2D<T>& a, std::ptrdiff_t k) {
    Array2D<T> out(a.rows(), a.cols());
    for (std::size_t t = 0; t < a.rows(); ++t)
        for (std::size_t r = 0; r < a.cols(); ++r)
            out(t, wrap(static_cast<std::ptrdiff_t>(r) + k, a.cols())) = a(t, r);
    return out;
}

} // namespace lcs
