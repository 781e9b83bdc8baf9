#pragma once

#include <Eigen/Dense>
#include <cassert>
#include <cstdint>
#include <vector>

namespace gcondnet {

/// Compressed sparse row matrix. Rows are stored in column-sorted order so
/// every product has a fixed, deterministic summation order.
template <typename T>
struct CsrMatrix {
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

    int rows = 0;
    int cols = 0;
    std::vector<int> row_ptr;  // size rows + 1
    std::vector<int> col_idx;
    std::vector<T> vals;

    // triplets must be sorted by (row, col) with no duplicates
    static CsrMatrix from_sorted_triplets(int rows, int cols,
                                          const std::vector<std::pair<std::pair<int, int>, T>>& trip) {
        CsrMatrix m;
        m.rows = rows;
        m.cols = cols;
        m.row_ptr.assign(static_cast<size_t>(rows) + 1, 0);
        m.col_idx.reserve(trip.size());
        m.vals.reserve(trip.size());
        for (const auto& t : trip) {
            m.row_ptr[static_cast<size_t>(t.first.first) + 1]++;
            m.col_idx.push_back(t.first.second);
            m.vals.push_back(t.second);
        }
        for (int r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
        return m;
    }

    static CsrMatrix identity(int n) {
        CsrMatrix m;
        m.rows = m.cols = n;
        m.row_ptr.resize(static_cast<size_t>(n) + 1);
        m.col_idx.resize(n);
        m.vals.assign(n, T(1));
        for (int i = 0; i <= n; ++i) m.row_ptr[i] = i;
        for (int i = 0; i < n; ++i) m.col_idx[i] = i;
        return m;
    }

    std::size_t nnz() const { return vals.size(); }

    // Y = A * X
    Mat multiply(const Eigen::Ref<const Mat>& x) const {
        assert(x.rows() == cols);
        Mat y = Mat::Zero(rows, x.cols());
        for (int r = 0; r < rows; ++r)
            for (int p = row_ptr[r]; p < row_ptr[r + 1]; ++p)
                y.row(r) += vals[p] * x.row(col_idx[p]);
        return y;
    }

    // Y = A^T * X
    Mat multiply_transposed(const Eigen::Ref<const Mat>& x) const {
        assert(x.rows() == rows);
        Mat y = Mat::Zero(cols, x.cols());
        for (int r = 0; r < rows; ++r)
            for (int p = row_ptr[r]; p < row_ptr[r + 1]; ++p)
                y.row(col_idx[p]) += vals[p] * x.row(r);
        return y;
    }

    // A * diag(s)
    CsrMatrix scale_columns(const Eigen::Ref<const Vec>& s) const {
        assert(s.size() == cols);
        CsrMatrix m = *this;
        for (std::size_t p = 0; p < m.vals.size(); ++p) m.vals[p] *= s[m.col_idx[p]];
        return m;
    }

    Vec row_sums() const {
        Vec out = Vec::Zero(rows);
        for (int r = 0; r < rows; ++r)
            for (int p = row_ptr[r]; p < row_ptr[r + 1]; ++p) out[r] += vals[p];
        return out;
    }

    Mat to_dense() const {
        Mat d = Mat::Zero(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int p = row_ptr[r]; p < row_ptr[r + 1]; ++p) d(r, col_idx[p]) = vals[p];
        return d;
    }

    template <typename U>
    CsrMatrix<U> cast() const {
        CsrMatrix<U> m;
        m.rows = rows;
        m.cols = cols;
        m.row_ptr = row_ptr;
        m.col_idx = col_idx;
        m.vals.resize(vals.size());
        for (std::size_t i = 0; i < vals.size(); ++i) m.vals[i] = static_cast<U>(vals[i]);
        return m;
    }
};

}  // namespace gcondnet
