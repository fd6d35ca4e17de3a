#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace cabl {

enum class Layout { RowMajor, ColMajor };

inline const char* layout_name(Layout l) {
    return l == Layout::RowMajor ? "row-major" : "col-major";
}

// Contiguous unit-stride vector of real elements.
template <typename T>
class Vector {
public:
    Vector() = default;
    explicit Vector(std::size_t n, T value = T{}) : data_(n, value) {}
    Vector(std::initializer_list<T> init) : data_(init) {}

    std::size_t len() const { return data_.size(); }
    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

    friend bool operator==(const Vector& a, const Vector& b) { return a.data_ == b.data_; }

private:
    std::vector<T> data_;
};

// Dense matrix with an explicit storage order. Element (i, j) lives at
// i + j*rows for col-major storage and at j + i*cols for row-major.
template <typename T>
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, Layout layout, T value = T{})
        : rows_(rows), cols_(cols), layout_(layout), data_(rows * cols, value) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    Layout layout() const { return layout_; }
    std::size_t size() const { return data_.size(); }

    std::size_t index(std::size_t i, std::size_t j) const {
        return layout_ == Layout::ColMajor ? i + j * rows_ : j + i * cols_;
    }
    T& operator()(std::size_t i, std::size_t j) { return data_[index(i, j)]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[index(i, j)]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.layout_ == b.layout_ &&
               a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Layout layout_ = Layout::RowMajor;
    std::vector<T> data_;
};

} // namespace cabl
