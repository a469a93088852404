#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace tcd {

// Dense (V x V x L) tensor, row-major over (target j, source i, lag slice s).
// Slice s = max_lag - lag, so the last slice holds lag 1.
template <typename T>
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(int num_vars, int num_slices, T fill = T{})
        : v_(num_vars), l_(num_slices),
          data_(static_cast<std::size_t>(num_vars) * num_vars * num_slices, fill) {
        if (num_vars < 0 || num_slices < 0)
            throw std::invalid_argument("Tensor3: negative dimension");
    }

    int num_vars() const { return v_; }
    int num_slices() const { return l_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(int j, int i, int s) { return data_[index(j, i, s)]; }
    const T& operator()(int j, int i, int s) const { return data_[index(j, i, s)]; }

    T& at(int j, int i, int s) {
        check(j, i, s);
        return data_[index(j, i, s)];
    }
    const T& at(int j, int i, int s) const {
        check(j, i, s);
        return data_[index(j, i, s)];
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool same_shape(const Tensor3& other) const {
        return v_ == other.v_ && l_ == other.l_;
    }

    friend bool operator==(const Tensor3& a, const Tensor3& b) {
        return a.v_ == b.v_ && a.l_ == b.l_ && a.data_ == b.data_;
    }

private:
    std::size_t index(int j, int i, int s) const {
        return (static_cast<std::size_t>(j) * v_ + i) * l_ + s;
    }
    void check(int j, int i, int s) const {
        if (j < 0 || j >= v_ || i < 0 || i >= v_ || s < 0 || s >= l_)
            throw std::out_of_range("Tensor3: index out of range");
    }

    int v_ = 0;
    int l_ = 0;
    std::vector<T> data_;
};

using BinaryTensor = Tensor3<std::uint8_t>;
using RealTensor = Tensor3<double>;

}  // namespace tcd
