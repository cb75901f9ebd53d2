#ifndef EDGEHYB_TENSOR_HPP
#define EDGEHYB_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace edgehyb {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major float64 array with an optional gradient buffer of equal length.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t numel() const { return data_.size(); }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    /// Element of a rank-4 [N,C,H,W] tensor.
    double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
        return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
        return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }

    bool has_grad() const { return grad_.size() == data_.size() && !grad_.empty(); }
    /// Allocates (zeroed) the gradient buffer if absent.
    std::vector<double>& grad();
    const std::vector<double>& grad() const { return grad_; }
    void zero_grad();
    void drop_grad() { grad_.clear(); }

    /// Same data, new shape of equal element count (ShapeError otherwise).
    Tensor reshaped(Shape shape) const;

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    Shape shape_;
    std::vector<double> data_;
    std::vector<double> grad_;
};

/// Throws ShapeError naming `what` unless `t` has exactly the given rank.
void require_rank(const Tensor& t, std::size_t rank, const char* what);

}  // namespace edgehyb

#endif  // EDGEHYB_TENSOR_HPP
