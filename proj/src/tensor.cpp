#include "edgehyb/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "edgehyb/errors.hpp"

namespace edgehyb {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_numel(shape_))
        throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string(shape_));
}

std::vector<double>& Tensor::grad() {
    if (grad_.size() != data_.size()) grad_.assign(data_.size(), 0.0);
    return grad_;
}

void Tensor::zero_grad() { grad_.assign(data_.size(), 0.0); }

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_numel(shape) != data_.size())
        throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    return Tensor(std::move(shape), data_);
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
    if (t.rank() != rank)
        throw ShapeError(std::string(what) + " expects rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
}

}  // namespace edgehyb
