#include "puffprint/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace puffprint {

Tensor::Tensor(std::vector<size_t> shape_in, std::vector<double> data_in)
    : shape(std::move(shape_in)), data(std::move(data_in)) {
	size_t expect = shape.empty() ? 0 : 1;
	for (size_t dim : shape)
		expect *= dim;
	if (expect != data.size())
		throw std::invalid_argument("Tensor: data length does not match shape");
}

Tensor Tensor::zeros(size_t rows, size_t cols) {
	Tensor t;
	t.shape = {rows, cols};
	t.data.assign(rows * cols, 0.0);
	return t;
}

Tensor Tensor::from_row(const std::vector<double> &row) {
	Tensor t;
	t.shape = {1, row.size()};
	t.data = row;
	return t;
}

std::vector<double> Tensor::row(size_t r) const {
	return std::vector<double>(data.begin() + static_cast<long>(r * cols()),
	                           data.begin() + static_cast<long>((r + 1) * cols()));
}

bool Tensor::all_finite() const {
	for (double v : data)
		if (!std::isfinite(v))
			return false;
	return true;
}

} // namespace puffprint
