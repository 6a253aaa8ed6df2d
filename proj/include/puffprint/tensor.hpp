#pragma once

#include <cstdint>
#include <vector>

namespace puffprint {

/// Row-major tensor of doubles. The shape {rows, cols} form is what the
/// network engine uses; rank-1 tensors are treated as a single row.
struct Tensor {
	std::vector<size_t> shape;
	std::vector<double> data;

	Tensor() = default;
	Tensor(std::vector<size_t> shape_in, std::vector<double> data_in);

	static Tensor zeros(size_t rows, size_t cols);
	static Tensor from_row(const std::vector<double> &row);

	size_t rows() const { return shape.empty() ? 0 : shape[0]; }
	size_t cols() const { return shape.size() < 2 ? (shape.empty() ? 0 : 1) : shape[1]; }
	size_t size() const { return data.size(); }

	double &at(size_t r, size_t c) { return data[r * cols() + c]; }
	double at(size_t r, size_t c) const { return data[r * cols() + c]; }
	const double *row_ptr(size_t r) const { return data.data() + r * cols(); }
	double *row_ptr(size_t r) { return data.data() + r * cols(); }

	std::vector<double> row(size_t r) const;
	bool all_finite() const;
};

} // namespace puffprint
