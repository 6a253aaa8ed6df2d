#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace puffprint {

struct GradCheckCase {
	std::string name;       // "<loss>/<architecture>"
	size_t configs = 0;     // random configurations exercised
	double max_rel_err = 0; // worst relative error seen across all parameters
	bool pass = false;
};

/**
 * Compares analytic backprop gradients with central finite differences for
 * every layer kind (Dense, ReLU, Sigmoid, SoftmaxT) under every loss (MSE,
 * BCE, CE, KD), on `configs_per_case` random small networks each. Relative
 * error is |a - f| / max(1, |a|, |f|). ReLU inputs are resampled away from
 * the kink so the finite-difference oracle stays valid.
 */
std::vector<GradCheckCase> run_gradient_suite(size_t configs_per_case, uint64_t seed,
                                              double tolerance = 1e-4, double fd_step = 1e-5);

} // namespace puffprint
