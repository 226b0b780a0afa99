#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace supousv {

struct NelderMeadOptions {
    std::size_t max_iterations = 4000;
    double size_tol = 1e-10;     // simplex characteristic size at convergence
    double initial_step = 0.25;  // per coordinate
    std::size_t restarts = 3;    // fresh simplex around the best point
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

using Objective = std::function<double(const std::vector<double>&)>;

/// Unconstrained minimization (GSL nmsimplex2). Non-finite objective values
/// are treated as +huge so callers can encode hard constraints.
NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& opt = {});

/// Runs nelder_mead from each start and returns the best result.
NelderMeadResult nelder_mead_multistart(const Objective& f, const std::vector<std::vector<double>>& starts,
                                        const NelderMeadOptions& opt = {});

}  // namespace supousv
