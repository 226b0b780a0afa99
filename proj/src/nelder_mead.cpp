#include "supousv/nelder_mead.hpp"

#include "supousv/error.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <cmath>
#include <memory>

namespace supousv {

namespace {

constexpr double kHuge = 1e300;

double trampoline(const gsl_vector* v, void* params) {
    const auto& f = *static_cast<const Objective*>(params);
    std::vector<double> x(v->size);
    for (std::size_t i = 0; i < v->size; ++i) x[i] = gsl_vector_get(v, i);
    const double y = f(x);
    return std::isfinite(y) ? y : kHuge;
}

struct VectorDeleter {
    void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct MinimizerDeleter {
    void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};

NelderMeadResult run_once(const Objective& f, const std::vector<double>& x0, const NelderMeadOptions& opt,
                          std::size_t budget) {
    const std::size_t n = x0.size();
    std::unique_ptr<gsl_vector, VectorDeleter> x(gsl_vector_alloc(n)), step(gsl_vector_alloc(n));
    for (std::size_t i = 0; i < n; ++i) {
        gsl_vector_set(x.get(), i, x0[i]);
        gsl_vector_set(step.get(), i, opt.initial_step);
    }
    gsl_multimin_function fn;
    fn.n = n;
    fn.f = &trampoline;
    fn.params = const_cast<Objective*>(&f);
    std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> m(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));
    gsl_multimin_fminimizer_set(m.get(), &fn, x.get(), step.get());

    NelderMeadResult r;
    for (; r.iterations < budget; ++r.iterations) {
        if (gsl_multimin_fminimizer_iterate(m.get()) != GSL_SUCCESS) break;
        const double size = gsl_multimin_fminimizer_size(m.get());
        if (gsl_multimin_test_size(size, opt.size_tol) == GSL_SUCCESS) {
            r.converged = true;
            ++r.iterations;
            break;
        }
    }
    r.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.x[i] = gsl_vector_get(m->x, i);
    r.value = m->fval;
    return r;
}

}  // namespace

NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& opt) {
    if (x0.empty()) throw DomainError("nelder_mead: empty starting point");
    gsl_set_error_handler_off();
    NelderMeadResult best = run_once(f, x0, opt, opt.max_iterations);
    // restarting from the best vertex escapes collapsed simplices
    for (std::size_t k = 0; k < opt.restarts; ++k) {
        NelderMeadOptions o = opt;
        o.initial_step = opt.initial_step * 0.1;
        NelderMeadResult next = run_once(f, best.x, o, opt.max_iterations);
        next.iterations += best.iterations;
        const bool improved = next.value < best.value;
        best = next.value <= best.value ? next : best;
        if (!improved) break;
    }
    return best;
}

NelderMeadResult nelder_mead_multistart(const Objective& f, const std::vector<std::vector<double>>& starts,
                                        const NelderMeadOptions& opt) {
    if (starts.empty()) throw DomainError("nelder_mead: no starting points");
    NelderMeadResult best;
    bool have = false;
    for (const auto& s : starts) {
        NelderMeadResult r = nelder_mead(f, s, opt);
        if (!have || r.value < best.value) {
            best = std::move(r);
            have = true;
        }
    }
    return best;
}

}  // namespace supousv
