#include "altopt/objectives.hpp"

#include <cmath>
#include <string>

#include "altopt/error.hpp"

namespace altopt {

std::string_view to_string(FunctionId id) {
    return id == FunctionId::Convex2D ? "convex2d" : "rosenbrock";
}

FunctionId parse_function_id(std::string_view name) {
    if (name == "convex2d") return FunctionId::Convex2D;
    if (name == "rosenbrock") return FunctionId::Rosenbrock;
    throw Error(ErrorKind::InvalidConfig,
                "unknown function '" + std::string(name) + "' (expected convex2d or rosenbrock)");
}

Objective::Objective(FunctionId id, double alpha, double beta)
    : id_(id), alpha_(alpha), beta_(beta) {
    if (!(beta > 0.0) || !std::isfinite(beta) || !std::isfinite(alpha)) {
        throw Error(ErrorKind::InvalidConfig, "objective needs finite alpha and beta > 0");
    }
}

double Objective::eval(const Point2& x) const {
    if (id_ == FunctionId::Convex2D) {
        const double d1 = x[0] - alpha_;
        const double d2 = x[1] - alpha_;
        return beta_ * d1 * d1 + 10.0 * beta_ * d2 * d2;
    }
    const double a = alpha_ - x[0];
    const double b = x[1] - x[0] * x[0];
    return a * a + beta_ * b * b;
}

Point2 Objective::grad(const Point2& x) const {
    if (id_ == FunctionId::Convex2D) {
        return {2.0 * beta_ * (x[0] - alpha_), 20.0 * beta_ * (x[1] - alpha_)};
    }
    const double b = x[1] - x[0] * x[0];
    return {-2.0 * (alpha_ - x[0]) - 4.0 * beta_ * x[0] * b, 2.0 * beta_ * b};
}

Point2 Objective::minimum() const {
    if (id_ == FunctionId::Convex2D) return {alpha_, alpha_};
    return {alpha_, alpha_ * alpha_};
}

Objective convex2d(double alpha, double beta) { return {FunctionId::Convex2D, alpha, beta}; }

Objective rosenbrock(double alpha, double beta) { return {FunctionId::Rosenbrock, alpha, beta}; }

void validate(const TaskConfig& task) {
    if (!(task.beta > 0.0)) throw Error(ErrorKind::InvalidConfig, "task.beta must be positive");
    if (task.iterations < 1) throw Error(ErrorKind::InvalidConfig, "task.iterations must be >= 1");
    if (!std::isfinite(task.x0[0]) || !std::isfinite(task.x0[1])) {
        throw Error(ErrorKind::InvalidConfig, "task.x0 must be finite");
    }
}

Objective make_objective(const TaskConfig& task) {
    validate(task);
    return {task.function, task.alpha, task.beta};
}

double distance_to_minimum(const Point2& x, const Objective& objective) {
    const Point2 xs = objective.minimum();
    return std::hypot(x[0] - xs[0], x[1] - xs[1]);
}

Point2 finite_difference_grad(const Objective& objective, const Point2& x, double h) {
    if (!(h > 0.0)) throw Error(ErrorKind::InvalidStep, "finite-difference step must be positive");
    Point2 g{};
    for (std::size_t i = 0; i < 2; ++i) {
        Point2 hi = x;
        Point2 lo = x;
        hi[i] += h;
        lo[i] -= h;
        g[i] = (objective.eval(hi) - objective.eval(lo)) / (2.0 * h);
    }
    return g;
}

}  // namespace altopt
