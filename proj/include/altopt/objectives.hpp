#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace altopt {

using Point2 = std::array<double, 2>;

enum class FunctionId { Convex2D, Rosenbrock };

std::string_view to_string(FunctionId id);
FunctionId parse_function_id(std::string_view name);

// Two-dimensional benchmark objective with an analytic gradient.
//   Convex2D:   β(x1-α)² + 10β(x2-α)²      minimum [α, α]
//   Rosenbrock: (α-x1)² + β(x2-x1²)²       minimum [α, α²]
class Objective {
public:
    Objective(FunctionId id, double alpha, double beta);

    FunctionId id() const { return id_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }

    double eval(const Point2& x) const;
    Point2 grad(const Point2& x) const;
    Point2 minimum() const;

private:
    FunctionId id_;
    double alpha_;
    double beta_;
};

Objective convex2d(double alpha, double beta);
Objective rosenbrock(double alpha, double beta);

struct TaskConfig {
    FunctionId function = FunctionId::Convex2D;
    double alpha = 1.0;
    double beta = 20.0;
    Point2 x0{50.0, 50.0};
    std::int64_t iterations = 100;
    std::uint64_t seed = 0;
};

/// Throws InvalidConfig when beta <= 0 or iterations < 1.
void validate(const TaskConfig& task);
Objective make_objective(const TaskConfig& task);

double distance_to_minimum(const Point2& x, const Objective& objective);

/// Central differences with step h; independent of Objective::grad.
Point2 finite_difference_grad(const Objective& objective, const Point2& x, double h);

}  // namespace altopt
