#pragma once

// Optimizers decomposed into three pluggable pieces applied once per step:
//
//   m_t  = momentum(g_1..g_t)          (identity or bias-corrected EMA)
//   l_t  = adaptive(g_1..g_t)          (ones, Adagrad sum, or squared EMA)
//   dθ   = update(θ_{t-1}, m_t, l_t)   (additive, multiplicative, hybrid)
//   θ_t  = θ_{t-1} - dθ
//
// SGD, Adagrad, Adam and RMSProp are presets over the first two pieces and
// each can be combined with any of the three update rules.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "altopt/error.hpp"

namespace altopt {

using Vector = std::vector<double>;

enum class MomentumKind { Identity, AdamEma };
enum class AdaptiveKind { Identity, AdagradAccumulate, AdamEma };
enum class UpdateKind { Additive, Multiplicative, Hybrid };
enum class Family { Sgd, Adagrad, Adam, RmsProp };

struct MomentumRule {
    MomentumKind kind = MomentumKind::Identity;
    double beta1 = 0.9;  // ignored by Identity
};

struct AdaptiveRule {
    AdaptiveKind kind = AdaptiveKind::Identity;
    double beta2 = 0.99;
    double epsilon = 1e-8;
};

struct UpdateRule {
    UpdateKind kind = UpdateKind::Additive;
    double eta = 0.01;      // additive step size
    double eta_in = 1.0;    // scales the tanh argument
    double eta_out = 0.1;   // bounds the relative step, in (0, 1]
    double gamma = 0.5;     // weight of the multiplicative term (hybrid)
};

struct OptimizerSpec {
    Family family = Family::Sgd;
    MomentumRule momentum;
    AdaptiveRule adaptive;
    UpdateRule update;
};

struct OptimizerState {
    std::uint64_t t = 0;
    Vector m_raw;  // EMA of gradients, before bias correction
    Vector v_raw;  // sum or EMA of squared gradients, before bias correction

    std::size_t dim() const { return m_raw.size(); }
};

// Default constants.
inline constexpr double kDefaultBeta1 = 0.9;
inline constexpr double kDefaultBeta2 = 0.99;
inline constexpr double kDefaultEpsilon = 1e-8;
inline constexpr double kAdagradEpsilon = 1e-10;
inline constexpr double kDefaultGamma = 0.5;

std::string_view to_string(Family family);
std::string_view to_string(UpdateKind kind);
std::string_view to_string(MomentumKind kind);
std::string_view to_string(AdaptiveKind kind);
Family parse_family(std::string_view name);
UpdateKind parse_update_kind(std::string_view name);

/// Preset φ/ψ pair for a family with default constants, combined with the
/// default rates for `rule`. Adam has no reference multiplicative or hybrid
/// rates, so those combinations keep the placeholder UpdateRule rates and
/// callers are expected to set them (see `has_default_rates`).
OptimizerSpec make_spec(Family family, UpdateKind rule);
bool has_default_rates(Family family, UpdateKind rule);

/// Throws InvalidRate / InvalidConfig when a constant is outside its domain.
void validate(const OptimizerSpec& spec);

OptimizerState init_state(std::size_t dim);

// The rule functions below expect `state.t` to already count the current
// step (t >= 1) and update the accumulators in place.
Vector momentum_phi(const MomentumRule& rule, OptimizerState& state,
                    std::span<const double> grad);
Vector adaptive_psi(const AdaptiveRule& rule, OptimizerState& state,
                    std::span<const double> grad);

Vector additive_update(std::span<const double> m, std::span<const double> l,
                       double eta);
Vector multiplicative_update(std::span<const double> theta,
                             std::span<const double> m,
                             std::span<const double> l, double eta_in,
                             double eta_out);
Vector hybrid_update(std::span<const double> theta, std::span<const double> m,
                     std::span<const double> l, double eta, double eta_in,
                     double eta_out, double gamma);
Vector apply_update_rule(const UpdateRule& rule, std::span<const double> theta,
                         std::span<const double> m, std::span<const double> l);

/// One full step: t += 1, m = φ, l = ψ, θ -= ξ(θ, m, l).
/// Throws Divergence (index = t) and leaves `theta` untouched when any
/// resulting coordinate is non-finite.
void step(const OptimizerSpec& spec, OptimizerState& state,
          std::span<double> theta, std::span<const double> grad);

// Process-wide tally of the per-coordinate step bound checked on every
// multiplicative (|dθ| <= η_out|θ|) and hybrid step. Tests read it to confirm
// the bound held everywhere.
struct UpdateBoundAudit {
    std::atomic<std::uint64_t> coordinates_checked{0};
    std::atomic<std::uint64_t> violations{0};
};
UpdateBoundAudit& update_bound_audit();

}  // namespace altopt
