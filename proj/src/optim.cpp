#include "altopt/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace altopt {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidDimension: return "invalid-dimension";
        case ErrorKind::DimensionMismatch: return "dimension-mismatch";
        case ErrorKind::NonFiniteGradient: return "non-finite-gradient";
        case ErrorKind::InvalidRate: return "invalid-rate";
        case ErrorKind::Divergence: return "divergence";
        case ErrorKind::InvalidConfig: return "invalid-config";
        case ErrorKind::InvalidStep: return "invalid-step";
        case ErrorKind::InvalidGrid: return "invalid-grid";
        case ErrorKind::StaleCache: return "stale-cache";
    }
    return "unknown";
}

std::string_view to_string(Family family) {
    switch (family) {
        case Family::Sgd: return "sgd";
        case Family::Adagrad: return "adagrad";
        case Family::Adam: return "adam";
        case Family::RmsProp: return "rmsprop";
    }
    return "unknown";
}

std::string_view to_string(UpdateKind kind) {
    switch (kind) {
        case UpdateKind::Additive: return "additive";
        case UpdateKind::Multiplicative: return "multiplicative";
        case UpdateKind::Hybrid: return "hybrid";
    }
    return "unknown";
}

std::string_view to_string(MomentumKind kind) {
    return kind == MomentumKind::Identity ? "identity" : "adam_ema";
}

std::string_view to_string(AdaptiveKind kind) {
    switch (kind) {
        case AdaptiveKind::Identity: return "identity";
        case AdaptiveKind::AdagradAccumulate: return "adagrad";
        case AdaptiveKind::AdamEma: return "adam_ema";
    }
    return "unknown";
}

Family parse_family(std::string_view name) {
    for (Family f : {Family::Sgd, Family::Adagrad, Family::Adam, Family::RmsProp}) {
        if (to_string(f) == name) return f;
    }
    throw Error(ErrorKind::InvalidConfig,
                "unknown optimizer family '" + std::string(name) +
                    "' (expected sgd, adagrad, adam or rmsprop)");
}

UpdateKind parse_update_kind(std::string_view name) {
    for (UpdateKind k : {UpdateKind::Additive, UpdateKind::Multiplicative, UpdateKind::Hybrid}) {
        if (to_string(k) == name) return k;
    }
    throw Error(ErrorKind::InvalidConfig,
                "unknown update rule '" + std::string(name) +
                    "' (expected additive, multiplicative or hybrid)");
}

namespace {

struct RatePair {
    double eta_in;
    double eta_out;
};

double default_additive_eta(Family family) {
    switch (family) {
        case Family::Sgd:
        case Family::Adagrad: return 0.01;
        case Family::Adam:
        case Family::RmsProp: return 0.001;
    }
    return 0.01;
}

// Empirical defaults for the image-classification experiments. Adam has none.
bool default_pair(Family family, UpdateKind rule, RatePair& out) {
    if (rule == UpdateKind::Multiplicative) {
        switch (family) {
            case Family::Sgd: out = {3.0, 0.3}; return true;
            case Family::Adagrad: out = {10.0, 0.02}; return true;
            case Family::RmsProp: out = {0.4, 0.2}; return true;
            case Family::Adam: return false;
        }
    }
    if (rule == UpdateKind::Hybrid) {
        switch (family) {
            case Family::Sgd: out = {6.0, 0.6}; return true;
            case Family::Adagrad: out = {8.0, 0.1}; return true;
            case Family::RmsProp: out = {0.01, 0.1}; return true;
            case Family::Adam: return false;
        }
    }
    return false;
}

void require_same_dim(std::span<const double> a, std::span<const double> b,
                      const char* what) {
    if (a.size() != b.size()) {
        throw Error(ErrorKind::DimensionMismatch,
                    std::string(what) + ": dimension mismatch (" +
                        std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + ")");
    }
}

void require_finite_gradient(std::span<const double> grad) {
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!std::isfinite(grad[i])) {
            throw Error(ErrorKind::NonFiniteGradient,
                        "non-finite gradient at coordinate " + std::to_string(i), i);
        }
    }
}

void require_started(const OptimizerState& state) {
    if (state.t == 0) {
        throw Error(ErrorKind::InvalidStep, "step counter must be advanced before rules run");
    }
}

void require_eta_out(double eta_out) {
    if (!(eta_out > 0.0 && eta_out <= 1.0)) {
        throw Error(ErrorKind::InvalidRate,
                    "eta_out must lie in (0, 1], got " + std::to_string(eta_out));
    }
}

void require_gamma(double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw Error(ErrorKind::InvalidRate,
                    "gamma must lie in [0, 1], got " + std::to_string(gamma));
    }
}

}  // namespace

bool has_default_rates(Family family, UpdateKind rule) {
    RatePair unused{};
    return rule == UpdateKind::Additive || default_pair(family, rule, unused);
}

OptimizerSpec make_spec(Family family, UpdateKind rule) {
    OptimizerSpec spec;
    spec.family = family;
    switch (family) {
        case Family::Sgd:
            break;
        case Family::Adagrad:
            spec.adaptive = {AdaptiveKind::AdagradAccumulate, kDefaultBeta2, kAdagradEpsilon};
            break;
        case Family::Adam:
            spec.momentum = {MomentumKind::AdamEma, kDefaultBeta1};
            spec.adaptive = {AdaptiveKind::AdamEma, kDefaultBeta2, kDefaultEpsilon};
            break;
        case Family::RmsProp:
            spec.momentum = {MomentumKind::AdamEma, 0.0};
            spec.adaptive = {AdaptiveKind::AdamEma, kDefaultBeta2, kDefaultEpsilon};
            break;
    }
    spec.update.kind = rule;
    spec.update.eta = default_additive_eta(family);
    spec.update.gamma = kDefaultGamma;
    RatePair pair{};
    if (default_pair(family, rule, pair)) {
        spec.update.eta_in = pair.eta_in;
        spec.update.eta_out = pair.eta_out;
    }
    return spec;
}

void validate(const OptimizerSpec& spec) {
    if (spec.momentum.kind == MomentumKind::AdamEma &&
        !(spec.momentum.beta1 >= 0.0 && spec.momentum.beta1 < 1.0)) {
        throw Error(ErrorKind::InvalidRate, "beta1 must lie in [0, 1)");
    }
    if (spec.adaptive.kind == AdaptiveKind::AdamEma &&
        !(spec.adaptive.beta2 >= 0.0 && spec.adaptive.beta2 < 1.0)) {
        throw Error(ErrorKind::InvalidRate, "beta2 must lie in [0, 1)");
    }
    if (spec.adaptive.kind != AdaptiveKind::Identity && !(spec.adaptive.epsilon > 0.0)) {
        throw Error(ErrorKind::InvalidRate, "epsilon must be positive");
    }
    const UpdateRule& u = spec.update;
    if (u.kind != UpdateKind::Multiplicative && !(u.eta >= 0.0 && std::isfinite(u.eta))) {
        throw Error(ErrorKind::InvalidRate, "eta must be finite and non-negative");
    }
    if (u.kind != UpdateKind::Additive) {
        if (!(u.eta_in >= 0.0 && std::isfinite(u.eta_in))) {
            throw Error(ErrorKind::InvalidRate, "eta_in must be finite and non-negative");
        }
        require_eta_out(u.eta_out);
    }
    if (u.kind == UpdateKind::Hybrid) require_gamma(u.gamma);
}

OptimizerState init_state(std::size_t dim) {
    if (dim == 0) throw Error(ErrorKind::InvalidDimension, "optimizer state needs dim >= 1");
    OptimizerState state;
    state.m_raw.assign(dim, 0.0);
    state.v_raw.assign(dim, 0.0);
    return state;
}

Vector momentum_phi(const MomentumRule& rule, OptimizerState& state,
                    std::span<const double> grad) {
    require_same_dim(state.m_raw, grad, "momentum");
    require_finite_gradient(grad);
    if (rule.kind == MomentumKind::Identity) return Vector(grad.begin(), grad.end());

    require_started(state);
    const double b1 = rule.beta1;
    const double correction = 1.0 - std::pow(b1, static_cast<double>(state.t));
    Vector m(grad.size());
    for (std::size_t i = 0; i < grad.size(); ++i) {
        state.m_raw[i] = b1 * state.m_raw[i] + (1.0 - b1) * grad[i];
        m[i] = state.m_raw[i] / correction;
    }
    return m;
}

Vector adaptive_psi(const AdaptiveRule& rule, OptimizerState& state,
                    std::span<const double> grad) {
    require_same_dim(state.v_raw, grad, "adaptive rate");
    require_finite_gradient(grad);
    Vector l(grad.size(), 1.0);
    switch (rule.kind) {
        case AdaptiveKind::Identity:
            break;
        case AdaptiveKind::AdagradAccumulate:
            for (std::size_t i = 0; i < grad.size(); ++i) {
                state.v_raw[i] += grad[i] * grad[i];
                l[i] = 1.0 / (std::sqrt(state.v_raw[i]) + rule.epsilon);
            }
            break;
        case AdaptiveKind::AdamEma: {
            require_started(state);
            const double b2 = rule.beta2;
            const double correction = 1.0 - std::pow(b2, static_cast<double>(state.t));
            for (std::size_t i = 0; i < grad.size(); ++i) {
                state.v_raw[i] = b2 * state.v_raw[i] + (1.0 - b2) * grad[i] * grad[i];
                l[i] = 1.0 / (std::sqrt(state.v_raw[i] / correction) + rule.epsilon);
            }
            break;
        }
    }
    return l;
}

Vector additive_update(std::span<const double> m, std::span<const double> l, double eta) {
    require_same_dim(m, l, "additive update");
    Vector delta(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) delta[i] = eta * m[i] * l[i];
    return delta;
}

Vector multiplicative_update(std::span<const double> theta, std::span<const double> m,
                             std::span<const double> l, double eta_in, double eta_out) {
    require_same_dim(theta, m, "multiplicative update");
    require_same_dim(m, l, "multiplicative update");
    require_eta_out(eta_out);
    Vector delta(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        // (|θ| * tanh) * η_out keeps the rounded result below fl(|θ| * η_out).
        delta[i] = std::abs(theta[i]) * std::tanh(eta_in * m[i] * l[i]) * eta_out;
    }
    return delta;
}

Vector hybrid_update(std::span<const double> theta, std::span<const double> m,
                     std::span<const double> l, double eta, double eta_in,
                     double eta_out, double gamma) {
    require_gamma(gamma);
    const Vector mult = multiplicative_update(theta, m, l, eta_in, eta_out);
    const Vector add = additive_update(m, l, eta);
    Vector delta(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        delta[i] = gamma * mult[i] + (1.0 - gamma) * add[i];
    }
    return delta;
}

Vector apply_update_rule(const UpdateRule& rule, std::span<const double> theta,
                         std::span<const double> m, std::span<const double> l) {
    switch (rule.kind) {
        case UpdateKind::Additive:
            require_same_dim(theta, m, "additive update");
            return additive_update(m, l, rule.eta);
        case UpdateKind::Multiplicative:
            return multiplicative_update(theta, m, l, rule.eta_in, rule.eta_out);
        case UpdateKind::Hybrid:
            return hybrid_update(theta, m, l, rule.eta, rule.eta_in, rule.eta_out, rule.gamma);
    }
    return {};
}

UpdateBoundAudit& update_bound_audit() {
    static UpdateBoundAudit audit;
    return audit;
}

void step(const OptimizerSpec& spec, OptimizerState& state, std::span<double> theta,
          std::span<const double> grad) {
    require_same_dim(theta, grad, "step");
    require_same_dim(state.m_raw, theta, "step");

    ++state.t;
    const Vector m = momentum_phi(spec.momentum, state, grad);
    const Vector l = adaptive_psi(spec.adaptive, state, grad);
    const Vector delta = apply_update_rule(spec.update, theta, m, l);

    if (spec.update.kind != UpdateKind::Additive) {
        const UpdateRule& u = spec.update;
        const bool hybrid = u.kind == UpdateKind::Hybrid;
        std::uint64_t bad = 0;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            double bound = std::abs(theta[i]) * u.eta_out;
            if (hybrid) {
                // The convex combination is rounded once more than its parts.
                bound = u.gamma * bound + (1.0 - u.gamma) * u.eta * std::abs(m[i] * l[i]);
                bound *= 1.0 + 4.0 * std::numeric_limits<double>::epsilon();
            }
            if (std::abs(delta[i]) > bound) ++bad;
        }
        auto& audit = update_bound_audit();
        audit.coordinates_checked.fetch_add(theta.size(), std::memory_order_relaxed);
        if (bad != 0) audit.violations.fetch_add(bad, std::memory_order_relaxed);
    }

    Vector next(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        next[i] = theta[i] - delta[i];
        if (!std::isfinite(next[i])) {
            throw Error(ErrorKind::Divergence,
                        "non-finite parameter after iteration " + std::to_string(state.t),
                        state.t);
        }
    }
    std::copy(next.begin(), next.end(), theta.begin());
}

}  // namespace altopt
