#pragma once

#include "nolana/types.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nolana {

enum class LossKind { Hinge, Logistic, Squared };

inline bool is_classification(LossKind kind) {
    return kind != LossKind::Squared;
}

inline std::string to_string(LossKind kind) {
    switch (kind) {
        case LossKind::Hinge: return "hinge";
        case LossKind::Logistic: return "logistic";
        case LossKind::Squared: return "squared";
    }
    return "?";
}

inline LossKind loss_from_string(const std::string& name) {
    if (name == "hinge") return LossKind::Hinge;
    if (name == "logistic") return LossKind::Logistic;
    if (name == "squared") return LossKind::Squared;
    throw ConfigError("unknown loss '" + name + "'");
}

struct LossGrad {
    double value;
    double dscore;  // derivative w.r.t. the score (subgradient at kinks)
};

// Loss and score-derivative at (label, score). Hinge takes the zero
// subgradient at the kink; logistic is evaluated in the overflow-safe
// branch form.
inline LossGrad loss_and_grad(LossKind kind, double y, double score) {
    if (is_classification(kind) && y != 1.0 && y != -1.0)
        throw std::invalid_argument("classification losses require labels in {-1,+1}");

    switch (kind) {
        case LossKind::Hinge: {
            const double margin = 1.0 - y * score;
            if (margin > 0.0) return {margin, -y};
            return {0.0, 0.0};
        }
        case LossKind::Logistic: {
            const double t = y * score;
            const double value =
                t > 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
            return {value, -y / (1.0 + std::exp(t))};
        }
        case LossKind::Squared: {
            const double residual = y - score;
            return {residual * residual, -2.0 * residual};
        }
    }
    throw std::logic_error("unreachable loss kind");
}

}  // namespace nolana
