#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <utility>
#include <vector>

#include "sysrisk/errors.hpp"
#include "sysrisk/rng.hpp"

namespace sysrisk {

/// Finite discrete distribution given by (value, probability) atoms.
/// All expectations in the limit equations are exact sums over atoms,
/// so no quadrature or sampling error enters the analytic pipeline.
class DiscreteDist {
public:
    struct Atom {
        double value = 0.0;
        double prob = 0.0;
    };

    DiscreteDist() = default;

    explicit DiscreteDist(std::vector<Atom> atoms) : atoms_(std::move(atoms)) { validate(); }

    DiscreteDist(std::initializer_list<Atom> atoms) : atoms_(atoms) { validate(); }

    /// Distribution concentrated on a single value.
    [[nodiscard]] static DiscreteDist point(double value) { return DiscreteDist({{value, 1.0}}); }

    /// Two-point law {0 w.p. 1-w, hi w.p. w}.
    [[nodiscard]] static DiscreteDist binary(double w, double hi) {
        if (w <= 0.0 || w >= 1.0) return DiscreteDist({{w <= 0.0 ? 0.0 : hi, 1.0}});
        return DiscreteDist({{0.0, 1.0 - w}, {hi, w}});
    }

    /// Indicator law {0 w.p. 1-p, 1 w.p. p}.
    [[nodiscard]] static DiscreteDist indicator(double p) { return binary(p, 1.0); }

    [[nodiscard]] const std::vector<Atom>& atoms() const noexcept { return atoms_; }
    [[nodiscard]] std::size_t size() const noexcept { return atoms_.size(); }

    [[nodiscard]] double mean() const noexcept {
        double m = 0.0;
        for (const auto& a : atoms_) m += a.value * a.prob;
        return m;
    }

    /// E[f(V)] as an exact finite sum.
    template <class F>
    [[nodiscard]] double mean_of(F&& f) const {
        double m = 0.0;
        for (const auto& a : atoms_) m += f(a.value) * a.prob;
        return m;
    }

    [[nodiscard]] double min_value() const noexcept {
        double m = atoms_.front().value;
        for (const auto& a : atoms_) m = std::min(m, a.value);
        return m;
    }

    [[nodiscard]] double max_value() const noexcept {
        double m = atoms_.front().value;
        for (const auto& a : atoms_) m = std::max(m, a.value);
        return m;
    }

    [[nodiscard]] bool is_point_mass() const noexcept {
        for (const auto& a : atoms_)
            if (a.value != atoms_.front().value) return false;
        return true;
    }

    /// True when every atom value lies in {0, 1}.
    [[nodiscard]] bool is_indicator() const noexcept {
        for (const auto& a : atoms_)
            if (a.value != 0.0 && a.value != 1.0) return false;
        return true;
    }

    [[nodiscard]] bool support_in_unit_interval() const noexcept {
        return min_value() >= 0.0 && max_value() <= 1.0;
    }

    [[nodiscard]] bool same_atoms(const DiscreteDist& other) const noexcept {
        if (atoms_.size() != other.atoms_.size()) return false;
        for (std::size_t i = 0; i < atoms_.size(); ++i)
            if (atoms_[i].value != other.atoms_[i].value || atoms_[i].prob != other.atoms_[i].prob)
                return false;
        return true;
    }

    /// Inverse-CDF draw; atom order is part of the deterministic contract.
    [[nodiscard]] double sample(SplitMix64& rng) const noexcept {
        double u = rng.next_double();
        double acc = 0.0;
        for (const auto& a : atoms_) {
            acc += a.prob;
            if (u < acc) return a.value;
        }
        return atoms_.back().value;
    }

private:
    void validate() const {
        if (atoms_.empty())
            throw Error(ErrorCode::InvalidDistribution, "distribution has no atoms");
        double total = 0.0;
        for (const auto& a : atoms_) {
            if (!std::isfinite(a.value) || !std::isfinite(a.prob))
                throw Error(ErrorCode::InvalidDistribution, "non-finite atom");
            if (a.prob < 0.0)
                throw Error(ErrorCode::InvalidDistribution, "negative probability");
            total += a.prob;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw Error(ErrorCode::InvalidDistribution, "probabilities sum to " + std::to_string(total));
    }

    std::vector<Atom> atoms_;
};

}  // namespace sysrisk
