#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "bgf/errors.hpp"

namespace bgf {

/// History of tailoring-variable vectors h_0..h_t (one vector per period).
using TailoringHistory = std::vector<std::vector<double>>;

/// A treatment regime: a rule assigning treatment at each period, either
/// deterministic (static sequence or dynamic rule) or random (an assignment
/// probability given histories).
class TreatmentRegime {
public:
    enum class Kind { DeterministicStatic, DeterministicDynamic, Random };

    using Rule = std::function<int(const TailoringHistory&, const std::vector<int>&)>;
    using Distribution = std::function<double(const TailoringHistory&, const std::vector<int>&)>;

    static TreatmentRegime deterministic_static(std::vector<int> sequence, std::string id = "static") {
        TreatmentRegime r;
        r.kind_ = Kind::DeterministicStatic;
        r.sequence_ = std::move(sequence);
        r.id_ = std::move(id);
        return r;
    }

    static TreatmentRegime always_treat(int horizon) {
        return deterministic_static(std::vector<int>(horizon, 1), "always");
    }

    static TreatmentRegime never_treat(int horizon) {
        return deterministic_static(std::vector<int>(horizon, 0), "never");
    }

    static TreatmentRegime deterministic_dynamic(Rule rule, std::string id = "dynamic") {
        TreatmentRegime r;
        r.kind_ = Kind::DeterministicDynamic;
        r.rule_ = std::move(rule);
        r.id_ = std::move(id);
        return r;
    }

    static TreatmentRegime random(Distribution dist, std::string id = "random") {
        TreatmentRegime r;
        r.kind_ = Kind::Random;
        r.dist_ = std::move(dist);
        r.id_ = std::move(id);
        return r;
    }

    Kind kind() const { return kind_; }
    bool deterministic() const { return kind_ != Kind::Random; }
    bool dynamic() const { return kind_ != Kind::DeterministicStatic; }
    const std::string& id() const { return id_; }

    /// Assigns treatment at period t = a_hist.size(). Deterministic kinds
    /// ignore u; the random kind returns 1 iff u < f(a_t=1 | histories).
    int assign(const TailoringHistory& h_hist, const std::vector<int>& a_hist, double u) const {
        switch (kind_) {
        case Kind::DeterministicStatic: {
            const std::size_t t = a_hist.size();
            if (t >= sequence_.size())
                throw RegimeKindMismatch("static regime sequence shorter than the horizon");
            return sequence_[t];
        }
        case Kind::DeterministicDynamic:
            return rule_(h_hist, a_hist) ? 1 : 0;
        case Kind::Random: {
            const double p = dist_(h_hist, a_hist);
            if (p < 0.0 || p > 1.0)
                throw NumericError("random regime returned probability outside [0,1]");
            return u < p ? 1 : 0;
        }
        }
        return 0;
    }

private:
    TreatmentRegime() = default;
    Kind kind_ = Kind::DeterministicStatic;
    std::vector<int> sequence_;
    Rule rule_;
    Distribution dist_;
    std::string id_;
};

} // namespace bgf
