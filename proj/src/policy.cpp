#include "marketrl/policy.hpp"

#include "marketrl/distributions.hpp"
#include "marketrl/errors.hpp"

namespace marketrl {

namespace {

int argmax_of(const Eigen::VectorXd& v) {
    Eigen::Index i = 0;
    v.maxCoeff(&i);
    return static_cast<int>(i);
}

} // namespace

int act(const Policy& policy, const Eigen::VectorXd& observation, Rng& rng, ActMode mode,
        double epsilon) {
    struct Visitor {
        const Eigen::VectorXd& obs;
        Rng& rng;
        ActMode mode;
        double epsilon;

        int operator()(const ActorCriticPolicy& p) const {
            const Eigen::VectorXd logits = forward(p.policy, obs);
            if (mode == ActMode::kGreedy) return argmax_of(logits);
            return categorical_sample(CategoricalDist{logits}, rng);
        }
        int operator()(const QPolicy& p) const {
            const Eigen::VectorXd q = forward(p.q, obs);
            if (mode == ActMode::kSample && rng.uniform() < epsilon)
                return rng.uniform_int(0, static_cast<int>(q.size()) - 1);
            return argmax_of(q);
        }
        int operator()(const FixedPolicy& p) const {
            const int index = p.units - p.q_min;
            if (index < 0) throw ContractViolation("act: fixed units below q_min");
            return index;
        }
        int operator()(const RandomPolicy& p) const {
            if (p.action_count <= 0)
                throw ContractViolation("act: random policy needs action_count > 0");
            return rng.uniform_int(0, p.action_count - 1);
        }
    };
    return std::visit(Visitor{observation, rng, mode, epsilon}, policy);
}

int policy_action_count(const Policy& policy) {
    struct Visitor {
        int operator()(const ActorCriticPolicy& p) const {
            return static_cast<int>(p.policy.layer_sizes.back());
        }
        int operator()(const QPolicy& p) const {
            return static_cast<int>(p.q.layer_sizes.back());
        }
        int operator()(const FixedPolicy& p) const { return p.units - p.q_min + 1; }
        int operator()(const RandomPolicy& p) const { return p.action_count; }
    };
    return std::visit(Visitor{}, policy);
}

} // namespace marketrl
