#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "autocoach/checkpoint.hpp"
#include "autocoach/nn.hpp"
#include "autocoach/rng.hpp"
#include "autocoach/sim.hpp"

namespace autocoach::rl {

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Hyperparams {
    double lr_actor = 5e-4;
    double lr_critic = 1e-3;
    double gamma = 0.99;
    double clip_eps = 0.2;
    int epochs = 50;
    double gae_lambda = 0.95;
    double entropy_coef = 0.01;
    double grad_norm_clip = 0.5;
};

inline constexpr int kHeadSizes[3] = {5, 5, 3};

// Running per-feature normalization (Welford). Training updates it each
// observation; evaluation uses the stats frozen into the checkpoint.
class ObsNormalizer {
public:
    explicit ObsNormalizer(int dim = Observation::width())
        : mean_(nn::Vector::Zero(dim)), m2_(nn::Vector::Zero(dim)) {}

    void update(const nn::Vector& x) {
        count_ += 1.0;
        const nn::Vector delta = x - mean_;
        mean_ += delta / count_;
        m2_ += delta.cwiseProduct(x - mean_);
    }

    nn::Vector normalize(const nn::Vector& x) const {
        nn::Vector out(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double var = count_ > 1.0 ? m2_(i) / count_ : 1.0;
            out(i) = std::clamp((x(i) - mean_(i)) / std::sqrt(var + 1e-8), -10.0, 10.0);
        }
        return out;
    }

    double count() const { return count_; }
    const nn::Vector& mean() const { return mean_; }
    const nn::Vector& m2() const { return m2_; }
    void restore(nn::Vector mean, nn::Vector m2, double count) {
        mean_ = std::move(mean);
        m2_ = std::move(m2);
        count_ = count;
    }

private:
    nn::Vector mean_, m2_;
    double count_ = 0.0;
};

struct Policy {
    nn::Mlp actor;
    nn::Mlp critic;
    ObsNormalizer normalizer;

    static Policy make(std::uint64_t seed, int obs_dim = Observation::width()) {
        Rng rng(derive_seed(seed, "policy-init"));
        Policy p;
        p.actor = nn::Mlp::make(obs_dim, 256, 128, {kHeadSizes[0], kHeadSizes[1], kHeadSizes[2]}, rng);
        p.critic = nn::Mlp::make(obs_dim, 256, 128, {1}, rng, 1.0);
        p.normalizer = ObsNormalizer(obs_dim);
        return p;
    }
};

enum class ActMode { sample, greedy };

struct ActResult {
    int action[3] = {0, 0, 0};
    double log_prob = 0.0;  // joint, sum over heads
    double value = 0.0;
};

namespace detail {

// Row-wise log-softmax, numerically stabilized.
inline nn::Matrix log_softmax(const nn::Matrix& logits) {
    nn::Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double mx = logits.row(r).maxCoeff();
        const double lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
        out.row(r) = logits.row(r).array() - lse;
    }
    return out;
}

}  // namespace detail

// One policy query: per-head categorical (sample) or argmax (greedy), joint
// log-probability as the sum over heads, plus the critic value. The
// observation must already be normalized.
inline ActResult act(const Policy& policy, const nn::Vector& norm_obs, ActMode mode, Rng& rng) {
    const nn::Matrix x = norm_obs.transpose();
    const auto acts = policy.actor.forward(x);
    ActResult res;
    for (int k = 0; k < 3; ++k) {
        const nn::Matrix& logits = acts.logits[static_cast<std::size_t>(k)];
        if (!logits.allFinite()) throw NumericalError("non-finite policy logits");
        const nn::Matrix logp = detail::log_softmax(logits);
        int choice = 0;
        if (mode == ActMode::greedy) {
            logp.row(0).maxCoeff(&choice);
        } else {
            const double u = rng.uniform();
            double cum = 0.0;
            choice = static_cast<int>(logp.cols()) - 1;
            for (Eigen::Index j = 0; j < logp.cols(); ++j) {
                cum += std::exp(logp(0, j));
                if (u < cum) {
                    choice = static_cast<int>(j);
                    break;
                }
            }
        }
        res.action[k] = choice;
        res.log_prob += logp(0, choice);
    }
    const auto vacts = policy.critic.forward(x);
    if (!vacts.logits[0].allFinite()) throw NumericalError("non-finite critic output");
    res.value = vacts.logits[0](0, 0);
    return res;
}

// Per-step rollout storage. Observations are stored normalized exactly as
// the policy saw them; log-probabilities are from the collection-time policy.
struct RolloutBuffer {
    std::vector<nn::Vector> obs;
    std::vector<std::array<int, 3>> actions;
    std::vector<double> log_probs;
    std::vector<double> rewards;
    std::vector<double> values;
    std::vector<std::uint8_t> dones;
    int episodes = 0;

    std::size_t size() const { return obs.size(); }
    bool empty() const { return obs.empty(); }

    void push(nn::Vector o, const int action[3], double logp, double reward, double value, bool done) {
        obs.push_back(std::move(o));
        actions.push_back({action[0], action[1], action[2]});
        log_probs.push_back(logp);
        rewards.push_back(reward);
        values.push_back(value);
        dones.push_back(done ? 1 : 0);
        if (done) ++episodes;
    }

    void clear() {
        obs.clear();
        actions.clear();
        log_probs.clear();
        rewards.clear();
        values.clear();
        dones.clear();
        episodes = 0;
    }
};

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> returns;
};

// Generalized advantage estimation with terminal bootstrap value 0.
inline GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                             const std::vector<std::uint8_t>& dones, double gamma, double lambda) {
    if (rewards.size() != values.size() || rewards.size() != dones.size())
        throw UsageError("compute_gae: length mismatch");
    const std::size_t n = rewards.size();
    GaeResult out;
    out.advantages.assign(n, 0.0);
    out.returns.assign(n, 0.0);
    double adv = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        const double not_done = dones[i] ? 0.0 : 1.0;
        const double next_value = (i + 1 < n) ? values[i + 1] : 0.0;
        const double delta = rewards[i] + gamma * next_value * not_done - values[i];
        adv = delta + gamma * lambda * not_done * adv;
        out.advantages[i] = adv;
        out.returns[i] = adv + values[i];
    }
    return out;
}

struct UpdateDiagnostics {
    double mean_ratio = 1.0;
    double clip_fraction = 0.0;
    double entropy = 0.0;
    double actor_loss = 0.0;
    double critic_loss = 0.0;
    double actor_grad_norm = 0.0;
    double critic_grad_norm = 0.0;
    bool aborted_nan = false;
};

struct ActorBatch {
    nn::Matrix obs;                          // (N x obs_dim)
    std::vector<std::array<int, 3>> actions;
    std::vector<double> old_log_probs;
    std::vector<double> advantages;          // already normalized
};

struct ActorGradResult {
    nn::Mlp::Grads grads;
    double surrogate = 0.0;
    double entropy = 0.0;
    double mean_ratio = 1.0;
    double clip_fraction = 0.0;
    double loss = 0.0;
    double surrogate_grad_sq_norm = 0.0;  // clip-surrogate term alone
};

// Clipped-surrogate policy gradient with entropy bonus, evaluated over the
// full batch. Factored out of ppo_update so the finite-difference and
// zero-advantage checks can call it directly. `isolate_surrogate` runs an
// extra backward pass to report the clip-surrogate gradient norm alone.
inline ActorGradResult compute_actor_grads(const nn::Mlp& actor, const ActorBatch& batch,
                                           const Hyperparams& hp, bool isolate_surrogate = false) {
    const auto acts = actor.forward(batch.obs);
    const Eigen::Index n = batch.obs.rows();
    const double inv_n = 1.0 / static_cast<double>(n);

    std::vector<nn::Matrix> logp(3), prob(3);
    for (int k = 0; k < 3; ++k) {
        logp[static_cast<std::size_t>(k)] = detail::log_softmax(acts.logits[static_cast<std::size_t>(k)]);
        prob[static_cast<std::size_t>(k)] = logp[static_cast<std::size_t>(k)].array().exp();
    }

    ActorGradResult res;
    std::vector<nn::Matrix> d_surr(3), d_ent(3);
    for (int k = 0; k < 3; ++k) {
        d_surr[static_cast<std::size_t>(k)] = nn::Matrix::Zero(n, kHeadSizes[k]);
        d_ent[static_cast<std::size_t>(k)] = nn::Matrix::Zero(n, kHeadSizes[k]);
    }

    double sum_ratio = 0.0, clipped = 0.0, sum_surr = 0.0, sum_ent = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double new_logp = 0.0;
        for (int k = 0; k < 3; ++k)
            new_logp += logp[static_cast<std::size_t>(k)](i, batch.actions[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
        const double ratio = std::exp(new_logp - batch.old_log_probs[static_cast<std::size_t>(i)]);
        const double adv = batch.advantages[static_cast<std::size_t>(i)];
        const double unclipped = ratio * adv;
        const double ratio_clipped = std::clamp(ratio, 1.0 - hp.clip_eps, 1.0 + hp.clip_eps);
        const double clipped_term = ratio_clipped * adv;

        sum_ratio += ratio;
        if (std::abs(ratio - 1.0) > hp.clip_eps) clipped += 1.0;
        sum_surr += std::min(unclipped, clipped_term);

        // Gradient flows through the ratio only when the unclipped branch is
        // the active minimum (ties included).
        const double d_ratio = unclipped <= clipped_term ? adv : 0.0;
        const double d_logp = d_ratio * ratio;  // d ratio / d new_logp = ratio

        for (int k = 0; k < 3; ++k) {
            const int a = batch.actions[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            // d(-surr)/d logits = -d_logp * (onehot - p)
            for (int j = 0; j < kHeadSizes[k]; ++j) {
                const double onehot = j == a ? 1.0 : 0.0;
                d_surr[static_cast<std::size_t>(k)](i, j) =
                    -inv_n * d_logp * (onehot - prob[static_cast<std::size_t>(k)](i, j));
            }
            // Entropy H = -sum p*logp; dH/dlogit_j = -p_j*(logp_j + H).
            double h = 0.0;
            for (int j = 0; j < kHeadSizes[k]; ++j)
                h -= prob[static_cast<std::size_t>(k)](i, j) * logp[static_cast<std::size_t>(k)](i, j);
            sum_ent += h;
            for (int j = 0; j < kHeadSizes[k]; ++j) {
                const double dh = -prob[static_cast<std::size_t>(k)](i, j) *
                                  (logp[static_cast<std::size_t>(k)](i, j) + h);
                d_ent[static_cast<std::size_t>(k)](i, j) = -hp.entropy_coef * inv_n * dh;
            }
        }
    }

    res.surrogate = sum_surr * inv_n;
    res.entropy = sum_ent * inv_n;
    res.mean_ratio = sum_ratio * inv_n;
    res.clip_fraction = clipped * inv_n;
    res.loss = -res.surrogate - hp.entropy_coef * res.entropy;

    {
        if (isolate_surrogate) {
            const auto surr_grads = actor.backward(batch.obs, acts, d_surr);
            res.surrogate_grad_sq_norm = surr_grads.squared_norm();
        }
        std::vector<nn::Matrix> d_total(3);
        for (int k = 0; k < 3; ++k)
            d_total[static_cast<std::size_t>(k)] =
                d_surr[static_cast<std::size_t>(k)] + d_ent[static_cast<std::size_t>(k)];
        res.grads = actor.backward(batch.obs, acts, d_total);
    }
    return res;
}

// One PPO update over the whole buffer: `epochs` passes of full-batch ascent
// on the clipped surrogate (actor) and squared-error regression (critic).
// On a non-finite loss the pre-update parameters are restored. The buffer is
// cleared afterward in both cases.
inline UpdateDiagnostics ppo_update(Policy& policy, nn::Adam& actor_opt, nn::Adam& critic_opt,
                                    RolloutBuffer& buffer, const Hyperparams& hp) {
    if (buffer.episodes < 1) throw UsageError("ppo_update: buffer holds no complete episode");

    const Eigen::Index n = static_cast<Eigen::Index>(buffer.size());
    const Eigen::Index dim = buffer.obs[0].size();
    ActorBatch batch;
    batch.obs = nn::Matrix(n, dim);
    for (Eigen::Index i = 0; i < n; ++i) batch.obs.row(i) = buffer.obs[static_cast<std::size_t>(i)].transpose();
    batch.actions = buffer.actions;
    batch.old_log_probs = buffer.log_probs;

    const GaeResult gae = compute_gae(buffer.rewards, buffer.values, buffer.dones, hp.gamma, hp.gae_lambda);

    // Normalize advantages to zero mean / unit variance over the batch.
    double mean = 0.0;
    for (double a : gae.advantages) mean += a;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double a : gae.advantages) var += (a - mean) * (a - mean);
    var /= static_cast<double>(n);
    const double inv_std = 1.0 / (std::sqrt(var) + 1e-8);
    batch.advantages.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        batch.advantages[static_cast<std::size_t>(i)] = (gae.advantages[static_cast<std::size_t>(i)] - mean) * inv_std;

    nn::Vector returns(n);
    for (Eigen::Index i = 0; i < n; ++i) returns(i) = gae.returns[static_cast<std::size_t>(i)];

    const nn::Mlp actor_snapshot = policy.actor;
    const nn::Mlp critic_snapshot = policy.critic;

    UpdateDiagnostics diag;
    double acc_ratio = 0.0, acc_clip = 0.0, acc_ent = 0.0, acc_aloss = 0.0, acc_closs = 0.0;
    double acc_agn = 0.0, acc_cgn = 0.0;

    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        ActorGradResult ag = compute_actor_grads(policy.actor, batch, hp);

        const auto vacts = policy.critic.forward(batch.obs);
        const nn::Vector v = vacts.logits[0].col(0);
        const nn::Vector err = v - returns;
        const double critic_loss = err.squaredNorm() / static_cast<double>(n);

        if (!std::isfinite(ag.loss) || !std::isfinite(critic_loss)) {
            policy.actor = actor_snapshot;
            policy.critic = critic_snapshot;
            diag.aborted_nan = true;
            buffer.clear();
            return diag;
        }

        std::vector<nn::Matrix> d_v{nn::Matrix(err * (2.0 / static_cast<double>(n)))};
        nn::Mlp::Grads cg = policy.critic.backward(batch.obs, vacts, d_v);

        acc_agn += nn::clip_grad_norm(ag.grads, hp.grad_norm_clip);
        acc_cgn += nn::clip_grad_norm(cg, hp.grad_norm_clip);
        actor_opt.step(policy.actor, ag.grads);
        critic_opt.step(policy.critic, cg);

        acc_ratio += ag.mean_ratio;
        acc_clip += ag.clip_fraction;
        acc_ent += ag.entropy;
        acc_aloss += ag.loss;
        acc_closs += critic_loss;
    }

    if (!policy.actor.finite() || !policy.critic.finite()) {
        policy.actor = actor_snapshot;
        policy.critic = critic_snapshot;
        diag.aborted_nan = true;
        buffer.clear();
        return diag;
    }

    const double inv_e = 1.0 / hp.epochs;
    diag.mean_ratio = acc_ratio * inv_e;
    diag.clip_fraction = acc_clip * inv_e;
    diag.entropy = acc_ent * inv_e;
    diag.actor_loss = acc_aloss * inv_e;
    diag.critic_loss = acc_closs * inv_e;
    diag.actor_grad_norm = acc_agn * inv_e;
    diag.critic_grad_norm = acc_cgn * inv_e;
    buffer.clear();
    return diag;
}

// ---------------------------------------------------------------------------
// Policy checkpointing (parameters + frozen normalizer stats).

inline void save_policy(const std::string& path, const Policy& policy) {
    std::vector<NamedTensor> ts;
    append_mlp_tensors(ts, "actor", policy.actor);
    append_mlp_tensors(ts, "critic", policy.critic);
    ts.push_back(tensor_of("norm.mean", policy.normalizer.mean()));
    ts.push_back(tensor_of("norm.m2", policy.normalizer.m2()));
    nn::Vector count(1);
    count(0) = policy.normalizer.count();
    ts.push_back(tensor_of("norm.count", count));
    write_tensors(path, ts);
}

inline Policy load_policy(const std::string& path) {
    const auto ts = read_tensors(path);
    Policy p;
    p.actor = mlp_from_tensors(ts, "actor", 3);
    p.critic = mlp_from_tensors(ts, "critic", 1);
    const nn::Vector mean = vector_of(find_tensor(ts, "norm.mean"));
    const nn::Vector m2 = vector_of(find_tensor(ts, "norm.m2"));
    const double count = vector_of(find_tensor(ts, "norm.count"))(0);
    p.normalizer = ObsNormalizer(static_cast<int>(mean.size()));
    p.normalizer.restore(mean, m2, count);
    return p;
}

}  // namespace autocoach::rl
