#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ucbqrl {

/// rewards[h][s][a], each value in [0, 1].
using Rewards = std::vector<std::vector<std::vector<double>>>;
/// kernel[h][s][a] is a probability vector over next states.
using Kernel = std::vector<std::vector<std::vector<std::vector<double>>>>;

/// Finite-horizon tabular MDP with deterministic per-(h,s,a) rewards and a
/// fixed start state. Immutable by convention after construction.
struct TabularMDP {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  int start_state = 0;
  Rewards rewards;
  Kernel kernel;
};

/// Deterministic time-indexed decision rule: actions[h][s] is the action
/// taken in state s at stage h.
struct MarkovPolicy {
  std::vector<std::vector<int>> actions;

  static MarkovPolicy zeros(int horizon, int num_states) {
    MarkovPolicy p;
    p.actions.assign(horizon, std::vector<int>(num_states, 0));
    return p;
  }

  int horizon() const { return static_cast<int>(actions.size()); }
  int num_states() const {
    return actions.empty() ? 0 : static_cast<int>(actions[0].size());
  }
  int at(int h, int s) const { return actions[h][s]; }

  friend bool operator==(const MarkovPolicy&, const MarkovPolicy&) = default;
};

struct EpisodeStep {
  int step = 0;
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
};

/// One rollout of length H; next_state of step h equals state of step h+1
/// and the first state is the MDP's start state.
using EpisodeTrace = std::vector<EpisodeStep>;

/// Raised when a parsed or constructed instance breaks a structural
/// invariant; carries the full violation list.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& context, std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Checks shapes, kernel-row simplex membership (tolerance 1e-9), reward
/// range, and start-state bounds. Returns one message per violation; empty
/// means the instance is well-formed.
std::vector<std::string> validate(const TabularMDP& mdp);

/// Random instance generator, a pure function of its arguments.
///
/// Kernel rows come from a Dirichlet(1,..,1) sampler with entries below
/// min_atom zeroed and the row renormalized, so every surviving entry is
/// either 0 or at least min_atom. Rewards are drawn from the grid
/// {0, 0.1, ..., 1.0}, which keeps return distributions atomic.
/// Requires S, A, H >= 1 and 0 <= min_atom <= 1/S.
TabularMDP gen_random(int num_states, int num_actions, int horizon,
                      std::uint64_t seed, double min_atom = 0.0);

/// Rolls out one episode from the start state; transitions are sampled by
/// inverse transform with a counter-based generator, so the trace is a pure
/// function of (mdp, policy, rng_seed). Throws on policy shape mismatch.
EpisodeTrace simulate_episode(const TabularMDP& mdp, const MarkovPolicy& policy,
                              std::uint64_t rng_seed);

/// Instance file I/O (UTF-8 JSON; see README for the schema). read_mdp
/// throws std::runtime_error naming the offending field on parse problems
/// and ValidationError when the parsed instance fails validate().
/// write_mdp followed by read_mdp reproduces every field bit-exactly.
TabularMDP read_mdp(const std::string& path);
void write_mdp(const TabularMDP& mdp, const std::string& path);

/// Policy file I/O: a JSON H x S integer array.
MarkovPolicy read_policy(const std::string& path);
void write_policy(const MarkovPolicy& policy, const std::string& path);

}  // namespace ucbqrl
