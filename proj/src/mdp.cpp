#include "ucbqrl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ucbqrl/rng.hpp"

namespace ucbqrl {

namespace {

constexpr double kRowSumTol = 1e-9;

std::string cell(int h, int s, int a) {
  std::ostringstream os;
  os << "[h=" << h << "][s=" << s << "][a=" << a << "]";
  return os.str();
}

}  // namespace

ValidationError::ValidationError(const std::string& context,
                                 std::vector<std::string> violations)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << context << ": " << violations.size() << " violation(s)";
        for (const auto& v : violations) os << "\n  - " << v;
        return os.str();
      }()),
      violations_(std::move(violations)) {}

std::vector<std::string> validate(const TabularMDP& m) {
  std::vector<std::string> out;
  if (m.num_states < 1) out.push_back("num_states: must be positive");
  if (m.num_actions < 1) out.push_back("num_actions: must be positive");
  if (m.horizon < 1) out.push_back("horizon: must be positive");
  if (!out.empty()) return out;

  if (m.start_state < 0 || m.start_state >= m.num_states) {
    std::ostringstream os;
    os << "start_state: " << m.start_state << " outside [0, " << m.num_states << ")";
    out.push_back(os.str());
  }

  const auto S = static_cast<std::size_t>(m.num_states);
  const auto A = static_cast<std::size_t>(m.num_actions);
  const auto H = static_cast<std::size_t>(m.horizon);

  if (m.rewards.size() != H) {
    out.push_back("rewards: expected " + std::to_string(H) + " stages, found " +
                  std::to_string(m.rewards.size()));
  }
  if (m.kernel.size() != H) {
    out.push_back("kernel: expected " + std::to_string(H) + " stages, found " +
                  std::to_string(m.kernel.size()));
  }

  for (std::size_t h = 0; h < std::min(H, m.rewards.size()); ++h) {
    if (m.rewards[h].size() != S) {
      out.push_back("rewards[h=" + std::to_string(h) + "]: wrong state count");
      continue;
    }
    for (std::size_t s = 0; s < S; ++s) {
      if (m.rewards[h][s].size() != A) {
        out.push_back("rewards[h=" + std::to_string(h) + "][s=" + std::to_string(s) +
                      "]: wrong action count");
        continue;
      }
      for (std::size_t a = 0; a < A; ++a) {
        const double r = m.rewards[h][s][a];
        if (!(r >= 0.0 && r <= 1.0)) {
          std::ostringstream os;
          os << "rewards" << cell(int(h), int(s), int(a)) << ": value " << r
             << " outside [0, 1]";
          out.push_back(os.str());
        }
      }
    }
  }

  for (std::size_t h = 0; h < std::min(H, m.kernel.size()); ++h) {
    if (m.kernel[h].size() != S) {
      out.push_back("kernel[h=" + std::to_string(h) + "]: wrong state count");
      continue;
    }
    for (std::size_t s = 0; s < S; ++s) {
      if (m.kernel[h][s].size() != A) {
        out.push_back("kernel[h=" + std::to_string(h) + "][s=" + std::to_string(s) +
                      "]: wrong action count");
        continue;
      }
      for (std::size_t a = 0; a < A; ++a) {
        const auto& row = m.kernel[h][s][a];
        if (row.size() != S) {
          out.push_back("kernel" + cell(int(h), int(s), int(a)) +
                        ": row length != num_states");
          continue;
        }
        double sum = 0.0;
        bool negative = false;
        for (double p : row) {
          if (p < 0.0) negative = true;
          sum += p;
        }
        if (negative) {
          out.push_back("kernel" + cell(int(h), int(s), int(a)) +
                        ": negative probability");
        }
        if (std::abs(sum - 1.0) > kRowSumTol) {
          std::ostringstream os;
          os << "kernel" << cell(int(h), int(s), int(a)) << ": row sums to " << sum
             << " (expected 1 within 1e-9)";
          out.push_back(os.str());
        }
      }
    }
  }
  return out;
}

TabularMDP gen_random(int num_states, int num_actions, int horizon,
                      std::uint64_t seed, double min_atom) {
  if (num_states < 1 || num_actions < 1 || horizon < 1) {
    throw std::invalid_argument("gen_random: S, A, H must all be positive");
  }
  if (min_atom < 0.0 || min_atom > 1.0 / num_states + 1e-15) {
    throw std::invalid_argument("gen_random: min_atom " + std::to_string(min_atom) +
                                " outside [0, 1/S]");
  }

  CounterRng rng(seed);
  TabularMDP m;
  m.num_states = num_states;
  m.num_actions = num_actions;
  m.horizon = horizon;
  m.start_state = 0;
  m.rewards.assign(horizon, std::vector<std::vector<double>>(
                                num_states, std::vector<double>(num_actions, 0.0)));
  m.kernel.assign(horizon,
                  std::vector<std::vector<std::vector<double>>>(
                      num_states, std::vector<std::vector<double>>(
                                      num_actions, std::vector<double>(num_states, 0.0))));

  for (int h = 0; h < horizon; ++h) {
    for (int s = 0; s < num_states; ++s) {
      for (int a = 0; a < num_actions; ++a) {
        auto& row = m.kernel[h][s][a];
        double total = 0.0;
        for (int j = 0; j < num_states; ++j) {
          // Normalized unit exponentials give Dirichlet(1,...,1).
          row[j] = -std::log(rng.next_unit_open_closed());
          total += row[j];
        }
        for (double& p : row) p /= total;
        double kept = 0.0;
        for (double& p : row) {
          if (p < min_atom) p = 0.0;
          kept += p;
        }
        for (double& p : row) p /= kept;

        m.rewards[h][s][a] = 0.1 * static_cast<double>(rng.next_below(11));
      }
    }
  }
  return m;
}

EpisodeTrace simulate_episode(const TabularMDP& m, const MarkovPolicy& policy,
                              std::uint64_t rng_seed) {
  if (policy.horizon() != m.horizon || policy.num_states() != m.num_states) {
    throw std::invalid_argument("simulate_episode: policy shape mismatch");
  }
  for (const auto& row : policy.actions) {
    for (int a : row) {
      if (a < 0 || a >= m.num_actions) {
        throw std::invalid_argument("simulate_episode: action index out of range");
      }
    }
  }

  CounterRng rng(rng_seed);
  EpisodeTrace trace;
  trace.reserve(m.horizon);
  int s = m.start_state;
  for (int h = 0; h < m.horizon; ++h) {
    const int a = policy.at(h, s);
    const auto& row = m.kernel[h][s][a];
    const double u = rng.next_unit_open_closed();
    double acc = 0.0;
    int next = -1;
    for (int j = 0; j < m.num_states; ++j) {
      if (row[j] <= 0.0) continue;
      acc += row[j];
      next = j;
      if (u <= acc) break;
    }
    trace.push_back({h, s, a, m.rewards[h][s][a], next});
    s = next;
  }
  return trace;
}

namespace {

using nlohmann::json;

const json& require_field(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) {
    throw std::runtime_error(path + ": missing field '" + key + "'");
  }
  return j.at(key);
}

int read_int_field(const json& j, const char* key, const std::string& path) {
  const json& v = require_field(j, key, path);
  if (!v.is_number_integer()) {
    throw std::runtime_error(path + ": field '" + key + "' is not an integer");
  }
  return v.get<int>();
}

}  // namespace

TabularMDP read_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_mdp: cannot open " + path);

  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }

  TabularMDP m;
  m.num_states = read_int_field(j, "num_states", path);
  m.num_actions = read_int_field(j, "num_actions", path);
  m.horizon = read_int_field(j, "horizon", path);
  m.start_state = read_int_field(j, "start_state", path);
  try {
    require_field(j, "rewards", path).get_to(m.rewards);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": field 'rewards': " + e.what());
  }
  try {
    require_field(j, "kernel", path).get_to(m.kernel);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": field 'kernel': " + e.what());
  }

  auto violations = validate(m);
  if (!violations.empty()) {
    throw ValidationError(path, std::move(violations));
  }
  return m;
}

void write_mdp(const TabularMDP& m, const std::string& path) {
  json j;
  j["num_states"] = m.num_states;
  j["num_actions"] = m.num_actions;
  j["horizon"] = m.horizon;
  j["start_state"] = m.start_state;
  j["rewards"] = m.rewards;
  j["kernel"] = m.kernel;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_mdp: cannot open " + path);
  out << j.dump(1) << '\n';
  if (!out) throw std::runtime_error("write_mdp: failed writing " + path);
}

MarkovPolicy read_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_policy: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  MarkovPolicy p;
  try {
    j.get_to(p.actions);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": expected an H x S integer array: " + e.what());
  }
  for (const auto& row : p.actions) {
    if (row.size() != p.actions[0].size()) {
      throw std::runtime_error(path + ": ragged policy rows");
    }
  }
  return p;
}

void write_policy(const MarkovPolicy& policy, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_policy: cannot open " + path);
  out << json(policy.actions).dump() << '\n';
  if (!out) throw std::runtime_error("write_policy: failed writing " + path);
}

}  // namespace ucbqrl
