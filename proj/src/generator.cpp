#include "tsac/generator.hpp"

#include <cmath>

namespace tsac {

Mdp random_mdp(const RandomMdpSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<int>> layers(static_cast<std::size_t>(spec.horizon) + 1);
  int next_id = 0;
  for (auto& layer : layers) {
    const int size = 1 + rng.uniform_int(spec.max_states_per_layer);
    for (int i = 0; i < size; ++i) layer.push_back(next_id++);
  }

  MdpBuilder builder(layers, spec.num_actions, spec.reward_bound);
  for (int t = 0; t <= spec.horizon; ++t) {
    for (int s : layers[static_cast<std::size_t>(t)]) {
      for (int a = 0; a < spec.num_actions; ++a) {
        const int branches = 1 + rng.uniform_int(spec.reward_branches);
        Vec weights(static_cast<std::size_t>(branches));
        double total = 0.0;
        for (double& w : weights) {
          w = 0.1 + rng.uniform01();
          total += w;
        }
        double acc = 0.0;
        for (int b = 0; b < branches; ++b) {
          // Final branch absorbs rounding so the row sums to 1 exactly.
          const double p = b + 1 == branches ? 1.0 - acc
                                             : weights[static_cast<std::size_t>(b)] / total;
          acc += p;
          const double r =
              rng.uniform(-spec.reward_bound, spec.reward_bound);
          if (t == spec.horizon) {
            builder.add(s, a, Mdp::kEpisodeEnd, r, p);
          } else {
            const auto& next_layer = layers[static_cast<std::size_t>(t) + 1];
            const int s2 =
                next_layer[static_cast<std::size_t>(rng.uniform_int(
                    static_cast<int>(next_layer.size())))];
            builder.add(s, a, s2, r, p);
          }
        }
      }
    }
  }

  const auto& first = layers.front();
  if (spec.fixed_start) {
    builder.fixed_start(first[static_cast<std::size_t>(
                            rng.uniform_int(static_cast<int>(first.size())))],
                        rng.uniform_int(spec.num_actions));
  } else {
    Vec w(first.size());
    double total = 0.0;
    for (double& x : w) {
      x = 0.1 + rng.uniform01();
      total += x;
    }
    std::vector<std::pair<int, double>> dist;
    double acc = 0.0;
    for (std::size_t i = 0; i < first.size(); ++i) {
      const double p = i + 1 == first.size() ? 1.0 - acc : w[i] / total;
      acc += p;
      dist.emplace_back(first[i], p);
    }
    builder.start_distribution(std::move(dist));
  }
  return builder.build();
}

PolicyTable random_policy(const Mdp& mdp, std::uint64_t seed) {
  Rng rng(seed);
  PolicyTable table;
  table.probs.resize(static_cast<std::size_t>(mdp.num_states()));
  for (int s = 0; s < mdp.num_states(); ++s) {
    Vec row(static_cast<std::size_t>(mdp.num_actions()));
    double total = 0.0;
    for (double& p : row) {
      p = std::exp(rng.uniform(-1.0, 1.0));
      total += p;
    }
    double acc = 0.0;
    for (std::size_t a = 0; a < row.size(); ++a) {
      row[a] = a + 1 == row.size() ? 1.0 - acc : row[a] / total;
      acc += row[a];
    }
    table.probs[static_cast<std::size_t>(s)] = std::move(row);
  }
  return table;
}

PolicyTable random_deterministic_policy(const Mdp& mdp, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> actions(static_cast<std::size_t>(mdp.num_states()));
  for (int& a : actions) a = rng.uniform_int(mdp.num_actions());
  return PolicyTable::deterministic(mdp.num_states(), mdp.num_actions(), actions);
}

}  // namespace tsac
