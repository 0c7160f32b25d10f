#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "mdpnas/tabular_mdp.hpp"

namespace mdpnas {

/// Transition rows ~ Dirichlet(1, ..., 1) (normalised unit exponentials),
/// reward means ~ U[0, 1]. Deterministic in `seed`.
TabularMdp gen_random_ergodic(std::size_t num_states, std::size_t num_actions, double gamma,
                              std::uint64_t seed);

namespace river_swim_actions {
inline constexpr std::size_t kLeft = 0;
inline constexpr std::size_t kRight = 1;
}  // namespace river_swim_actions

/// RiverSwim with deterministic moves. Reward mean 0.05 at (first state, LEFT)
/// and 1 at (last state, RIGHT); zero elsewhere.
TabularMdp river_swim(std::size_t num_states, double gamma);

namespace counterexample_actions {
inline constexpr std::size_t kLeft1 = 0;
inline constexpr std::size_t kLeft2 = 1;
inline constexpr std::size_t kRight = 2;
}  // namespace counterexample_actions

/// RiverSwim variant where both LEFT actions jump back to the first state.
/// Rewards 0.01 at (first, LEFT1/LEFT2) and 0.02 at (last, RIGHT).
TabularMdp counterexample_river_swim(std::size_t num_states, double gamma);

struct InstanceMetadata {
  std::optional<std::string> name;
  std::optional<std::uint64_t> seed;
};

inline constexpr int kInstanceSchemaVersion = 1;

/// Writes the JSON instance document. Probabilities are printed with 17
/// significant digits, so a load reproduces every double bit for bit.
void save_instance(const TabularMdp& mdp, const std::filesystem::path& path,
                   const InstanceMetadata& metadata = {});
std::string instance_to_json(const TabularMdp& mdp, const InstanceMetadata& metadata = {});

/// Parses and validates an instance document; ValidationError messages carry
/// the offending field path, e.g. `transitions[1][0]`.
TabularMdp load_instance(const std::filesystem::path& path, InstanceMetadata* metadata = nullptr);
TabularMdp instance_from_json(const std::string& text, InstanceMetadata* metadata = nullptr);

}  // namespace mdpnas
