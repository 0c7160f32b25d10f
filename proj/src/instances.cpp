#include "mdpnas/instances.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "mdpnas/errors.hpp"

namespace mdpnas {
namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

std::string index_path(const std::string& field, std::size_t i) {
  return field + "[" + std::to_string(i) + "]";
}

std::size_t read_positive(const json& doc, const char* field) {
  if (!doc.contains(field) || !doc[field].is_number_unsigned() || doc[field].get<std::size_t>() == 0) {
    throw ValidationError(std::string(field) + ": expected a positive integer");
  }
  return doc[field].get<std::size_t>();
}

double read_number(const json& value, const std::string& path) {
  if (!value.is_number()) throw ValidationError(path + ": expected a number");
  return value.get<double>();
}

const json& read_array(const json& value, std::size_t size, const std::string& path) {
  if (!value.is_array() || value.size() != size) {
    throw ValidationError(path + ": expected an array of length " + std::to_string(size));
  }
  return value;
}

}  // namespace

TabularMdp gen_random_ergodic(std::size_t num_states, std::size_t num_actions, double gamma,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> exponential(1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::vector<double> transitions(num_states * num_actions * num_states);
  for (std::size_t z = 0; z < num_states * num_actions; ++z) {
    double total = 0.0;
    for (std::size_t next = 0; next < num_states; ++next) {
      const double draw = exponential(rng);
      transitions[z * num_states + next] = draw;
      total += draw;
    }
    for (std::size_t next = 0; next < num_states; ++next) transitions[z * num_states + next] /= total;
  }
  std::vector<double> rewards(num_states * num_actions);
  for (double& r : rewards) r = uniform(rng);
  return TabularMdp(num_states, num_actions, gamma, std::move(transitions), std::move(rewards));
}

TabularMdp river_swim(std::size_t num_states, double gamma) {
  using namespace river_swim_actions;
  if (num_states < 2) throw ValidationError("river_swim: needs at least 2 states");
  const std::size_t S = num_states;
  constexpr std::size_t A = 2;
  std::vector<double> transitions(S * A * S, 0.0);
  std::vector<double> rewards(S * A, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    transitions[(s * A + kLeft) * S + (s == 0 ? 0 : s - 1)] = 1.0;
    transitions[(s * A + kRight) * S + std::min(s + 1, S - 1)] = 1.0;
  }
  rewards[0 * A + kLeft] = 0.05;
  rewards[(S - 1) * A + kRight] = 1.0;
  return TabularMdp(S, A, gamma, std::move(transitions), std::move(rewards));
}

TabularMdp counterexample_river_swim(std::size_t num_states, double gamma) {
  using namespace counterexample_actions;
  if (num_states < 2) throw ValidationError("counterexample_river_swim: needs at least 2 states");
  const std::size_t S = num_states;
  constexpr std::size_t A = 3;
  std::vector<double> transitions(S * A * S, 0.0);
  std::vector<double> rewards(S * A, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    transitions[(s * A + kLeft1) * S + 0] = 1.0;
    transitions[(s * A + kLeft2) * S + 0] = 1.0;
    transitions[(s * A + kRight) * S + std::min(s + 1, S - 1)] = 1.0;
  }
  rewards[kLeft1] = 0.01;
  rewards[kLeft2] = 0.01;
  rewards[(S - 1) * A + kRight] = 0.02;
  return TabularMdp(S, A, gamma, std::move(transitions), std::move(rewards));
}

std::string instance_to_json(const TabularMdp& mdp, const InstanceMetadata& metadata) {
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  std::ostringstream out;
  out << "{\n";
  out << "  \"schema_version\": " << kInstanceSchemaVersion << ",\n";
  out << "  \"S\": " << S << ",\n";
  out << "  \"A\": " << A << ",\n";
  out << "  \"gamma\": " << format_double(mdp.gamma()) << ",\n";
  out << "  \"reward_family\": \"" << TabularMdp::kRewardFamily << "\",\n";
  out << "  \"transitions\": [\n";
  for (std::size_t s = 0; s < S; ++s) {
    out << "    [\n";
    for (std::size_t a = 0; a < A; ++a) {
      out << "      [";
      for (std::size_t next = 0; next < S; ++next) {
        out << (next ? ", " : "") << format_double(mdp.transition(s, a, next));
      }
      out << "]" << (a + 1 < A ? "," : "") << "\n";
    }
    out << "    ]" << (s + 1 < S ? "," : "") << "\n";
  }
  out << "  ],\n";
  out << "  \"reward_means\": [\n";
  for (std::size_t s = 0; s < S; ++s) {
    out << "    [";
    for (std::size_t a = 0; a < A; ++a) out << (a ? ", " : "") << format_double(mdp.reward(s, a));
    out << "]" << (s + 1 < S ? "," : "") << "\n";
  }
  out << "  ]";
  if (metadata.name || metadata.seed) {
    json meta = json::object();
    if (metadata.name) meta["name"] = *metadata.name;
    if (metadata.seed) meta["seed"] = *metadata.seed;
    out << ",\n  \"metadata\": " << meta.dump();
  }
  out << "\n}\n";
  return out.str();
}

void save_instance(const TabularMdp& mdp, const std::filesystem::path& path,
                   const InstanceMetadata& metadata) {
  std::ofstream file(path);
  if (!file) throw Error("cannot open " + path.string() + " for writing");
  file << instance_to_json(mdp, metadata);
  if (!file) throw Error("failed writing " + path.string());
}

TabularMdp instance_from_json(const std::string& text, InstanceMetadata* metadata) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("instance: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("instance: expected a JSON object");
  if (!doc.contains("schema_version") || doc["schema_version"] != kInstanceSchemaVersion) {
    throw ValidationError("schema_version: expected " + std::to_string(kInstanceSchemaVersion));
  }
  if (doc.contains("reward_family") && doc["reward_family"] != std::string(TabularMdp::kRewardFamily)) {
    throw ValidationError("reward_family: only \"bernoulli\" is supported");
  }
  const std::size_t S = read_positive(doc, "S");
  const std::size_t A = read_positive(doc, "A");
  if (!doc.contains("gamma")) throw ValidationError("gamma: missing");
  const double gamma = read_number(doc["gamma"], "gamma");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("gamma: must lie in [0, 1)");

  if (!doc.contains("transitions")) throw ValidationError("transitions: missing");
  if (!doc.contains("reward_means")) throw ValidationError("reward_means: missing");
  const json& trans = read_array(doc["transitions"], S, "transitions");
  const json& rew = read_array(doc["reward_means"], S, "reward_means");

  std::vector<double> transitions;
  transitions.reserve(S * A * S);
  std::vector<double> rewards;
  rewards.reserve(S * A);
  for (std::size_t s = 0; s < S; ++s) {
    const std::string sp = index_path("transitions", s);
    const json& per_state = read_array(trans[s], A, sp);
    const json& reward_row = read_array(rew[s], A, index_path("reward_means", s));
    for (std::size_t a = 0; a < A; ++a) {
      const std::string ap = index_path(sp, a);
      const json& row = read_array(per_state[a], S, ap);
      double sum = 0.0;
      for (std::size_t next = 0; next < S; ++next) {
        const std::string np = index_path(ap, next);
        const double p = read_number(row[next], np);
        if (!(p >= 0.0)) throw ValidationError(np + ": negative probability");
        sum += p;
        transitions.push_back(p);
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance) {
        throw ValidationError(ap + ": row for (s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                              ") sums to " + format_double(sum));
      }
      const std::string rp = index_path(index_path("reward_means", s), a);
      const double r = read_number(reward_row[a], rp);
      if (!(r >= 0.0 && r <= 1.0)) throw ValidationError(rp + ": reward mean outside [0, 1]");
      rewards.push_back(r);
    }
  }

  if (metadata) {
    *metadata = {};
    if (doc.contains("metadata") && doc["metadata"].is_object()) {
      const json& meta = doc["metadata"];
      if (meta.contains("name") && meta["name"].is_string()) metadata->name = meta["name"].get<std::string>();
      if (meta.contains("seed") && meta["seed"].is_number_unsigned()) {
        metadata->seed = meta["seed"].get<std::uint64_t>();
      }
    }
  }
  return TabularMdp(S, A, gamma, std::move(transitions), std::move(rewards));
}

TabularMdp load_instance(const std::filesystem::path& path, InstanceMetadata* metadata) {
  std::ifstream file(path);
  if (!file) throw ValidationError("cannot open instance file " + path.string());
  std::stringstream buffer;
  buffer << file.rdbuf();
  return instance_from_json(buffer.str(), metadata);
}

}  // namespace mdpnas
