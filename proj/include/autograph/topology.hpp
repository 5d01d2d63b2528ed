#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace autograph {

enum class Fusion { sum, mean, max, concat };

/// Inter-layer wiring of an L-layer GCN stack. Input slot 0 is the source
/// (projected features); slot k >= 1 is the output of layer k.
struct TopologySpec {
  int n_layers = 0;
  std::vector<std::vector<int>> inputs;  // inputs[k-1] for layer k, ascending slots
  std::vector<Fusion> layer_fusion;      // meaningful only when inputs has > 1 slot
  std::vector<int> final_inputs;         // slots in 1..L
  Fusion final_fusion = Fusion::sum;

  /// Throws ContractViolation when a layer reads a later output, an input set
  /// is empty, concat appears inside the stack, or a layer output is unused.
  void validate() const;
  /// Width multiplier of the final fusion (|final_inputs| for concat, else 1).
  std::size_t final_width_factor() const;

  friend bool operator==(const TopologySpec&, const TopologySpec&) = default;
};

/// Sequential chain: layer k reads layer k-1, final reads layer L, sum fusion.
TopologySpec plain_stack(int n_layers);

/// Every valid topology of `n_layers` layers in canonical order, with
/// plain_stack first. When more than `cap` exist, a seeded uniform sample of
/// cap-1 others follows plain_stack.
std::vector<TopologySpec> enumerate_topologies(int n_layers, std::size_t cap,
                                               std::uint64_t seed = 0);

std::string to_string(Fusion f);
Fusion fusion_from_string(const std::string& s);

void to_json(nlohmann::json& j, const TopologySpec& t);
void from_json(const nlohmann::json& j, TopologySpec& t);

}  // namespace autograph
