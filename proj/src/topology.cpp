#include "autograph/topology.hpp"

#include <algorithm>
#include <bit>
#include <random>

#include "autograph/error.hpp"

namespace autograph {

namespace {

struct Choice {
  std::uint32_t mask = 0;
  Fusion fusion = Fusion::sum;
};

/// Input choices of layer k (1-based) in canonical order: ascending mask,
/// fusion enumerated only when more than one slot is read.
std::vector<Choice> layer_choices(int k) {
  std::vector<Choice> out;
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
    if (std::popcount(mask) == 1) {
      out.push_back({mask, Fusion::sum});
    } else {
      for (auto f : {Fusion::sum, Fusion::mean, Fusion::max}) out.push_back({mask, f});
    }
  }
  return out;
}

std::vector<Choice> final_choices(int n_layers) {
  std::vector<Choice> out;
  for (std::uint32_t bits = 1; bits < (1u << n_layers); ++bits)
    for (auto f : {Fusion::sum, Fusion::mean, Fusion::max, Fusion::concat})
      out.push_back({bits << 1, f});  // slot k sits at bit k
  return out;
}

std::vector<int> slots_of(std::uint32_t mask) {
  std::vector<int> out;
  for (int s = 0; s < 32; ++s)
    if (mask & (1u << s)) out.push_back(s);
  return out;
}

std::uint32_t mask_of(const std::vector<int>& slots) {
  std::uint32_t m = 0;
  for (int s : slots) m |= 1u << s;
  return m;
}

class Enumerator {
 public:
  explicit Enumerator(int n_layers) : n_(n_layers) {
    for (int k = 1; k <= n_; ++k) layers_.push_back(layer_choices(k));
    final_ = final_choices(n_);
    total_ = final_.size();
    for (const auto& c : layers_) total_ *= c.size();
  }

  std::size_t total() const { return total_; }

  /// Mixed-radix decode with layer 1 most significant and the final choice last.
  void decode(std::size_t index, std::vector<Choice>& picks) const {
    picks.resize(static_cast<std::size_t>(n_) + 1);
    picks[n_] = final_[index % final_.size()];
    index /= final_.size();
    for (int k = n_ - 1; k >= 0; --k) {
      picks[k] = layers_[k][index % layers_[k].size()];
      index /= layers_[k].size();
    }
  }

  bool live(const std::vector<Choice>& picks) const {
    std::uint32_t used = picks[n_].mask;
    for (int k = 0; k < n_; ++k) used |= picks[k].mask;
    for (int slot = 1; slot <= n_; ++slot)
      if (!(used & (1u << slot))) return false;
    return true;
  }

  TopologySpec build(const std::vector<Choice>& picks) const {
    TopologySpec t;
    t.n_layers = n_;
    for (int k = 0; k < n_; ++k) {
      t.inputs.push_back(slots_of(picks[k].mask));
      t.layer_fusion.push_back(picks[k].fusion);
    }
    t.final_inputs = slots_of(picks[n_].mask);
    t.final_fusion = picks[n_].fusion;
    return t;
  }

 private:
  int n_;
  std::vector<std::vector<Choice>> layers_;
  std::vector<Choice> final_;
  std::size_t total_ = 1;
};

}  // namespace

void TopologySpec::validate() const {
  require(n_layers >= 1 && n_layers <= 30, "topology: n_layers must be in [1,30]");
  const auto L = static_cast<std::size_t>(n_layers);
  require(inputs.size() == L && layer_fusion.size() == L, "topology: per-layer arrays sized wrong");
  std::uint32_t used = mask_of(final_inputs);
  for (std::size_t k = 0; k < L; ++k) {
    require(!inputs[k].empty(), "topology: every layer needs an input");
    require(std::is_sorted(inputs[k].begin(), inputs[k].end()) &&
                std::adjacent_find(inputs[k].begin(), inputs[k].end()) == inputs[k].end(),
            "topology: input slots must be ascending and unique");
    require(inputs[k].front() >= 0 && inputs[k].back() <= static_cast<int>(k),
            "topology: a layer may only read the source or earlier layers");
    require(layer_fusion[k] != Fusion::concat, "topology: concat is allowed only at the final fusion");
    used |= mask_of(inputs[k]);
  }
  require(!final_inputs.empty(), "topology: final fusion needs an input");
  require(std::is_sorted(final_inputs.begin(), final_inputs.end()) &&
              std::adjacent_find(final_inputs.begin(), final_inputs.end()) == final_inputs.end(),
          "topology: final slots must be ascending and unique");
  require(final_inputs.front() >= 1 && final_inputs.back() <= n_layers,
          "topology: final fusion reads layer outputs only");
  for (int slot = 1; slot <= n_layers; ++slot)
    require(used & (1u << slot), "topology: output of layer " + std::to_string(slot) + " is unused");
}

std::size_t TopologySpec::final_width_factor() const {
  return final_fusion == Fusion::concat ? final_inputs.size() : 1;
}

TopologySpec plain_stack(int n_layers) {
  require(n_layers >= 1, "plain_stack: needs at least one layer");
  TopologySpec t;
  t.n_layers = n_layers;
  for (int k = 0; k < n_layers; ++k) {
    t.inputs.push_back({k});
    t.layer_fusion.push_back(Fusion::sum);
  }
  t.final_inputs = {n_layers};
  t.final_fusion = Fusion::sum;
  return t;
}

std::vector<TopologySpec> enumerate_topologies(int n_layers, std::size_t cap, std::uint64_t seed) {
  require(n_layers >= 1 && n_layers <= 6, "enumerate_topologies: n_layers must be in [1,6]");
  require(cap >= 1, "enumerate_topologies: cap must be positive");
  Enumerator en(n_layers);
  const TopologySpec plain = plain_stack(n_layers);
  std::vector<std::size_t> valid;
  std::vector<Choice> picks;
  for (std::size_t i = 0; i < en.total(); ++i) {
    en.decode(i, picks);
    if (!en.live(picks)) continue;
    if (en.build(picks) == plain) {
      continue;
    }
    valid.push_back(i);
  }
  if (valid.size() + 1 > cap) {
    std::vector<std::size_t> sample;
    std::mt19937_64 rng(seed);
    std::sample(valid.begin(), valid.end(), std::back_inserter(sample), cap - 1, rng);
    valid = std::move(sample);
  }
  std::vector<TopologySpec> out{plain};
  for (auto i : valid) {
    en.decode(i, picks);
    out.push_back(en.build(picks));
  }
  return out;
}

std::string to_string(Fusion f) {
  switch (f) {
    case Fusion::sum: return "sum";
    case Fusion::mean: return "mean";
    case Fusion::max: return "max";
    case Fusion::concat: return "concat";
  }
  return "?";
}

Fusion fusion_from_string(const std::string& s) {
  for (auto f : {Fusion::sum, Fusion::mean, Fusion::max, Fusion::concat})
    if (to_string(f) == s) return f;
  throw FormatError("unknown fusion: " + s);
}

namespace {

std::string slot_name(int s) { return s == 0 ? "source" : "out_" + std::to_string(s); }

int slot_from_name(const std::string& s) {
  if (s == "source") return 0;
  if (s.rfind("out_", 0) == 0) return std::stoi(s.substr(4));
  throw FormatError("unknown topology slot: " + s);
}

std::vector<std::string> names(const std::vector<int>& slots) {
  std::vector<std::string> out;
  for (int s : slots) out.push_back(slot_name(s));
  return out;
}

std::vector<int> slots_from(const nlohmann::json& j) {
  std::vector<int> out;
  for (const auto& s : j) out.push_back(slot_from_name(s.get<std::string>()));
  return out;
}

}  // namespace

void to_json(nlohmann::json& j, const TopologySpec& t) {
  nlohmann::json inputs = nlohmann::json::array();
  nlohmann::json fusions = nlohmann::json::array();
  for (std::size_t k = 0; k < t.inputs.size(); ++k) {
    inputs.push_back(names(t.inputs[k]));
    fusions.push_back(to_string(t.layer_fusion[k]));
  }
  j = nlohmann::json{{"n_layers", t.n_layers},
                     {"inputs", inputs},
                     {"layer_fusion", fusions},
                     {"final_inputs", names(t.final_inputs)},
                     {"final_fusion", to_string(t.final_fusion)}};
}

void from_json(const nlohmann::json& j, TopologySpec& t) {
  t.n_layers = j.at("n_layers").get<int>();
  t.inputs.clear();
  t.layer_fusion.clear();
  for (const auto& in : j.at("inputs")) t.inputs.push_back(slots_from(in));
  for (const auto& f : j.at("layer_fusion")) t.layer_fusion.push_back(fusion_from_string(f.get<std::string>()));
  t.final_inputs = slots_from(j.at("final_inputs"));
  t.final_fusion = fusion_from_string(j.at("final_fusion").get<std::string>());
  t.validate();
}

}  // namespace autograph
