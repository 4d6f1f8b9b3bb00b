#pragma once

// Flat `section.key = value` experiment configs. Blank lines and `#` comments
// are ignored; every key must be known for the scenario, and unset keys keep
// the scenario defaults.

#include <filesystem>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "mrsim/cooploc.hpp"
#include "mrsim/overtake.hpp"

namespace mrsim {

enum class Scenario { kCooploc, kOvertake };

std::string_view scenario_name(Scenario s) noexcept;
Scenario parse_scenario(std::string_view s);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Throws std::invalid_argument with the line number for malformed lines or
/// repeated keys.
KeyValues parse_key_values(std::istream& in);

struct SweepGrid {
  std::vector<double> epsilons{0.0, 0.25, 0.5, 0.75, 0.8, 0.9};
  std::vector<cooploc::LinkProtocol> protocols{cooploc::LinkProtocol::kUdp, cooploc::LinkProtocol::kSrArq,
                                               cooploc::LinkProtocol::kAcRlnc};
  /// Adds the ideal, naive and I-ReE runs at eps=0 and the no-communication
  /// run at eps=1.
  bool references = true;
};

struct RunConfig {
  Scenario scenario = Scenario::kCooploc;
  cooploc::Config cooploc;
  SweepGrid sweep;
  overtake::Config overtake;
  std::vector<transport::Protocol> overtake_protocols{transport::Protocol::kSrArq, transport::Protocol::kAcRlnc};
  std::string out = "out";
  int jobs = 0;  // 0: one worker per hardware thread

  std::uint64_t seed() const noexcept;
  void set_seed(std::uint64_t seed) noexcept;

  /// Every effective key and its value, sorted by key.
  KeyValues echo() const;

  /// Throws std::invalid_argument naming the failing key or constraint.
  void validate() const;
};

/// Applies `kv` over the scenario defaults. Unknown keys, unparsable values
/// and a `scenario.name` that disagrees with `scenario` are rejected.
RunConfig make_config(Scenario scenario, const KeyValues& kv);

RunConfig load_config(Scenario scenario, const std::filesystem::path& path);

}  // namespace mrsim
