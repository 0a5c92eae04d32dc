#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "homeostat/analytic.hpp"
#include "homeostat/kinetics.hpp"
#include "homeostat/network.hpp"
#include "homeostat/signals.hpp"
#include "homeostat/simulate.hpp"
#include "homeostat/trace.hpp"

namespace homeostat {

using json = nlohmann::json;

inline constexpr int kSpecVersion = 1;

// Loaders throw ConfigError naming the offending field, e.g.
// "edges[2].delay.family". Unknown keys are rejected.
NodeId node_from_json(const json& j, const std::string& path);
DelayDistribution delay_from_json(const json& j, const std::string& path);
NetworkSpec network_from_json(const json& j);
Signal signal_from_json(const json& j, const std::string& path);
SignalSet signals_from_json(const json& j, const std::string& path = "signals");
KineticsSpec kinetics_from_json(const json& j);

json to_json(const NodeId& node);
json to_json(const DelayDistribution& delay);
json to_json(const NetworkSpec& spec);
json to_json(const Signal& signal);
json to_json(const SignalSet& signals);
json to_json(const KineticsSpec& spec);

json to_json(const ValidationReport& report);
json to_json(const ClassParameters& params);
json to_json(const HomeostasisReport& report);
json to_json(const VarianceReport& report);
json to_json(const AgreementStats& stats);
json to_json(const CorollaryReport& report);
json to_json(const EnsembleEstimate& estimate);

// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::string_view bytes);
// Compact dump with sorted keys; identical documents give identical bytes.
std::string canonical_dump(const json& j);
std::string hex64(std::uint64_t value);

}  // namespace homeostat
