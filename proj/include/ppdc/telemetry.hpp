#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "json.hpp"
#include "ppdc/consensus.hpp"
#include "ppdc/topology.hpp"

namespace ppdc {

/// Per-agent computation and communication counters.
///
/// One consensus round costs agent i exactly d_i messages of `state_dim`
/// floats each and (d_i + 1) * state_dim multiplications.
struct Telemetry {
    std::vector<std::size_t> degrees;
    std::vector<std::uint64_t> multiplies;
    std::vector<std::uint64_t> messages;
    std::vector<std::uint64_t> floats_shared;
    std::vector<std::size_t> consensus_rounds;  // T_a of every outer iteration
    std::size_t outer_iterations = 0;           // T_c
    std::size_t state_dim = 0;                  // floats per neighbor per round

    explicit Telemetry(const Topology& topology = Topology::build(1, {}));

    void add_consensus(const ConsensusRun& run);
    void add_local(std::size_t agent, std::uint64_t mults) { multiplies.at(agent) += mults; }

    std::size_t total_rounds() const;
    /// d_i * sum of T_a: the message count the protocol prescribes.
    std::uint64_t expected_messages(std::size_t agent) const;

    nlohmann::json to_json() const;
    /// agent,degree,messages,floats_shared,multiplies
    void write_csv(std::ostream& out) const;
};

Telemetry record_telemetry(const Topology& topology, std::span<const ConsensusRun> runs);

}  // namespace ppdc
