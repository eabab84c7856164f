#pragma once
// Steane error correction on Pauli flip frames, code switching between the
// Clifford-friendly and phase-gate-friendly profiles, extended-rectangle
// Monte Carlo, and the ancilla cache that stores accepted preparations as
// lists of fault ids and reassembles residual errors on load.

#include "qrm/circuit.hpp"
#include "qrm/decoder.hpp"
#include "qrm/ft_prep.hpp"
#include "qrm/rng.hpp"

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qrm {

// Pauli frame on one code block; bit position = wire label, bit 0 unused.
struct Frame {
    Mask128 x, z;
    bool operator==(const Frame&) const = default;
};

struct AncillaResidual {
    Mask128 x, z;
    bool operator==(const AncillaResidual&) const = default;
};

// Nearest-stabilizer representative of a one-type residual: list-decode the
// mask against the group and subtract the winning codeword.  Words lighter
// than half the group distance are already minimal and return unchanged.
// Necessary before any coset decision downstream: a residual equal to a
// logical of the state must come back as zero.
Mask128 reduce_by_group(const Mask128& r, const RmCode& group, SclDecoder& dec);

// --- Steane blocks ---

// correct_z: a |0>-type ancilla couples as control onto the data and is
// read in the X basis, so the word carries the Z flips.  correct_x: the
// data couples onto a |+>-type ancilla read in the Z basis.
enum class EcDirection : uint8_t { correct_z, correct_x };

struct EcResult {
    CosetDecision decision = CosetDecision::trivial;
    int seen_weight = 0; // Hamming weight of the decoder input word
};

// One Steane block on the data frame.  Samples the transversal CNOT and
// readout noise, then applies the measured word itself as the correction,
// which cancels the data's incoming error of that type exactly; the decoder
// is consulted only for the coset decision, which is recorded for the
// logical frame rather than folded into the pattern.  Words within half the
// coset distance skip the decoder: the zero codeword is strictly closest.
EcResult steane_ec(Frame& data, const AncillaResidual& anc, EcDirection dir,
                   const RmCode& decision, const NoiseModel& noise,
                   SclDecoder& dec, SplitMix64& rng);

// forward: lowers the X order toward the phase-gate profile using a |+>
// ancilla of the target code; the decision runs at the source code's full
// X distance.  reverse: restores the Clifford profile with a |0> ancilla
// of the target code; the decision distance drops to the short side, the
// error-prone step of the whole rectangle.
enum class SwitchDirection : uint8_t { forward, reverse };

EcResult code_switch(Frame& data, SwitchDirection dir, const AncillaResidual& anc,
                     const PqrmCode& high, const PqrmCode& low,
                     const NoiseModel& noise, SclDecoder& dec, SplitMix64& rng);

// Pauli twirl of frames crossing a transversal T layer: each X-supported
// wire spawns an independent fair-coin Z.
Mask128 twirl_t(const Mask128& x_mask, SplitMix64& rng);

// Leading-term logical-rate estimate for a distance-15 block whose trailing
// decoders see the given mean flip weights: counts the minimum-weight odd
// words covered half-way, per decoder input side.
double estimate_clifford_rate(double mean_wz, double mean_wx);

// --- ancilla pool ---

struct PoolFloorError : std::runtime_error {
    double measured_rate;
    uint64_t attempts;
    PoolFloorError(double rate, uint64_t tries)
        : std::runtime_error("acceptance rate " + std::to_string(rate) + " after " +
                             std::to_string(tries) + " attempts, target unreachable"),
          measured_rate(rate), attempts(tries) {}
};

struct AcceptanceEstimate {
    uint64_t shots = 0, accepted = 0;
    double rate = 0;
};

// Acceptance rate of the verified preparation under independent per-site
// noise, fixed shot count.
AcceptanceEstimate measure_acceptance(const PrepProtocol& p, const NoiseModel& noise,
                                      uint64_t shots, uint64_t seed);

// Accepted preparations of one protocol at one noise point.  A shot is
// stored as the ids of the faults that fired (indices into the protocol
// noise tables, cnot entries first, then spam).  Clean shots and shots
// whose single fault is end-equivalent to one qubit flip fold into
// counters; everything else keeps its id list and is reassembled through
// the tables and reduced to the nearest state stabilizer on load.
class AncillaPool {
public:
    AncillaPool() = default;

    static AncillaPool generate(const PrepProtocol& p, const NoiseModel& noise,
                                uint64_t target_accepted, uint64_t seed,
                                uint64_t max_attempts = 0);

    // One chunk file: a JSON header line, then varint counters and records.
    void save(const std::string& path) const;
    static AncillaPool load(const std::string& path);
    static AncillaPool load_merged(const std::vector<std::string>& paths);
    std::string header_json() const;

    const PqrmCode& code() const { return code_; }
    PrepState state() const { return state_; }
    const NoiseModel& noise() const { return noise_; }
    uint64_t attempts() const { return attempts_; }
    uint64_t accepted() const { return accepted_; }
    double acceptance_rate() const {
        return attempts_ ? double(accepted_) / double(attempts_) : 0.0;
    }
    uint64_t clean_count() const { return clean_; }
    const std::vector<uint64_t>& single_counts() const { return singles_; }
    const std::vector<std::vector<uint32_t>>& multi_records() const { return multis_; }

    // Weighted draw with replacement over every accepted shot.
    const AncillaResidual& draw(SplitMix64& rng) const;

private:
    PqrmCode code_;
    PrepState state_ = PrepState::zero;
    CheckOrder order_ = CheckOrder::x_pairs_first;
    PermutationSchedule sched_;
    NoiseModel noise_;
    uint64_t seed_ = 0;
    uint64_t attempts_ = 0, accepted_ = 0, clean_ = 0;
    std::vector<uint64_t> singles_; // 3 per wire: X, Z, Y
    std::vector<std::vector<uint32_t>> multis_;

    std::vector<AncillaResidual> residuals_; // singles then multis, reduced
    std::vector<uint64_t> cum_;              // prefix weights over singles
    uint64_t multi_base_ = 0;

    void finalize(const NoiseTables& tables);
    friend struct PoolCodec;
};

// --- extended rectangles ---

enum class LogicalGate : uint8_t { gate_cnot, gate_h, gate_s, gate_t };

struct ExRecSpec {
    LogicalGate gate = LogicalGate::gate_cnot;
    PqrmCode code{3, 3, 7};        // Clifford-profile block
    PqrmCode switch_code{2, 4, 7}; // phase-gate profile, T rectangle only
    NoiseModel noise;
    // Also apply the post-switch correction physically (extra depolarizing
    // layer); default keeps it in the Pauli frame.
    bool both_corrections = false;
    int list_size = 32;
};

struct PoolSet {
    const AncillaPool* zero_main = nullptr;  // |0> of the Clifford profile
    const AncillaPool* plus_main = nullptr;  // |+> of the Clifford profile
    const AncillaPool* plus_switch = nullptr; // |+> of the phase-gate profile
};

struct ClassRate {
    std::string label;
    uint64_t errors = 0;
    double rate = 0, stderr_ = 0;
};

struct ExRecResult {
    LogicalGate gate = LogicalGate::gate_cnot;
    uint64_t trials = 0;
    uint64_t failures = 0; // trials with at least one wrong trailing decision
    double rate = 0, stderr_ = 0;
    std::vector<ClassRate> classes;
    // mean input weight of the dominant trailing decoders (control-side Z,
    // target-side X for the two-block gate)
    double mean_seen_z = 0, mean_seen_x = 0;
    uint64_t lec_anomalies = 0;              // leading decisions that flipped
    std::string to_json() const;
};

// Assembles the rectangle for spec.gate (leading corrections, noisy
// transversal gate, trailing corrections), draws every ancilla from the
// pools with replacement, and counts wrong trailing decisions per logical
// class.  Throws std::invalid_argument when a needed pool is missing or
// was generated at a different noise point or code.
ExRecResult run_exrec(const ExRecSpec& spec, const PoolSet& pools,
                      uint64_t trials, uint64_t seed);

} // namespace qrm
