#pragma once
// Encoding circuits on hypercube-labeled wires, Pauli fault propagation,
// and a word-parallel flip simulator for circuit-level noise.

#include "qrm/gf2.hpp"
#include "qrm/rm.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace qrm {

enum class Basis : uint8_t { Z, X };
enum class PrepState : uint8_t { zero, plus };

enum class LayerKind : uint8_t { init, cnot, meas, perm, tick, depol1 };

// One circuit layer.  cnot layers hold disjoint (control, target) pairs;
// perm layers reference an entry of Circuit::perms; depol1 layers mark
// where single-qubit depolarizing noise is injected (corr = true selects
// the correction-noise rate instead of the gate rate).
struct Layer {
    LayerKind kind = LayerKind::tick;
    Basis basis = Basis::Z;
    bool corr = false;
    uint32_t qubit = 0;
    uint32_t perm_id = 0;
    std::vector<std::pair<uint32_t, uint32_t>> pairs;
    std::vector<uint32_t> qubits;
};

struct Circuit {
    uint32_t n_qubits = 0;
    std::vector<Layer> layers;
    // Permutation table referenced by perm layers.  The text format carries
    // only the id, so the table travels with the object, not the text.
    std::vector<std::vector<uint32_t>> perms;

    explicit Circuit(uint32_t n = 0) : n_qubits(n) {}

    void add_init(uint32_t q, Basis b);
    void add_cnot_layer(std::vector<std::pair<uint32_t, uint32_t>> pairs);
    void add_meas(uint32_t q, Basis b);
    uint32_t add_perm(std::vector<uint32_t> sigma); // returns map id
    void add_perm_ref(uint32_t id);
    void add_tick();
    void add_depol1(std::vector<uint32_t> qubits, bool corr);

    size_t count_cnots() const;
    size_t count_inits(Basis b) const;
    size_t count_meas() const;

    // Throws std::invalid_argument on a malformed circuit: qubit out of
    // range, a qubit used twice within one cnot layer, a qubit measured
    // twice, or a dangling perm id.
    void validate() const;

    // Line-oriented text: INIT q B / CNOT c t c t ... / MEAS q B /
    // PERM id / TICK / DEPOL1 S|C q q ...  Round-trips bit-exactly.
    std::string to_text() const;
    static Circuit from_text(const std::string& text);
};

// All-to-all CNOT cascade of Fig-2 shape: layer t (t = 1..m) couples every
// pair of labels differing exactly at bit t-1.  zero: CNOTs point from the
// clear-bit label to the set-bit label, |+> inputs on labels with at most
// r_x ones, |0> elsewhere.  plus: every CNOT reversed, |0> inputs on labels
// with at most r_z ones, |+> elsewhere.  punctured: label 0 is removed
// together with its m CNOTs (the wire stays allocated but untouched, so
// masks keep natural indexing).
Circuit hypercube_encoder(int r_x, int r_z, int m, PrepState state, bool punctured);
inline Circuit hypercube_encoder(const PqrmCode& c, PrepState s) {
    return hypercube_encoder(c.r_x, c.r_z, c.m, s, true);
}
inline Circuit hypercube_encoder(const QrmCode& c, PrepState s) {
    return hypercube_encoder(c.r_x, c.r_z, c.m, s, false);
}

// Appends a tick and one measurement line per initialized qubit, in label
// order.
void append_transversal_meas(Circuit& c, Basis b);

// A single inserted Pauli.  Gate-addressed faults (slot >= 0) attach to a
// cnot pair of the addressed layer; pauli bits then read (x_ctrl, z_ctrl,
// x_tgt, z_tgt).  Wire-addressed faults (slot = -1) put (x, z) = pauli bits
// 0..1 on `wire`.  Faults act after their layer except on meas layers,
// where they act before the readout.
struct FaultEvent {
    uint32_t layer = 0;
    int32_t slot = -1;
    uint8_t pauli = 0;
    uint32_t wire = 0;

    static FaultEvent on_wire(uint32_t layer, uint32_t wire, bool x, bool z) {
        return FaultEvent{layer, -1, uint8_t((x ? 1 : 0) | (z ? 2 : 0)), wire};
    }
    static FaultEvent on_gate(uint32_t layer, uint32_t slot, uint8_t pauli4) {
        return FaultEvent{layer, int32_t(slot), pauli4, 0};
    }
};

// Pauli masks over the wires at the end of the circuit.  Measured wires are
// consumed and report nothing here.
struct ResidualError {
    F2Vector x_mask, z_mask;
};

// Pushes the fault through the remaining layers: X copies control to
// target, Z copies target to control, perm layers relabel both masks.
// meas_flips, if given, receives one bit per meas line in layer order (the
// readout flip the fault causes there).
ResidualError propagate_fault(const Circuit& c, const FaultEvent& f,
                              std::vector<uint8_t>* meas_flips = nullptr);
ResidualError propagate_fault_set(const Circuit& c, const std::vector<FaultEvent>& fs,
                                  std::vector<uint8_t>* meas_flips = nullptr);

// Every location where the noise model can insert a fault: one per cnot
// pair (15 two-qubit patterns), one per init line (the state flip), one per
// meas line (the readout flip).
struct FaultSite {
    uint32_t layer = 0;
    int32_t slot = -1;
    LayerKind kind = LayerKind::cnot;
    uint32_t q0 = 0, q1 = 0;
};
std::vector<FaultSite> fault_sites(const Circuit& c);

struct NoiseModel {
    double p_cnot = 0;   // 15-way two-qubit depolarizing after each cnot
    double p_spam = 0;   // state flip after init, readout flip before meas
    double p_single = 0; // 3-way depolarizing at depol1 layers
    double p_corr = 0;   // same, at depol1 layers marked corr
};

// One simulated batch of 64 shots (bit s of every word is shot s).
struct BatchResult {
    struct MeasRecord {
        uint32_t qubit = 0;
        Basis basis = Basis::Z;
        uint64_t flips = 0;
    };
    std::vector<MeasRecord> meas;          // in meas-line order
    std::array<Mask128, 64> x_res, z_res;  // per-shot residual masks
    uint64_t cnot_faults = 0, spam_flips = 0, single_faults = 0;
};

// Samples faults with geometric gap scanning and propagates X/Z flip
// frames word-parallel across 64 shots.  Deterministic in (seed, batch)
// regardless of call order.  randomize_inits draws a fresh Z frame on |0>
// inits and X frame on |+> inits each shot, which samples the true
// transversal-readout distribution of the prepared stabilizer state; turn
// it off to study noise frames alone.  Requires n_qubits <= 128.
BatchResult flip_simulate(const Circuit& c, const NoiseModel& noise,
                          uint64_t seed, uint64_t batch,
                          bool randomize_inits = true);

} // namespace qrm
