#pragma once
// Four-patch verified ancilla preparation: permuted hypercube encoders
// cross-checked by transversal CNOTs, malignant-fault search over deduped
// fault classes with a meet-in-the-middle dictionary, and the randomized
// sub-hypercube swap search that produced the shipped schedules.

#include "qrm/circuit.hpp"
#include "qrm/gf2.hpp"
#include "qrm/rm.hpp"
#include "qrm/schedule.hpp"

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qrm {

enum class PauliType : uint8_t { X, Z };

// Which error type gets the two pairwise tests.  x_pairs_first: patches
// (1,2) and (3,4) compare X frames through Z-basis readouts, the surviving
// pair compares Z frames through one X-basis readout.  z_pairs_first is the
// mirror image obtained by reversing every verification CNOT and swapping
// readout bases.
enum class CheckOrder : uint8_t { x_pairs_first, z_pairs_first };

// One transversal readout's acceptance test: push the readout word through
// the canonical encoder once more (zeta for the forward circuit, mu for the
// reversed one) and keep the wires whose canonical input is frozen.  The
// kernel is exactly the group of fault-free readout words.
struct DetectorMap {
    bool use_zeta = false;
    Mask128 selector;
    int m = 0;

    Mask128 apply(Mask128 word) const;
    int count() const { return selector.weight(); }
};

// Detector for flips of `type` on a patch of `code` prepared in `state`.
DetectorMap detector_map(const PqrmCode& code, PrepState state, PauliType type);

// Stabilizer group available for reducing a residual of `type` left on an
// accepted output patch.  Shortened when the group must fix the encoded
// logical (X on |0>, Z on |+>); the relaxed direction keeps the full
// punctured code.  Equals the matching detector kernel.
RmCode reduction_group(const PqrmCode& code, PrepState state, PauliType type);

// Where one patch's Pauli frames flow: x_meas / z_meas name the readout
// patch (2..4, 0 = none) that collects the flips, x_out / z_out say whether
// they also reach the surviving output patch.
struct PatchGlue {
    int x_meas = 0, z_meas = 0;
    bool x_out = false, z_out = false;
};

struct PrepProtocol {
    PqrmCode code;
    PrepState state = PrepState::zero;
    CheckOrder order = CheckOrder::x_pairs_first;
    PermutationSchedule schedule;

    std::array<Circuit, 4> patches;   // encoder + composed column swap
    std::array<F2Matrix, 4> perms;
    std::array<PatchGlue, 4> glue;
    std::array<DetectorMap, 3> readout_det; // readouts of patches 2, 3, 4
    DetectorMap det_x, det_z;               // by error type
    RmCode reduce_x, reduce_z;

    int n_wires() const { return 1 << code.m; }
};

// Assembles the four-patch protocol.  Throws std::invalid_argument unless
// the schedule has exactly four columns of valid tokens and the code
// carries a single logical qubit (r_z = m - r_x - 1).
PrepProtocol build_protocol(const PqrmCode& code, PrepState state,
                            const PermutationSchedule& schedule,
                            CheckOrder order = CheckOrder::x_pairs_first);

// One execution with explicit encoder faults (per patch, acting inside the
// patch circuits).  checks[] hold the three readouts after the detector
// map; the run is accepted when all check bits vanish.
struct ProtocolRun {
    std::array<Mask128, 3> checks;
    Mask128 out_x, out_z;

    bool accepted() const {
        return !(checks[0].any() || checks[1].any() || checks[2].any());
    }
};
ProtocolRun run_with_faults(const PrepProtocol& p,
                            const std::array<std::vector<FaultEvent>, 4>& faults);

// Exact test "residual reducible to weight <= t by the group", by meeting
// two half-weight balls at their group syndromes.  Cost per query is about
// C(127, ceil(t/2)) syndrome lookups, so t <= 6 stays cheap.
class ReducedWeightTester {
public:
    ReducedWeightTester(const RmCode& group, int m);
    bool leq(const Mask128& residual, int t);
    int exact(const Mask128& residual, int t_max); // min(rw, t_max + 1)

private:
    void grow(int j);
    int m_ = 0;
    std::vector<Mask128> rows_;       // parity checks of the group
    std::vector<Mask128> col_;        // syndrome of each unit vector
    std::vector<std::vector<std::pair<uint64_t, uint64_t>>> balls_; // sorted
    Mask128 syndrome(const Mask128& w) const;
};

struct MitmBudget {
    size_t dict_bytes = size_t(5) << 29; // 2.5 GiB of dictionary entries
    int max_shards = 4096;
    int sample_cap = 8; // witnesses kept per order
};

// Thrown when even the maximum shard count cannot fit one dictionary pass.
struct MitmResourceError : std::runtime_error {
    int order;
    explicit MitmResourceError(int k)
        : std::runtime_error("fault dictionary exceeds the memory budget at order " +
                             std::to_string(k)),
          order(k) {}
};

struct FaultRef {
    uint8_t patch = 0;
    FaultSite site;
    uint8_t pauli = 0;
};

struct MalignantSample {
    std::vector<FaultRef> sites; // one representative per fault class
    Mask128 residual;
    size_t residual_weight = 0;
    int order = 0;
};

struct OrderReport {
    int order = 0;
    uint64_t count = 0;    // distinct fault-class sets
    uint64_t weighted = 0; // underlying site tuples (class multiplicities)
    bool suppression_ok = true;
    std::vector<MalignantSample> samples;
};

struct FtVerdict {
    PauliType type = PauliType::X;
    int max_order = 0;
    bool suppression = false;
    bool strict_ft = true;
    std::vector<OrderReport> orders;
    std::string to_json() const;
};

// Malignant = accepted by every check yet irreducible below the fault
// order (strictly below order - 1 when suppression is requested).  Fault
// universe: encoder init flips and the 15 CNOT Pauli patterns restricted
// to `type`, merged per patch into check-pattern classes (equal patterns
// pin the output residual up to a harmless group element); verification-
// layer faults and readout flips are excluded.
FtVerdict check_strict_ft(const PrepProtocol& p, PauliType type, int max_order,
                          bool suppression = false, const MitmBudget& budget = {});
uint64_t count_malignant(const PrepProtocol& p, PauliType type, int order,
                         const MitmBudget& budget = {});
// Reference counter: walks every class combination directly.  Small m only.
uint64_t count_malignant_naive(const PrepProtocol& p, PauliType type, int order);

// Pre-sieve for schedule pairs: every column of A^-1 B must contain at
// least two ones, otherwise two single faults (one per patch) cancel in
// the checks while leaving a low-weight output error.
bool necessary_condition(const F2Matrix& A, const F2Matrix& B);

// Strict FT of the two-patch sub-protocol (patch permuted by A checked
// against a patch permuted by B) at every order 1..order.
bool pair_check(const F2Matrix& A, const F2Matrix& B, const PqrmCode& code,
                PrepState state, PauliType type, int order,
                const MitmBudget& budget = {});

// Column recipe for the randomized search: a fixed prefix, then
// sample_length sampled tokens whose j values must cover require_j, avoid
// forbid_j, and fill the rest freely; i is drawn uniformly from the other
// indices.  sample_length = 0 pins the column to its prefix.
struct ColumnConstraint {
    std::vector<SwapToken> prefix;
    std::vector<int> require_j;
    std::vector<int> forbid_j;
    int sample_length = 0;
};

struct SearchConstraints {
    PqrmCode code;
    PrepState state = PrepState::plus;
    int order = 2; // pairwise strict-FT target
    std::vector<ColumnConstraint> columns; // two or four
};

// Samples candidate column sets under the constraints, sieves each pair
// with necessary_condition, then the cheaper Z-type pair check, then the
// X-type check, and collects every candidate whose pairs all pass.
// budget = number of sampled candidates; zero yields nothing.
std::vector<PermutationSchedule> search_schedules(const SearchConstraints& cons,
                                                  uint64_t seed, uint64_t budget);

// The protocol's full stochastic fault table, flattened for acceptance
// sampling: check contributions are already pushed through the detector
// maps.  cnot entries fire independently with p_cnot / 15, spam entries
// (init flips and readout flips) with p_spam.
struct FaultAction {
    std::array<Mask128, 3> checks;
    Mask128 out_x, out_z;
};
struct NoiseTables {
    std::vector<FaultAction> cnot;
    std::vector<FaultAction> spam;
};
NoiseTables protocol_noise_tables(const PrepProtocol& p);

} // namespace qrm
