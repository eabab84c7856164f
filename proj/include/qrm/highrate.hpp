#pragma once
// Logical Clifford synthesis for the self-dual even-m family
// QRM(r-1, r-1, 2r) with k = C(2r, r) logical qubits.  Coordinate
// substitutions act on the degree-r logical monomials through minors of
// the substitution matrix; transversal CNOTs between two code blocks
// promote sums of those actions to products, which generates every
// CNOT-type gate; the folded CZ, transversal H and transversal S close
// the generating set of the symplectic group on the logical qubits.

#include "qrm/gf2.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qrm {

// Degree-r monomials in the 2r variables, stored as variable bitmasks
// (bit v-1 set means x_v is a factor).  The first k/2 slots are the
// monomials containing x_1, ordered lexicographically by index set; the
// second half holds their complements in matching order, so the slot-i
// and slot-(k/2+i) monomials multiply to x_1...x_2r, which evaluates to
// one at exactly one point.  That pairing is what makes the matched X
// and Z logicals anticommute.
//
// X logicals read the slots in order.  Z logicals are rotated by half:
// the Z operator paired with the X at slot i is built from the
// complement monomial, which sits at z-slot i.  With that ordering the
// symplectic form on (X-part, Z-part) vectors is the swap [[0,I],[I,0]].
struct MonomialBasis {
    int r = 0;
    int k = 0;
    std::vector<uint32_t> slot;

    static MonomialBasis make(int r);

    uint32_t full() const { return (uint32_t(1) << (2 * r)) - 1; }
    uint32_t complement(uint32_t m) const { return full() & ~m; }
    int x_slot(uint32_t m) const;
    int z_slot(uint32_t m) const { return (x_slot(m) + k / 2) % k; }
    std::string monomial_name(uint32_t m) const;
};

// Action of an invertible coordinate substitution on the logical
// monomial basis.  Row v of a lists the image of x_{v+1}; entry (S, U)
// of the result is the GF(2) determinant of the submatrix of a on
// variable rows S and columns U, i.e. the coefficient of monomial U in
// the expanded image of monomial S once all lower-degree terms are
// dropped into the stabilizer group.  Multiplicative by Cauchy-Binet,
// so the result is always invertible.  Throws std::invalid_argument if
// a is not 2r x 2r invertible.
F2Matrix phi(const F2Matrix& a, int r);

// Sums of substitution actions span the full k x k matrix algebra.  The
// witness below is a fixed alternating product of (phi + phi) factors
// that collapses to a single set bit; every one-entry matrix is then a
// permutation sandwich of it, and products of such sums of actions are
// realized physically one summand at a time through transversal CNOTs.
struct SingleOneExpansion {
    std::string formula;          // factored form, for reports
    std::vector<F2Matrix> terms;  // substitution words, one per summand
    F2Matrix matrix;              // sum of phi(term): exactly one set bit
    size_t row = 0, col = 0;
};
SingleOneExpansion gen_single_one(int r);

// Variable swaps moving the single-one bit to (target_row, target_col),
// both 0-based slot indices.  p_left sends the target row monomial to
// the base row monomial, p_right sends the base column monomial to the
// target column monomial; variables present in exactly one of the two
// monomials are paired off in ascending order and swapped.  Then
// phi(p_left) * base * phi(p_right) has its bit at the target.
struct SandwichWitness {
    F2Matrix p_left, p_right;      // 2r x 2r permutations
    F2Matrix phi_left, phi_right;  // their k x k images
};
SandwichWitness sandwich_to(size_t target_row, size_t target_col, int r);

// Writes a symmetric permutation t with at least one fixed point as
// U U^T with U invertible.  Conjugates t by swaps into paired blocks
// [[0,1],[1,0]] followed by fixed points, fills U with the staircase
// rows (row 2i-1 covers columns 1..2i, row 2i covers 1..2i-1 and 2i+1,
// the first fixed row covers 1..2l+1, later fixed rows are unit rows),
// then conjugates back.  Throws std::invalid_argument naming the failed
// precondition: not symmetric, not a permutation, or no diagonal one.
F2Matrix uu_t_decompose(const F2Matrix& t);

// The fold gate: CZ between mirror-image physical qubits plus S on the
// fold axis.  On the logicals it is the phase-type gate whose coupling
// matrix sends each monomial to its image under the variable relabeling
// tau: x_{2i-1} <-> x_{2i}.  The coupling is a symmetric permutation
// with a diagonal one at the product of the odd-indexed variables, so
// it is a valid uu_t_decompose input.  The phase report records the
// physical consistency condition: for every stabilizer monomial of
// degree below r, its evaluation support and that of its tau image
// overlap in a multiple of four positions, so the S gates contribute no
// net phase on stabilizers.
struct FoldGate {
    F2Matrix t_cz;                 // k x k symmetric permutation
    F2Matrix action;               // 2k x 2k phase-type matrix
    size_t diagonal_ones = 0;
    uint32_t diagonal_witness = 0; // monomial mapped to its complement
    size_t monomials_checked = 0;  // stabilizer monomials, degree < r
    bool phases_cancel = false;    // every overlap divisible by four
};
FoldGate fold_transversal(int r);

// Symplectic building blocks on the k logical qubits.  Rows are images;
// the first k columns are X components, the last k are Z components.
F2Matrix symplectic_form(size_t k);
bool is_symplectic(const F2Matrix& m);
F2Matrix cnot_type(const F2Matrix& u);   // [[U, 0], [0, U^-T]]
F2Matrix phase_type(const F2Matrix& s);  // [[I, S], [0, I]], s symmetric
F2Matrix hadamard_type(size_t k);        // [[0, I], [I, 0]]

// Logical actions of the transversal single-block gates.  Transversal H
// exchanges the X and Z logicals of the same monomial, which lands on
// the half-rotated slot; transversal S multiplies each X logical by the
// Z logical of the same monomial.
F2Matrix transversal_h_action(const MonomialBasis& basis);
F2Matrix transversal_s_action(const MonomialBasis& basis);

// A physical gate program over two code blocks: the data block carrying
// the state and a scratch block consumed by transversal CNOTs.  perm
// applies a coordinate substitution to the data block; the other gates
// are transversal or folded single/two-block Cliffords.
enum class HighGate : uint8_t { perm, transversal_cnot, fold_cz, transversal_h, transversal_s };
enum class CnotDir : uint8_t { data_ctrl, anc_ctrl };

struct GateOp {
    HighGate kind = HighGate::perm;
    CnotDir dir = CnotDir::data_ctrl;  // transversal_cnot only
    F2Matrix sub;                      // perm only
};

struct GateProgram {
    int r = 0;
    std::vector<GateOp> ops;

    // One gate per line: "PERM A=<hex row masks, ':' separated>",
    // "TCNOT data|anc", "FOLDCZ", "TH", "TS".
    std::string to_text() const;
    static GateProgram parse(const std::string& text, int r);
};

// Composed action of a program on the data block's logical qubits,
// tracked exactly on the joint (data, scratch) system.  Throws
// std::logic_error if the program leaves the scratch block entangled
// or transformed, since the data action alone is then undefined.
F2Matrix program_action(const GateProgram& prog);

// Decomposes an arbitrary symplectic target on the logical qubits into
// the five physical primitives: a column sweep reduces the target to
// generator-level CNOT-type, phase-type and per-qubit Hadamard steps,
// and each step is lowered through the constructive existence proof
// (transversal-CNOT conjugation for sums of substitution actions,
// commutators for CNOT-type gates, decorated folds for phase-type
// gates).  No length optimization is attempted.  The composed action
// of the result is verified to equal the target bit for bit.  Throws
// std::invalid_argument if target is not symplectic of size 2k.
GateProgram synthesize(const F2Matrix& target, int r);

} // namespace qrm
