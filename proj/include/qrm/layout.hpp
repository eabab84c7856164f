#pragma once
// 2D hypercube layout and the AOD move choreography on top of it.
//
// Atoms sit on a rows x cols grid. The layout is recursive: growing the
// dimension from m-1 to m duplicates the grid to the left (m odd) or
// above (m even), with coordinate bit m set in the copy. Odd coordinate
// bits therefore select columns and even bits select rows, and every
// sub-hypercube (some bits fixed) occupies a product of column and row
// stripes.
//
// Moves are discrete grid-cell translations of rectangular regions.
// Physical site spacing, step timing and acceleration limits are free
// parameters of the hardware and are not modeled here.

#include "qrm/circuit.hpp"
#include "qrm/gf2.hpp"
#include "qrm/rm.hpp"
#include "qrm/schedule.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace qrm {

struct Grid {
    int m = 0;
    int rows = 1;
    int cols = 1;
    std::vector<int> row_of, col_of;   // indexed by label
    std::vector<uint32_t> label_at;    // row-major, rows*cols entries

    uint32_t at(int r, int c) const { return label_at[size_t(r) * cols + c]; }
    void validate() const;             // placement is a bijection
};

Grid layout2d(int m);

struct Rect {
    int r0, c0, r1, c1;                // inclusive corners
    int area() const { return (r1 - r0 + 1) * (c1 - c0 + 1); }
};

// A rectangle of atoms translated rigidly by (dr, dc).
struct Move {
    Rect src;
    int dr, dc;
};

struct MoveSet {
    std::vector<Move> moves;

    size_t atom_count() const;
    // Sources pairwise disjoint, targets pairwise disjoint, everything in
    // bounds. Throws on violation.
    void validate(const Grid& g) const;
};

// Exact cover of a cell set by rectangles: maximal horizontal runs per
// row, merged vertically when aligned. Throws on duplicate cells.
std::vector<Rect> decompose_rectangles(std::vector<std::pair<int, int>> cells);

// One MoveSet translating the given atoms by a common (dr, dc).
MoveSet translation_moves(const Grid& g, const std::vector<uint32_t>& labels,
                          int dr, int dc);

// Step t of the hypercube encoder: every atom with coordinate bit t set
// is translated onto the cell of its bit-t partner for the global CNOT,
// then returns. The movement is the same for the punctured and the full
// code; with the corner atom removed its partner just idles through the
// gate.
MoveSet encoding_moves(int m, int t);

// Sub-hypercube swap E_{i,j}: the two halves with x_{m-j} = 1 exchange
// places as rigid blocks (x_{m-i} toggled), everything else stays put.
MoveSet swap_moves(int i, int j, int m);

// Label permutation realized by a MoveSet: sigma[l] = label whose home
// cell atom l lands on; identity off the moved regions.
std::vector<uint32_t> apply_moves(const Grid& g, const MoveSet& ms);

// Full move program, one timeline per patch: the initialization pattern
// (atoms starting in the plus state, as zero-translation regions), m
// encoding steps, then the patch's swap sequence. Emitted as JSON lines
// {step, patch, op, regions: [{r0,c0,r1,c1,dr,dc}]}, preceded by one
// meta line whose null entries are free physical parameters.
std::string choreography(const PermutationSchedule& sched, const PqrmCode& code,
                         PrepState state, bool punctured = true);

} // namespace qrm
