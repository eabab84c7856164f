#pragma once
// Sub-hypercube swap schedules: ordered token columns, one per patch.

#include "qrm/gf2.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace qrm {

// E_{i,j} is the identity matrix with an extra one at row i, column j,
// both zero-indexed. Acting on coordinates (x_m, ..., x_1)^T it toggles
// x_{m-i} on every label with x_{m-j} = 1.
struct SwapToken {
    int i = 0;
    int j = 0;
};

struct PermutationSchedule {
    std::vector<std::vector<SwapToken>> columns;

    // Text form: one token row per line, one `E i j` token per column.
    // Columns of unequal length pad missing rows with `-`. Text after
    // `#` is ignored.
    static PermutationSchedule parse(const std::string& text);
    static PermutationSchedule load(const std::string& path);
    std::string serialize() const;

    // Product of the column's elementary matrices, in listed order: the
    // first token is the leftmost factor. Successive tokens multiply on
    // the right, each adding column i of the running matrix to column j.
    F2Matrix column_matrix(size_t col, int m) const;

    void validate(int m) const;
};

} // namespace qrm
