#include "qrm/layout.hpp"

#include "json.hpp"

#include <algorithm>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <fstream>

namespace qrm {

// ---------------------------------------------------------------- schedule

PermutationSchedule PermutationSchedule::parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<std::optional<SwapToken>>> rows;
    size_t width = 0;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<std::optional<SwapToken>> row;
        std::string tok;
        while (ls >> tok) {
            if (tok == "-") {
                row.emplace_back(std::nullopt);
                continue;
            }
            if (tok != "E") throw std::invalid_argument("schedule: expected E or - token");
            SwapToken t;
            if (!(ls >> t.i >> t.j)) throw std::invalid_argument("schedule: truncated token");
            row.emplace_back(t);
        }
        if (row.empty()) continue;
        width = std::max(width, row.size());
        rows.push_back(std::move(row));
    }
    PermutationSchedule s;
    s.columns.assign(width, {});
    for (const auto& row : rows)
        for (size_t c = 0; c < row.size(); c++)
            if (row[c]) s.columns[c].push_back(*row[c]);
    return s;
}

PermutationSchedule PermutationSchedule::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("schedule: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string PermutationSchedule::serialize() const {
    size_t depth = 0;
    for (const auto& col : columns) depth = std::max(depth, col.size());
    // emit at least one row so all-empty columns survive a parse round trip
    if (!columns.empty() && depth == 0) depth = 1;
    std::ostringstream out;
    for (size_t t = 0; t < depth; t++) {
        for (size_t c = 0; c < columns.size(); c++) {
            if (c) out << "  ";
            if (t < columns[c].size())
                out << "E " << columns[c][t].i << ' ' << columns[c][t].j;
            else
                out << "-";
        }
        out << '\n';
    }
    return out.str();
}

F2Matrix PermutationSchedule::column_matrix(size_t col, int m) const {
    if (col >= columns.size()) throw std::out_of_range("schedule: no such column");
    F2Matrix a = F2Matrix::identity(m);
    for (const SwapToken& t : columns[col])
        a = a.mul(elementary_matrix(m, t.i, t.j));
    return a;
}

void PermutationSchedule::validate(int m) const {
    for (const auto& col : columns)
        for (const SwapToken& t : col) {
            if (t.i < 0 || t.j < 0 || t.i >= m || t.j >= m)
                throw std::invalid_argument("schedule: token index out of range");
            if (t.i == t.j) throw std::invalid_argument("schedule: diagonal token");
        }
}

// ------------------------------------------------------------------ layout

void Grid::validate() const {
    size_t n = size_t(1) << m;
    if (label_at.size() != n || size_t(rows) * cols != n)
        throw std::logic_error("grid: size mismatch");
    std::vector<char> seen(n, 0);
    for (uint32_t l : label_at) {
        if (l >= n || seen[l]) throw std::logic_error("grid: placement not bijective");
        seen[l] = 1;
    }
    for (uint32_t l = 0; l < n; l++)
        if (at(row_of[l], col_of[l]) != l) throw std::logic_error("grid: inverse map broken");
}

Grid layout2d(int m) {
    if (m < 0 || m > 14) throw std::invalid_argument("layout2d: m out of range");
    Grid g;
    g.m = m;
    g.rows = 1 << (m / 2);
    g.cols = 1 << ((m + 1) / 2);

    int rows = 1, cols = 1;
    std::vector<uint32_t> at = {0};
    for (int k = 1; k <= m; k++) {
        uint32_t hi = uint32_t(1) << (k - 1);
        if (k & 1) {
            // Duplicate to the left with the new bit set.
            std::vector<uint32_t> next(size_t(rows) * cols * 2);
            for (int r = 0; r < rows; r++)
                for (int c = 0; c < cols; c++) {
                    uint32_t l = at[size_t(r) * cols + c];
                    next[size_t(r) * (2 * cols) + c] = l | hi;
                    next[size_t(r) * (2 * cols) + c + cols] = l;
                }
            cols *= 2;
            at = std::move(next);
        } else {
            // Duplicate above with the new bit set.
            std::vector<uint32_t> next(size_t(rows) * 2 * cols);
            for (int r = 0; r < rows; r++)
                for (int c = 0; c < cols; c++) {
                    uint32_t l = at[size_t(r) * cols + c];
                    next[size_t(r) * cols + c] = l | hi;
                    next[size_t(r + rows) * cols + c] = l;
                }
            rows *= 2;
            at = std::move(next);
        }
    }
    g.label_at = std::move(at);
    g.row_of.resize(size_t(1) << m);
    g.col_of.resize(size_t(1) << m);
    for (int r = 0; r < g.rows; r++)
        for (int c = 0; c < g.cols; c++) {
            uint32_t l = g.at(r, c);
            g.row_of[l] = r;
            g.col_of[l] = c;
        }
    g.validate();
    return g;
}

std::vector<Rect> decompose_rectangles(std::vector<std::pair<int, int>> cells) {
    std::sort(cells.begin(), cells.end());
    if (std::adjacent_find(cells.begin(), cells.end()) != cells.end())
        throw std::invalid_argument("decompose_rectangles: duplicate cell");

    struct Run {
        int r, c0, c1;
    };
    std::vector<Run> runs;
    for (size_t i = 0; i < cells.size();) {
        size_t j = i;
        while (j + 1 < cells.size() && cells[j + 1].first == cells[i].first &&
               cells[j + 1].second == cells[j].second + 1)
            j++;
        runs.push_back({cells[i].first, cells[i].second, cells[j].second});
        i = j + 1;
    }
    std::vector<Rect> out;
    std::vector<char> used(runs.size(), 0);
    for (size_t i = 0; i < runs.size(); i++) {
        if (used[i]) continue;
        Rect rect{runs[i].r, runs[i].c0, runs[i].r, runs[i].c1};
        for (size_t j = i + 1; j < runs.size(); j++) {
            if (runs[j].r > rect.r1 + 1) break;
            if (used[j] || runs[j].r != rect.r1 + 1) continue;
            if (runs[j].c0 == rect.c0 && runs[j].c1 == rect.c1) {
                rect.r1++;
                used[j] = 1;
            }
        }
        out.push_back(rect);
    }
    return out;
}

MoveSet translation_moves(const Grid& g, const std::vector<uint32_t>& labels,
                          int dr, int dc) {
    std::vector<std::pair<int, int>> cells;
    cells.reserve(labels.size());
    for (uint32_t l : labels) cells.emplace_back(g.row_of[l], g.col_of[l]);
    MoveSet ms;
    for (const Rect& r : decompose_rectangles(std::move(cells)))
        ms.moves.push_back({r, dr, dc});
    return ms;
}

size_t MoveSet::atom_count() const {
    size_t n = 0;
    for (const Move& mv : moves) n += size_t(mv.src.area());
    return n;
}

void MoveSet::validate(const Grid& g) const {
    std::vector<char> src(g.label_at.size(), 0), dst(g.label_at.size(), 0);
    auto mark = [&](std::vector<char>& grid, int r, int c) {
        if (r < 0 || c < 0 || r >= g.rows || c >= g.cols)
            throw std::logic_error("moveset: cell out of bounds");
        char& cell = grid[size_t(r) * g.cols + c];
        if (cell) throw std::logic_error("moveset: overlapping regions");
        cell = 1;
    };
    for (const Move& mv : moves) {
        if (mv.src.r1 < mv.src.r0 || mv.src.c1 < mv.src.c0)
            throw std::logic_error("moveset: empty rectangle");
        for (int r = mv.src.r0; r <= mv.src.r1; r++)
            for (int c = mv.src.c0; c <= mv.src.c1; c++) {
                mark(src, r, c);
                mark(dst, r + mv.dr, c + mv.dc);
            }
    }
}

MoveSet encoding_moves(int m, int t) {
    if (t < 1 || t > m) throw std::invalid_argument("encoding_moves: step out of range");
    Grid g = layout2d(m);
    std::vector<uint32_t> moved;
    for (uint32_t l = 0; l < (uint32_t(1) << m); l++)
        if ((l >> (t - 1)) & 1) moved.push_back(l);
    // Clearing bit t lands on the partner: right for odd t, down for even.
    int dr = 0, dc = 0;
    if (t & 1)
        dc = 1 << ((t - 1) / 2);
    else
        dr = 1 << (t / 2 - 1);
    MoveSet ms = translation_moves(g, moved, dr, dc);
    ms.validate(g);
    return ms;
}

MoveSet swap_moves(int i, int j, int m) {
    if (i == j || i < 0 || j < 0 || i >= m || j >= m)
        throw std::invalid_argument("swap_moves: bad token");
    Grid g = layout2d(m);
    int cond = m - j;  // coordinate gating the swap
    int tog = m - i;   // coordinate toggled by it
    std::vector<uint32_t> lo, hi;
    for (uint32_t l = 0; l < (uint32_t(1) << m); l++) {
        if (!((l >> (cond - 1)) & 1)) continue;
        (((l >> (tog - 1)) & 1) ? hi : lo).push_back(l);
    }
    int w = 1 << ((tog - 1) / 2);
    int dr = 0, dc = 0;
    if (tog & 1)
        dc = w;
    else
        dr = w;
    // Gaining the toggled bit moves left/up, losing it moves right/down.
    MoveSet ms = translation_moves(g, lo, -dr, -dc);
    MoveSet back = translation_moves(g, hi, dr, dc);
    ms.moves.insert(ms.moves.end(), back.moves.begin(), back.moves.end());
    ms.validate(g);
    return ms;
}

std::vector<uint32_t> apply_moves(const Grid& g, const MoveSet& ms) {
    std::vector<uint32_t> sigma(size_t(1) << g.m);
    for (uint32_t l = 0; l < sigma.size(); l++) sigma[l] = l;
    for (const Move& mv : ms.moves)
        for (int r = mv.src.r0; r <= mv.src.r1; r++)
            for (int c = mv.src.c0; c <= mv.src.c1; c++)
                sigma[g.at(r, c)] = g.at(r + mv.dr, c + mv.dc);
    return sigma;
}

std::string choreography(const PermutationSchedule& sched, const PqrmCode& code,
                         PrepState state, bool punctured) {
    int m = code.m;
    sched.validate(m);
    Grid g = layout2d(m);
    size_t patches = sched.columns.empty() ? 1 : sched.columns.size();

    nlohmann::json meta = {
        {"op", "meta"},
        {"m", m},
        {"rows", g.rows},
        {"cols", g.cols},
        {"patches", patches},
        {"state", state == PrepState::zero ? "zero" : "plus"},
        {"punctured", punctured},
        {"site_spacing", nullptr},
        {"step_duration", nullptr},
    };
    std::ostringstream out;
    out << meta.dump() << '\n';

    for (size_t p = 0; p < patches; p++) {
        int step = 0;
        auto emit = [&](const char* op, const MoveSet& ms) {
            nlohmann::json regions = nlohmann::json::array();
            for (const Move& mv : ms.moves)
                regions.push_back({{"r0", mv.src.r0},
                                   {"c0", mv.src.c0},
                                   {"r1", mv.src.r1},
                                   {"c1", mv.src.c1},
                                   {"dr", mv.dr},
                                   {"dc", mv.dc}});
            nlohmann::json line = {
                {"step", step++}, {"patch", p}, {"op", op}, {"regions", regions}};
            out << line.dump() << '\n';
        };

        // Atoms starting in the plus state, everything else in zero.
        std::vector<uint32_t> plus_inits;
        for (uint32_t l = punctured ? 1 : 0; l < (uint32_t(1) << m); l++) {
            int pc = popcount64(l);
            bool plus_init =
                state == PrepState::zero ? pc <= code.r_x : pc > code.r_z;
            if (plus_init) plus_inits.push_back(l);
        }
        emit("init", translation_moves(g, plus_inits, 0, 0));
        for (int t = 1; t <= m; t++) emit("encode", encoding_moves(m, t));
        // column_matrix multiplies listed tokens on the right, so the last
        // listed swap is the first one the atoms see
        if (!sched.columns.empty()) {
            const auto& col = sched.columns[p];
            for (auto it = col.rbegin(); it != col.rend(); ++it)
                emit("swap", swap_moves(it->i, it->j, m));
        }
    }
    return out.str();
}

} // namespace qrm
