#include "qrm/highrate.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace qrm {

namespace {

// Determinant over GF(2) of an r x r matrix whose rows arrive packed in
// machine words, in-place elimination.
bool det_packed(uint32_t* m, int r) {
    for (int c = 0; c < r; c++) {
        int p = -1;
        for (int i = c; i < r; i++)
            if ((m[i] >> c) & 1) { p = i; break; }
        if (p < 0) return false;
        std::swap(m[c], m[p]);
        for (int i = c + 1; i < r; i++)
            if ((m[i] >> c) & 1) m[i] ^= m[c];
    }
    return true;
}

int ctz32(uint32_t x) { return __builtin_ctz(x); }
int popcount32(uint32_t x) { return __builtin_popcount(x); }

} // namespace

MonomialBasis MonomialBasis::make(int r) {
    if (r < 1 || r > 8) throw std::invalid_argument("monomial basis needs 1 <= r <= 8");
    MonomialBasis b;
    b.r = r;
    int n = 2 * r;
    std::vector<std::vector<int>> tuples;
    for (uint32_t m = 0; m < (uint32_t(1) << n); m++) {
        if (popcount32(m) != r || !(m & 1)) continue;
        std::vector<int> t;
        for (uint32_t s = m; s; s &= s - 1) t.push_back(ctz32(s));
        tuples.push_back(std::move(t));
    }
    std::sort(tuples.begin(), tuples.end());
    for (const auto& t : tuples) {
        uint32_t m = 0;
        for (int v : t) m |= uint32_t(1) << v;
        b.slot.push_back(m);
    }
    size_t half = b.slot.size();
    for (size_t i = 0; i < half; i++)
        b.slot.push_back(b.slot[i] ^ ((uint32_t(1) << n) - 1));
    b.k = int(b.slot.size());
    return b;
}

int MonomialBasis::x_slot(uint32_t m) const {
    for (int i = 0; i < k; i++)
        if (slot[i] == m) return i;
    return -1;
}

std::string MonomialBasis::monomial_name(uint32_t m) const {
    if (!m) return "1";
    std::string s;
    for (uint32_t t = m; t; t &= t - 1)
        s += "x" + std::to_string(ctz32(t) + 1);
    return s;
}

F2Matrix phi(const F2Matrix& a, int r) {
    size_t n = size_t(2) * size_t(r);
    if (a.rows != n || a.cols != n)
        throw std::invalid_argument("substitution matrix must be 2r x 2r");
    if (a.rank() != n)
        throw std::invalid_argument("substitution matrix is singular");
    MonomialBasis basis = MonomialBasis::make(r);
    size_t k = size_t(basis.k);
    F2Matrix out(k, k);
    // Gather the columns of one target monomial once and share the packed
    // rows across all k source minors; the elimination then runs on
    // register-sized words.
    std::vector<uint32_t> gathered(n);
    uint32_t sub[16];
    for (size_t u = 0; u < k; u++) {
        uint32_t cols = basis.slot[u];
        for (size_t v = 0; v < n; v++) {
            uint32_t packed = 0;
            int bit = 0;
            for (uint32_t c = cols; c; c &= c - 1)
                packed |= uint32_t(a.get(v, size_t(ctz32(c)))) << bit++;
            gathered[v] = packed;
        }
        for (size_t s = 0; s < k; s++) {
            int i = 0;
            for (uint32_t rows = basis.slot[s]; rows; rows &= rows - 1)
                sub[i++] = gathered[size_t(ctz32(rows))];
            if (det_packed(sub, r)) out.set(s, u, true);
        }
    }
    return out;
}

SingleOneExpansion gen_single_one(int r) {
    MonomialBasis basis = MonomialBasis::make(r);
    size_t n = size_t(2) * size_t(r);
    std::vector<std::vector<F2Matrix>> factors;
    std::vector<std::vector<std::string>> names;
    factors.push_back({elementary_matrix(n, 0, size_t(r)), F2Matrix::identity(n)});
    names.push_back({"E(1," + std::to_string(r + 1) + ")", "I"});
    for (int i = 1; i < r; i++) {
        std::string a = std::to_string(i), b = std::to_string(i + 1);
        factors.push_back({elementary_matrix(n, size_t(i) - 1, size_t(i)),
                           elementary_matrix(n, size_t(i), size_t(i) - 1),
                           swap_matrix(n, size_t(i) - 1, size_t(i))});
        names.push_back({"E(" + a + "," + b + ")", "E(" + b + "," + a + ")",
                         "SWAP(" + a + "," + b + ")"});
    }

    SingleOneExpansion out;
    out.terms = factors[0];
    for (size_t f = 1; f < factors.size(); f++) {
        std::vector<F2Matrix> next;
        for (const F2Matrix& t : out.terms)
            for (const F2Matrix& g : factors[f])
                next.push_back(t.mul(g));
        out.terms = std::move(next);
    }
    for (size_t f = 0; f < names.size(); f++) {
        std::string piece = "(phi ";
        for (size_t i = 0; i < names[f].size(); i++)
            piece += (i ? " + phi " : "") + names[f][i];
        out.formula += (f ? " * " : "") + piece + ")";
    }

    out.matrix = F2Matrix(size_t(basis.k), size_t(basis.k));
    for (const F2Matrix& t : out.terms) {
        F2Matrix p = phi(t, r);
        for (size_t i = 0; i < out.matrix.w.size(); i++) out.matrix.w[i] ^= p.w[i];
    }

    size_t ones = 0;
    for (size_t i = 0; i < size_t(basis.k); i++)
        for (size_t j = 0; j < size_t(basis.k); j++)
            if (out.matrix.get(i, j)) { out.row = i; out.col = j; ones++; }
    if (ones != 1) throw std::logic_error("telescoped action sum is not a single one");

    uint32_t row_m = 1;
    for (int v = r + 2; v <= 2 * r; v++) row_m |= uint32_t(1) << (v - 1);
    uint32_t col_m = 0;
    for (int v = r + 1; v <= 2 * r; v++) col_m |= uint32_t(1) << (v - 1);
    if (out.row != size_t(basis.x_slot(row_m)) || out.col != size_t(basis.x_slot(col_m)))
        throw std::logic_error("single one landed off the predicted slot");
    return out;
}

namespace {

// Permutation sending monomial `from` to monomial `to` by swapping the
// variables present in exactly one of the two, paired in ascending order.
F2Matrix monomial_swap(uint32_t from, uint32_t to, size_t n) {
    F2Matrix p = F2Matrix::identity(n);
    uint32_t only_from = from & ~to, only_to = to & ~from;
    while (only_from) {
        size_t a = size_t(ctz32(only_from)), b = size_t(ctz32(only_to));
        only_from &= only_from - 1;
        only_to &= only_to - 1;
        p.set(a, a, false);
        p.set(b, b, false);
        p.set(a, b, true);
        p.set(b, a, true);
    }
    return p;
}

} // namespace

SandwichWitness sandwich_to(size_t target_row, size_t target_col, int r) {
    MonomialBasis basis = MonomialBasis::make(r);
    if (target_row >= size_t(basis.k) || target_col >= size_t(basis.k))
        throw std::invalid_argument("target slot out of range");
    SingleOneExpansion base = gen_single_one(r);
    size_t n = size_t(2) * size_t(r);

    SandwichWitness w;
    w.p_left = monomial_swap(basis.slot[target_row], basis.slot[base.row], n);
    w.p_right = monomial_swap(basis.slot[base.col], basis.slot[target_col], n);
    w.phi_left = phi(w.p_left, r);
    w.phi_right = phi(w.p_right, r);

    F2Matrix moved = w.phi_left.mul(base.matrix).mul(w.phi_right);
    F2Matrix expect(size_t(basis.k), size_t(basis.k));
    expect.set(target_row, target_col, true);
    if (!(moved == expect)) throw std::logic_error("sandwich missed the target slot");
    return w;
}

F2Matrix uu_t_decompose(const F2Matrix& t) {
    size_t k = t.rows;
    if (t.cols != k || !t.is_symmetric())
        throw std::invalid_argument("coupling matrix is not symmetric");
    for (size_t i = 0; i < k; i++)
        if (t.row_vector(i).weight() != 1)
            throw std::invalid_argument("coupling matrix is not a permutation");
    bool fixed_point = false;
    for (size_t i = 0; i < k; i++) fixed_point |= t.get(i, i);
    if (!fixed_point)
        throw std::invalid_argument("coupling matrix has no diagonal one");

    // Order the transposition pairs first, the fixed points after them.
    std::vector<size_t> order;
    size_t l = 0;
    for (size_t i = 0; i < k; i++)
        for (size_t j = i + 1; j < k; j++)
            if (t.get(i, j)) { order.push_back(i); order.push_back(j); l++; }
    for (size_t i = 0; i < k; i++)
        if (t.get(i, i)) order.push_back(i);

    F2Matrix perm(k, k);
    for (size_t p = 0; p < k; p++) perm.set(p, order[p], true);

    // Staircase rows: each pair block adds the two rows covering columns
    // 1..2i and 1..2i-1,2i+1; the first fixed point covers 1..2l+1 and
    // carries the odd self-overlap, the remaining fixed points are unit
    // rows.  All pairwise overlaps are then even except within a pair.
    F2Matrix uc(k, k);
    for (size_t i = 1; i <= l; i++) {
        for (size_t c = 0; c < 2 * i; c++) uc.set(2 * i - 2, c, true);
        for (size_t c = 0; c + 1 < 2 * i; c++) uc.set(2 * i - 1, c, true);
        uc.set(2 * i - 1, 2 * i, true);
    }
    for (size_t c = 0; c <= 2 * l; c++) uc.set(2 * l, c, true);
    for (size_t i = 2 * l + 1; i < k; i++) uc.set(i, i, true);

    F2Matrix u = perm.transpose().mul(uc).mul(perm);
    if (!(u.mul(u.transpose()) == t) || u.rank() != k)
        throw std::logic_error("staircase construction failed to reproduce the coupling");
    return u;
}

namespace {

uint32_t tau_relabel(uint32_t m, uint32_t odd_bits) {
    return ((m & odd_bits) << 1) | ((m >> 1) & odd_bits);
}

} // namespace

FoldGate fold_transversal(int r) {
    MonomialBasis basis = MonomialBasis::make(r);
    size_t k = size_t(basis.k);
    uint32_t odd = 0x55555555u & basis.full();

    FoldGate g;
    g.t_cz = F2Matrix(k, k);
    for (size_t i = 0; i < k; i++)
        g.t_cz.set(i, size_t(basis.z_slot(tau_relabel(basis.slot[i], odd))), true);
    if (!g.t_cz.is_symmetric())
        throw std::logic_error("fold coupling is not symmetric");
    for (size_t i = 0; i < k; i++) g.diagonal_ones += g.t_cz.get(i, i);
    g.diagonal_witness = odd;
    if (!g.t_cz.get(size_t(basis.x_slot(odd)), size_t(basis.x_slot(odd))))
        throw std::logic_error("odd-variable witness is off the diagonal");
    g.action = phase_type(g.t_cz);

    // S gates sit on the diagonal of the fold, so a stabilizer picks up i
    // phases on the overlap of its support with its mirror image; weight
    // divisible by four means the product is +1.
    g.phases_cancel = true;
    for (uint32_t m = 0; m < (uint32_t(1) << (2 * r)); m++) {
        if (popcount32(m) >= r) continue;
        g.monomials_checked++;
        uint32_t joint = m | tau_relabel(m, odd);
        size_t wt = size_t(1) << (2 * r - popcount32(joint));
        if (wt % 4) g.phases_cancel = false;
    }
    return g;
}

F2Matrix symplectic_form(size_t k) {
    F2Matrix w(2 * k, 2 * k);
    for (size_t i = 0; i < k; i++) {
        w.set(i, k + i, true);
        w.set(k + i, i, true);
    }
    return w;
}

bool is_symplectic(const F2Matrix& m) {
    if (m.rows != m.cols || m.rows % 2) return false;
    F2Matrix form = symplectic_form(m.rows / 2);
    return m.mul(form).mul(m.transpose()) == form;
}

F2Matrix cnot_type(const F2Matrix& u) {
    size_t k = u.rows;
    auto inv = u.inverse();
    if (u.cols != k || !inv)
        throw std::invalid_argument("cnot-type block must be invertible");
    F2Matrix z = inv->transpose();
    F2Matrix m(2 * k, 2 * k);
    for (size_t i = 0; i < k; i++)
        for (size_t j = 0; j < k; j++) {
            m.set(i, j, u.get(i, j));
            m.set(k + i, k + j, z.get(i, j));
        }
    return m;
}

F2Matrix phase_type(const F2Matrix& s) {
    size_t k = s.rows;
    if (s.cols != k || !s.is_symmetric())
        throw std::invalid_argument("phase-type block must be symmetric");
    F2Matrix m = F2Matrix::identity(2 * k);
    for (size_t i = 0; i < k; i++)
        for (size_t j = 0; j < k; j++)
            if (s.get(i, j)) m.set(i, k + j, true);
    return m;
}

F2Matrix hadamard_type(size_t k) {
    F2Matrix m(2 * k, 2 * k);
    for (size_t i = 0; i < k; i++) {
        m.set(i, k + i, true);
        m.set(k + i, i, true);
    }
    return m;
}

F2Matrix transversal_h_action(const MonomialBasis& basis) {
    size_t k = size_t(basis.k), h = k / 2;
    F2Matrix m(2 * k, 2 * k);
    for (size_t i = 0; i < k; i++) {
        m.set(i, k + (i + h) % k, true);
        m.set(k + i, (i + h) % k, true);
    }
    return m;
}

F2Matrix transversal_s_action(const MonomialBasis& basis) {
    size_t k = size_t(basis.k), h = k / 2;
    F2Matrix m = F2Matrix::identity(2 * k);
    for (size_t i = 0; i < k; i++) m.set(i, k + (i + h) % k, true);
    return m;
}

std::string GateProgram::to_text() const {
    std::string out;
    char buf[32];
    for (const GateOp& op : ops) {
        switch (op.kind) {
        case HighGate::perm: {
            out += "PERM A=";
            for (size_t i = 0; i < op.sub.rows; i++) {
                uint32_t mask = 0;
                for (size_t j = 0; j < op.sub.cols; j++)
                    mask |= uint32_t(op.sub.get(i, j)) << j;
                std::snprintf(buf, sizeof buf, "%s%x", i ? ":" : "", mask);
                out += buf;
            }
            out += '\n';
            break;
        }
        case HighGate::transversal_cnot:
            out += op.dir == CnotDir::data_ctrl ? "TCNOT data\n" : "TCNOT anc\n";
            break;
        case HighGate::fold_cz: out += "FOLDCZ\n"; break;
        case HighGate::transversal_h: out += "TH\n"; break;
        case HighGate::transversal_s: out += "TS\n"; break;
        }
    }
    return out;
}

GateProgram GateProgram::parse(const std::string& text, int r) {
    GateProgram prog;
    prog.r = r;
    size_t n = size_t(2) * size_t(r);
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (tok == "PERM") {
            std::string arg;
            if (!(ls >> arg) || arg.rfind("A=", 0) != 0)
                throw std::invalid_argument("PERM needs A=<hex rows>");
            F2Matrix a(n, n);
            size_t row = 0, pos = 2;
            while (pos <= arg.size()) {
                size_t stop = arg.find(':', pos);
                if (stop == std::string::npos) stop = arg.size();
                if (row >= n) throw std::invalid_argument("PERM has too many rows");
                uint32_t mask = uint32_t(std::stoul(arg.substr(pos, stop - pos), nullptr, 16));
                for (size_t j = 0; j < n; j++)
                    a.set(row, j, (mask >> j) & 1);
                row++;
                pos = stop + 1;
            }
            if (row != n) throw std::invalid_argument("PERM has too few rows");
            prog.ops.push_back({HighGate::perm, CnotDir::data_ctrl, std::move(a)});
        } else if (tok == "TCNOT") {
            std::string dir;
            if (!(ls >> dir) || (dir != "data" && dir != "anc"))
                throw std::invalid_argument("TCNOT direction must be data or anc");
            prog.ops.push_back({HighGate::transversal_cnot,
                                dir == "data" ? CnotDir::data_ctrl : CnotDir::anc_ctrl, {}});
        } else if (tok == "FOLDCZ") {
            prog.ops.push_back({HighGate::fold_cz, CnotDir::data_ctrl, {}});
        } else if (tok == "TH") {
            prog.ops.push_back({HighGate::transversal_h, CnotDir::data_ctrl, {}});
        } else if (tok == "TS") {
            prog.ops.push_back({HighGate::transversal_s, CnotDir::data_ctrl, {}});
        } else {
            throw std::invalid_argument("unknown gate token: " + tok);
        }
    }
    return prog;
}

F2Matrix program_action(const GateProgram& prog) {
    MonomialBasis basis = MonomialBasis::make(prog.r);
    size_t k = size_t(basis.k), h = k / 2;
    if (k > 64) throw std::invalid_argument("program tracking supports at most 64 logical qubits");
    uint64_t kmask = k == 64 ? ~uint64_t(0) : (uint64_t(1) << k) - 1;

    FoldGate fold = fold_transversal(prog.r);
    std::vector<unsigned> tshift(k);
    for (size_t i = 0; i < k; i++)
        for (size_t j = 0; j < k; j++)
            if (fold.t_cz.get(i, j)) tshift[i] = unsigned(j);

    // Rows are tracked as four packed fields over the joint system: data
    // X/Z and scratch X/Z components of each generator's image.
    struct Row { uint64_t xd = 0, xa = 0, zd = 0, za = 0; };
    std::vector<Row> m(4 * k);
    for (size_t i = 0; i < k; i++) {
        m[i].xd = uint64_t(1) << i;
        m[k + i].xa = uint64_t(1) << i;
        m[2 * k + i].zd = uint64_t(1) << i;
        m[3 * k + i].za = uint64_t(1) << i;
    }

    auto rot = [&](uint64_t v) { return ((v << h) | (v >> (k - h))) & kmask; };

    std::vector<uint64_t> fold_lut;
    if (k <= 16) {
        fold_lut.assign(size_t(1) << k, 0);
        for (uint64_t v = 0; v < fold_lut.size(); v++) {
            uint64_t out = 0;
            for (uint64_t b = v; b; b &= b - 1)
                out ^= uint64_t(1) << tshift[size_t(ctz32(uint32_t(b)))];
            fold_lut[v] = out;
        }
    }
    auto fold_scatter = [&](uint64_t v) {
        if (!fold_lut.empty()) return fold_lut[v];
        uint64_t out = 0;
        for (size_t i = 0; i < k; i++)
            if ((v >> i) & 1) out ^= uint64_t(1) << tshift[i];
        return out;
    };

    // Substitution gates compiled to per-field transforms, cached per
    // distinct matrix since programs reuse a small alphabet of them.
    struct Compiled {
        std::vector<uint64_t> colx, colz;  // column masks of phi and phi^-T
        std::vector<uint64_t> lutx, lutz;  // value tables when k is small
    };
    std::map<std::vector<uint64_t>, Compiled> cache;
    auto compile = [&](const F2Matrix& a) -> const Compiled& {
        auto it = cache.find(a.w);
        if (it != cache.end()) return it->second;
        Compiled c;
        F2Matrix px = phi(a, prog.r);
        F2Matrix pz = px.inverse()->transpose();
        c.colx.assign(k, 0);
        c.colz.assign(k, 0);
        for (size_t i = 0; i < k; i++)
            for (size_t j = 0; j < k; j++) {
                if (px.get(i, j)) c.colx[j] |= uint64_t(1) << i;
                if (pz.get(i, j)) c.colz[j] |= uint64_t(1) << i;
            }
        if (k <= 16) {
            c.lutx.assign(size_t(1) << k, 0);
            c.lutz.assign(size_t(1) << k, 0);
            for (uint64_t v = 0; v < c.lutx.size(); v++) {
                uint64_t ox = 0, oz = 0;
                for (size_t j = 0; j < k; j++) {
                    ox |= uint64_t(popcount64(v & c.colx[j]) & 1) << j;
                    oz |= uint64_t(popcount64(v & c.colz[j]) & 1) << j;
                }
                c.lutx[v] = ox;
                c.lutz[v] = oz;
            }
        }
        return cache.emplace(a.w, std::move(c)).first->second;
    };

    for (const GateOp& op : prog.ops) {
        switch (op.kind) {
        case HighGate::transversal_cnot:
            if (op.dir == CnotDir::data_ctrl)
                for (Row& r : m) { r.xa ^= r.xd; r.zd ^= r.za; }
            else
                for (Row& r : m) { r.xd ^= r.xa; r.za ^= r.zd; }
            break;
        case HighGate::transversal_h:
            for (Row& r : m) {
                uint64_t t = rot(r.zd);
                r.zd = rot(r.xd);
                r.xd = t;
            }
            break;
        case HighGate::transversal_s:
            for (Row& r : m) r.zd ^= rot(r.xd);
            break;
        case HighGate::fold_cz:
            for (Row& r : m) r.zd ^= fold_scatter(r.xd);
            break;
        case HighGate::perm: {
            const Compiled& c = compile(op.sub);
            if (!c.lutx.empty()) {
                for (Row& r : m) { r.xd = c.lutx[r.xd]; r.zd = c.lutz[r.zd]; }
            } else {
                for (Row& r : m) {
                    uint64_t ox = 0, oz = 0;
                    for (size_t j = 0; j < k; j++) {
                        ox |= uint64_t(popcount64(r.xd & c.colx[j]) & 1) << j;
                        oz |= uint64_t(popcount64(r.zd & c.colz[j]) & 1) << j;
                    }
                    r.xd = ox;
                    r.zd = oz;
                }
            }
            break;
        }
        }
    }

    for (size_t i = 0; i < k; i++) {
        const Row& xa = m[k + i];
        const Row& za = m[3 * k + i];
        bool clean = m[i].xa == 0 && m[i].za == 0 &&
                     m[2 * k + i].xa == 0 && m[2 * k + i].za == 0 &&
                     xa.xa == uint64_t(1) << i && xa.xd == 0 && xa.zd == 0 && xa.za == 0 &&
                     za.za == uint64_t(1) << i && za.xd == 0 && za.zd == 0 && za.xa == 0;
        if (!clean) throw std::logic_error("program leaves the scratch block transformed");
    }

    F2Matrix out(2 * k, 2 * k);
    for (size_t i = 0; i < k; i++)
        for (size_t j = 0; j < k; j++) {
            out.set(i, j, (m[i].xd >> j) & 1);
            out.set(i, k + j, (m[i].zd >> j) & 1);
            out.set(k + i, j, (m[2 * k + i].xd >> j) & 1);
            out.set(k + i, k + j, (m[2 * k + i].zd >> j) & 1);
        }
    return out;
}

namespace {

// Left row operations (row a += row b) reducing an invertible matrix to
// the identity; the matrix equals the product of the returned factors in
// returned order, every factor being the self-inverse E_{a,b}.
std::vector<std::pair<size_t, size_t>> transvection_factors(const F2Matrix& u) {
    F2Matrix c = u;
    size_t n = u.rows;
    std::vector<std::pair<size_t, size_t>> ops;
    auto rowop = [&](size_t a, size_t b) {
        c.xor_row(a, b);
        ops.push_back({a, b});
    };
    for (size_t col = 0; col < n; col++) {
        size_t p = col;
        while (p < n && !c.get(p, col)) p++;
        if (p == n) throw std::logic_error("cnot-type block is singular");
        if (p != col) { rowop(col, p); rowop(p, col); rowop(col, p); }
        for (size_t i = 0; i < n; i++)
            if (i != col && c.get(i, col)) rowop(i, col);
    }
    return ops;
}

// Lowers generator-level symplectic steps to the physical gate alphabet.
// Sums of substitution actions become products of substitution-conjugated
// transversal CNOTs; commutators of an upper and a lower such block give
// every data-block CNOT-type gate; the decorated fold provides the seed
// phase-type gate, extended to the full symmetric basis by the coupling
// decomposition; per-qubit Hadamards come from the three-step exchange of
// a qubit's X and Z rows.
struct Lowering {
    int r;
    size_t k, n;
    MonomialBasis basis;
    SingleOneExpansion base;
    std::vector<GateOp> sprime_word;
    std::map<std::pair<size_t, size_t>, std::vector<F2Matrix>> words;
    std::map<size_t, std::vector<GateOp>> fll_mem;

    explicit Lowering(int r_)
        : r(r_), basis(MonomialBasis::make(r_)), base(gen_single_one(r_)) {
        k = size_t(basis.k);
        n = size_t(2) * size_t(r);
        F2Matrix t_cz = fold_transversal(r).t_cz;
        F2Matrix u = uu_t_decompose(t_cz);
        std::vector<GateOp> w;
        cnot_u(w, *u.inverse());
        w.push_back({HighGate::fold_cz, CnotDir::data_ctrl, {}});
        cnot_u(w, u);
        sprime_word = std::move(w);
    }

    // Substitution words whose actions sum to the single-one matrix at
    // (i, j): the base expansion sandwiched between slot-moving swaps.
    const std::vector<F2Matrix>& unit_words(size_t i, size_t j) {
        auto it = words.find({i, j});
        if (it != words.end()) return it->second;
        F2Matrix pl = monomial_swap(basis.slot[i], basis.slot[base.row], n);
        F2Matrix pr = monomial_swap(basis.slot[base.col], basis.slot[j], n);
        std::vector<F2Matrix> list;
        for (const F2Matrix& t : base.terms)
            list.push_back(pl.mul(t).mul(pr));
        return words.emplace(std::make_pair(i, j), std::move(list)).first->second;
    }

    void upper_block(std::vector<GateOp>& out, size_t i, size_t j) {
        for (const F2Matrix& a : unit_words(i, j)) {
            out.push_back({HighGate::perm, CnotDir::data_ctrl, a});
            out.push_back({HighGate::transversal_cnot, CnotDir::data_ctrl, {}});
            out.push_back({HighGate::perm, CnotDir::data_ctrl, *a.inverse()});
        }
    }
    void lower_block(std::vector<GateOp>& out, size_t i, size_t j) {
        for (const F2Matrix& a : unit_words(i, j)) {
            out.push_back({HighGate::perm, CnotDir::data_ctrl, *a.inverse()});
            out.push_back({HighGate::transversal_cnot, CnotDir::anc_ctrl, {}});
            out.push_back({HighGate::perm, CnotDir::data_ctrl, a});
        }
    }

    // CNOT-type gate with X block u.  At r = 1 the substitution action is
    // the full linear group already; otherwise each transvection factor
    // E_{a,b} is the commutator of an upper F_{a,a} and a lower F_{a,b}
    // block, both self-inverse.
    void cnot_u(std::vector<GateOp>& out, const F2Matrix& u) {
        if (r == 1) {
            if (!(u == F2Matrix::identity(2)))
                out.push_back({HighGate::perm, CnotDir::data_ctrl, u});
            return;
        }
        for (auto [a, b] : transvection_factors(u)) {
            lower_block(out, a, b);
            upper_block(out, a, a);
            lower_block(out, a, b);
            upper_block(out, a, a);
        }
    }

    void sprime(std::vector<GateOp>& out) {
        out.insert(out.end(), sprime_word.begin(), sprime_word.end());
    }

    // Phase-type gate with coupling uu^T.
    void phase_uu(std::vector<GateOp>& out, const F2Matrix& u) {
        cnot_u(out, u);
        sprime(out);
        cnot_u(out, *u.inverse());
    }

    // Phase-type gate with coupling F_{l,l}: the sum of a transvection
    // coupling E e E^T and the matching swap coupling.  With two logical
    // qubits the swap coupling has no fixed point and the transversal S
    // supplies it instead.
    const std::vector<GateOp>& fll(size_t l) {
        auto it = fll_mem.find(l);
        if (it != fll_mem.end()) return it->second;
        std::vector<GateOp> out;
        size_t j = (l + 1) % k;
        phase_uu(out, elementary_matrix(k, j, l));
        if (k == 2)
            out.push_back({HighGate::transversal_s, CnotDir::data_ctrl, {}});
        else
            phase_uu(out, uu_t_decompose(swap_matrix(k, j, l)));
        return fll_mem.emplace(l, std::move(out)).first->second;
    }

    void phase_diag(std::vector<GateOp>& out, size_t q) {
        const std::vector<GateOp>& w = fll(q);
        out.insert(out.end(), w.begin(), w.end());
    }

    // Phase-type gate with coupling F_{q,j} + F_{j,q}: the swap coupling
    // plus every other diagonal coupling.
    void phase_pair(std::vector<GateOp>& out, size_t q, size_t j) {
        if (k == 2) {
            out.push_back({HighGate::transversal_s, CnotDir::data_ctrl, {}});
            return;
        }
        phase_uu(out, uu_t_decompose(swap_matrix(k, q, j)));
        for (size_t l = 0; l < k; l++)
            if (l != q && l != j) phase_diag(out, l);
    }

    // Hadamard-type gate: the half-rotation CNOT-type times transversal H.
    void had(std::vector<GateOp>& out) {
        F2Matrix rotm(k, k);
        for (size_t i = 0; i < k; i++) rotm.set(i, (i + k / 2) % k, true);
        cnot_u(out, rotm);
        out.push_back({HighGate::transversal_h, CnotDir::data_ctrl, {}});
    }

    void lower_diag(std::vector<GateOp>& out, size_t q) {
        had(out);
        phase_diag(out, q);
        had(out);
    }
    void lower_pair(std::vector<GateOp>& out, size_t q, size_t j) {
        had(out);
        phase_pair(out, q, j);
        had(out);
    }

    // Exchange of one qubit's X and Z rows, as phase / conjugated-phase /
    // phase on that qubit alone.
    void hswap(std::vector<GateOp>& out, size_t q) {
        phase_diag(out, q);
        had(out);
        phase_diag(out, q);
        had(out);
        phase_diag(out, q);
    }
};

enum class GenKind : uint8_t { cnot_e, phase_diag, phase_pair, lower_diag, lower_pair, hswap };

struct GenOp {
    GenKind kind;
    size_t i = 0, j = 0;
};

} // namespace

GateProgram synthesize(const F2Matrix& target, int r) {
    MonomialBasis basis = MonomialBasis::make(r);
    size_t k = size_t(basis.k);
    if (target.rows != 2 * k || target.cols != 2 * k || !is_symplectic(target))
        throw std::invalid_argument("target is not symplectic on the logical qubits");

    GateProgram prog;
    prog.r = r;
    if (target == F2Matrix::identity(2 * k)) return prog;

    // Reduce the target to the identity by right-multiplied generator
    // steps, i.e. column operations.  Once the first q rows and their Z
    // partners are canonical, the symplectic form confines the support of
    // row q to columns >= q and guarantees the Z-row pivot, so the sweep
    // below never revisits finished columns.
    F2Matrix nmat = target;
    std::vector<GenOp> gens;
    auto colop = [&](size_t dst, size_t src) {
        for (size_t row = 0; row < 2 * k; row++)
            if (nmat.get(row, src)) nmat.set(row, dst, !nmat.get(row, dst));
    };
    auto apply = [&](GenOp g) {
        gens.push_back(g);
        switch (g.kind) {
        case GenKind::cnot_e:     // X col j += X col i, Z col i += Z col j
            colop(g.j, g.i);
            colop(k + g.i, k + g.j);
            break;
        case GenKind::phase_diag: // Z col q += X col q
            colop(k + g.i, g.i);
            break;
        case GenKind::phase_pair: // Z col j += X col q and vice versa
            colop(k + g.j, g.i);
            colop(k + g.i, g.j);
            break;
        case GenKind::lower_diag: // X col q += Z col q
            colop(g.i, k + g.i);
            break;
        case GenKind::lower_pair:
            colop(g.j, k + g.i);
            colop(g.i, k + g.j);
            break;
        case GenKind::hswap: {    // swap X col q with Z col q
            for (size_t row = 0; row < 2 * k; row++) {
                bool x = nmat.get(row, g.i), z = nmat.get(row, k + g.i);
                nmat.set(row, g.i, z);
                nmat.set(row, k + g.i, x);
            }
            break;
        }
        }
    };

    for (size_t q = 0; q < k; q++) {
        bool has_x = false;
        for (size_t j = q; j < k; j++) has_x |= nmat.get(q, j);
        if (!has_x) {
            size_t j = q;
            while (j < k && !nmat.get(q, k + j)) j++;
            if (j == k) throw std::logic_error("pivot row lost its support");
            apply({GenKind::hswap, j, 0});
        }
        if (!nmat.get(q, q)) {
            size_t j = q + 1;
            while (j < k && !nmat.get(q, j)) j++;
            if (j == k) throw std::logic_error("pivot row lost its support");
            apply({GenKind::cnot_e, j, q});
        }
        for (size_t j = q + 1; j < k; j++)
            if (nmat.get(q, j)) apply({GenKind::cnot_e, q, j});
        if (nmat.get(q, k + q)) apply({GenKind::phase_diag, q, 0});
        for (size_t j = q + 1; j < k; j++)
            if (nmat.get(q, k + j)) apply({GenKind::phase_pair, q, j});
        for (size_t j = q + 1; j < k; j++)
            if (nmat.get(k + q, k + j)) apply({GenKind::cnot_e, j, q});
        for (size_t j = q + 1; j < k; j++)
            if (nmat.get(k + q, j)) apply({GenKind::lower_pair, q, j});
        if (nmat.get(k + q, q)) apply({GenKind::lower_diag, q, 0});
    }
    if (!(nmat == F2Matrix::identity(2 * k)))
        throw std::logic_error("generator sweep failed to reach the identity");

    // Every recorded step is an involution, so the target is the product
    // of the steps in reverse order.
    Lowering low(r);
    for (auto it = gens.rbegin(); it != gens.rend(); ++it) {
        switch (it->kind) {
        case GenKind::cnot_e: {
            std::vector<GateOp> w;
            low.cnot_u(w, elementary_matrix(k, it->i, it->j));
            prog.ops.insert(prog.ops.end(), w.begin(), w.end());
            break;
        }
        case GenKind::phase_diag: low.phase_diag(prog.ops, it->i); break;
        case GenKind::phase_pair: low.phase_pair(prog.ops, it->i, it->j); break;
        case GenKind::lower_diag: low.lower_diag(prog.ops, it->i); break;
        case GenKind::lower_pair: low.lower_pair(prog.ops, it->i, it->j); break;
        case GenKind::hswap: low.hswap(prog.ops, it->i); break;
        }
    }

    if (!(program_action(prog) == target))
        throw std::logic_error("synthesized program does not reproduce the target");
    return prog;
}

} // namespace qrm
