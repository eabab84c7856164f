#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qrm/circuit.hpp"
#include "qrm/rm.hpp"

#include <random>

using namespace qrm;

namespace {

// Index of the t-th cnot layer (t = 1-based).
uint32_t cnot_layer_index(const Circuit& c, int t) {
    int seen = 0;
    for (uint32_t i = 0; i < c.layers.size(); i++)
        if (c.layers[i].kind == LayerKind::cnot && ++seen == t) return i;
    REQUIRE(false);
    return 0;
}

F2Vector punctured_word(const F2Vector& full) {
    F2Vector w(full.n - 1);
    for (size_t i = 1; i < full.n; i++) w.set(i - 1, full.get(i));
    return w;
}

} // namespace

TEST_CASE("three-variable encoder wiring") {
    Circuit c = hypercube_encoder(1, 1, 3, PrepState::zero, false);
    c.validate();
    CHECK(c.n_qubits == 8);
    CHECK(c.count_inits(Basis::X) == 4);
    CHECK(c.count_inits(Basis::Z) == 4);
    for (uint32_t q : {0u, 1u, 2u, 4u}) {
        bool found = false;
        for (const Layer& l : c.layers)
            if (l.kind == LayerKind::init && l.qubit == q && l.basis == Basis::X)
                found = true;
        CHECK(found);
    }
    using P = std::vector<std::pair<uint32_t, uint32_t>>;
    CHECK(c.layers[cnot_layer_index(c, 1)].pairs == P{{0, 1}, {2, 3}, {4, 5}, {6, 7}});
    CHECK(c.layers[cnot_layer_index(c, 2)].pairs == P{{0, 2}, {1, 3}, {4, 6}, {5, 7}});
    CHECK(c.layers[cnot_layer_index(c, 3)].pairs == P{{0, 4}, {1, 5}, {2, 6}, {3, 7}});

    Circuit p = hypercube_encoder(1, 1, 3, PrepState::plus, false);
    CHECK(p.layers[cnot_layer_index(p, 1)].pairs == P{{1, 0}, {3, 2}, {5, 4}, {7, 6}});
    CHECK(p.count_inits(Basis::Z) == 4);
}

TEST_CASE("encoder input and gate counts") {
    Circuit zero15 = hypercube_encoder(PqrmCode{3, 3, 7}, PrepState::zero);
    zero15.validate();
    CHECK(zero15.count_inits(Basis::X) == 63);
    CHECK(zero15.count_inits(Basis::Z) == 64);
    CHECK(zero15.count_cnots() == 441);

    Circuit plus7 = hypercube_encoder(PqrmCode{2, 4, 7}, PrepState::plus);
    CHECK(plus7.count_inits(Basis::Z) == 98);
    CHECK(plus7.count_inits(Basis::X) == 29);
    CHECK(plus7.count_cnots() == 441);

    Circuit full = hypercube_encoder(3, 3, 7, PrepState::zero, false);
    CHECK(full.count_cnots() == 448);
    CHECK(full.count_inits(Basis::X) == 64);

    CHECK(fault_sites(zero15).size() == 127 + 441);
}

TEST_CASE("text round-trip") {
    Circuit c = hypercube_encoder(PqrmCode{3, 3, 7}, PrepState::zero);
    append_transversal_meas(c, Basis::X);
    std::string t1 = c.to_text();
    Circuit back = Circuit::from_text(t1);
    CHECK(back.to_text() == t1);
    CHECK(back.n_qubits == 128);
    CHECK(back.count_cnots() == 441);

    std::string crafted =
        "INIT 0 Z\nINIT 1 X\nTICK\nCNOT 0 1\nPERM 0\nDEPOL1 S 0 1\n"
        "DEPOL1 C 1\nMEAS 0 Z\nMEAS 1 X\n";
    Circuit cc = Circuit::from_text(crafted);
    CHECK(cc.to_text() == crafted);

    CHECK_THROWS_AS((void)Circuit::from_text("HADAMARD 0\n"), std::invalid_argument);
    CHECK_THROWS_AS((void)Circuit::from_text("CNOT 0 1 2\n"), std::invalid_argument);
    CHECK_THROWS_AS((void)Circuit::from_text("INIT 0 Q\n"), std::invalid_argument);
}

TEST_CASE("malformed circuits are rejected") {
    Circuit c(4);
    c.add_cnot_layer({{0, 1}, {1, 2}});
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    Circuit d(4);
    d.add_meas(2, Basis::Z);
    d.add_meas(2, Basis::Z);
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);

    Circuit e(4);
    e.add_perm_ref(3);
    CHECK_THROWS_AS(e.validate(), std::invalid_argument);

    Circuit f(2);
    f.add_init(5, Basis::Z);
    CHECK_THROWS_AS(f.validate(), std::invalid_argument);
}

TEST_CASE("mid-circuit phase fault spreads to earlier layers' partners") {
    // A Z between the third and fourth rounds on label 0101000 lands on the
    // labels obtained by clearing set bits that later rounds touch.
    uint32_t q = 0b0101000;
    Circuit full = hypercube_encoder(3, 3, 7, PrepState::zero, false);
    FaultEvent f = FaultEvent::on_wire(cnot_layer_index(full, 3), q, false, true);
    ResidualError r = propagate_fault(full, f);
    CHECK(!r.x_mask.any());
    std::vector<uint32_t> expect{0b0000000, 0b0001000, 0b0100000, 0b0101000};
    CHECK(r.z_mask.weight() == 4);
    for (uint32_t lab : expect) CHECK(r.z_mask.get(lab));

    Circuit punct = hypercube_encoder(PqrmCode{3, 3, 7}, PrepState::zero);
    ResidualError rp = propagate_fault(punct, FaultEvent::on_wire(cnot_layer_index(punct, 3), q, false, true));
    CHECK(rp.z_mask.weight() == 3);
    CHECK(!rp.z_mask.get(0));
    for (uint32_t lab : {0b0001000, 0b0100000, 0b0101000}) CHECK(rp.z_mask.get(lab));
}

TEST_CASE("fault at the end of the circuit is its own residual") {
    Circuit c = hypercube_encoder(PqrmCode{3, 3, 7}, PrepState::zero);
    uint32_t last = uint32_t(c.layers.size()) - 1;
    ResidualError r = propagate_fault(c, FaultEvent::on_wire(last, 77, true, true));
    CHECK(r.x_mask.weight() == 1);
    CHECK(r.z_mask.weight() == 1);
    CHECK(r.x_mask.get(77));
    CHECK(r.z_mask.get(77));
}

TEST_CASE("input-wire faults become stabilizers of the prepared state") {
    // X on a |+> input propagates to an X-stabilizer, Z on a |0> input to a
    // Z-stabilizer, for both states of both codes.
    for (PqrmCode code : {PqrmCode{3, 3, 7}, PqrmCode{2, 4, 7}}) {
        for (PrepState st : {PrepState::zero, PrepState::plus}) {
            Circuit c = hypercube_encoder(code, st);
            for (uint32_t li = 0; li < c.layers.size(); li++) {
                const Layer& l = c.layers[li];
                if (l.kind != LayerKind::init) continue;
                bool is_x = l.basis == Basis::X;
                FaultEvent f = FaultEvent::on_wire(li, l.qubit, is_x, !is_x);
                ResidualError r = propagate_fault(c, f);
                const F2Vector& mask = is_x ? r.x_mask : r.z_mask;
                CHECK(!(is_x ? r.z_mask : r.x_mask).any());
                CHECK(!mask.get(0));
                Membership got = unencode_check(punctured_word(mask), code, is_x ? 'X' : 'Z');
                CHECK(got != Membership::not_in_code);
            }
        }
    }
}

TEST_CASE("fault propagation is linear") {
    std::mt19937_64 rng(51);
    Circuit c = hypercube_encoder(1, 1, 4, PrepState::zero, false);
    append_transversal_meas(c, Basis::X);
    uint32_t nl = uint32_t(c.layers.size());
    for (int trial = 0; trial < 50; trial++) {
        FaultEvent f1 = FaultEvent::on_wire(uint32_t(rng() % nl), uint32_t(rng() % 16),
                                            rng() & 1, rng() & 1);
        FaultEvent f2 = FaultEvent::on_wire(uint32_t(rng() % nl), uint32_t(rng() % 16),
                                            rng() & 1, rng() & 1);
        std::vector<uint8_t> m1, m2, m12;
        ResidualError r1 = propagate_fault(c, f1, &m1);
        ResidualError r2 = propagate_fault(c, f2, &m2);
        ResidualError r12 = propagate_fault_set(c, {f1, f2}, &m12);
        CHECK((r1.x_mask ^ r2.x_mask) == r12.x_mask);
        CHECK((r1.z_mask ^ r2.z_mask) == r12.z_mask);
        REQUIRE(m1.size() == m12.size());
        for (size_t i = 0; i < m1.size(); i++) CHECK((m1[i] ^ m2[i]) == m12[i]);
    }
}

TEST_CASE("noiseless simulation is silent without randomization") {
    Circuit c = hypercube_encoder(PqrmCode{3, 3, 7}, PrepState::zero);
    append_transversal_meas(c, Basis::X);
    BatchResult r = flip_simulate(c, NoiseModel{}, 7, 0, false);
    CHECK(r.cnot_faults == 0);
    CHECK(r.spam_flips == 0);
    for (const auto& m : r.meas) CHECK(m.flips == 0);
    for (int s = 0; s < 64; s++) {
        CHECK(!r.x_res[s].any());
        CHECK(!r.z_res[s].any());
    }
}

TEST_CASE("noiseless readout stays inside the stabilizer group") {
    // With init randomization on, transversal readout of the prepared state
    // must land in the matching classical code every shot, both cosets
    // appearing.
    struct Case {
        PqrmCode code;
        PrepState st;
        Basis meas;
        char basis;
    };
    for (const Case& cs : {Case{{2, 4, 7}, PrepState::plus, Basis::Z, 'X'},
                           Case{{3, 3, 7}, PrepState::zero, Basis::X, 'Z'}}) {
        Circuit c = hypercube_encoder(cs.code, cs.st);
        append_transversal_meas(c, cs.meas);
        int coset[2] = {0, 0};
        for (uint64_t batch = 0; batch < 4; batch++) {
            BatchResult r = flip_simulate(c, NoiseModel{}, 99, batch, true);
            REQUIRE(r.meas.size() == 127);
            for (int s = 0; s < 64; s++) {
                F2Vector w(127);
                for (const auto& m : r.meas)
                    if ((m.flips >> s) & 1) w.set(m.qubit - 1, true);
                Membership got = unencode_check(w, cs.code, cs.basis);
                CHECK(got != Membership::not_in_code);
                coset[got == Membership::in_coset_1_plus]++;
            }
        }
        CHECK(coset[0] > 32);
        CHECK(coset[1] > 32);
    }
}

TEST_CASE("certain state-preparation and readout flips") {
    NoiseModel spam_only;
    spam_only.p_spam = 1.0;

    Circuit both(1);
    both.add_init(0, Basis::Z);
    both.add_meas(0, Basis::Z);
    BatchResult r1 = flip_simulate(both, spam_only, 1, 0, false);
    REQUIRE(r1.meas.size() == 1);
    CHECK(r1.meas[0].flips == 0); // the two certain flips cancel
    CHECK(r1.spam_flips == 128);

    Circuit meas_only(1);
    meas_only.add_meas(0, Basis::Z);
    BatchResult r2 = flip_simulate(meas_only, spam_only, 1, 0, false);
    CHECK(r2.meas[0].flips == ~uint64_t(0));
}

TEST_CASE("gate fault count concentrates around its mean") {
    Circuit c = hypercube_encoder(PqrmCode{3, 3, 7}, PrepState::zero);
    double p = 0.003;
    NoiseModel noise;
    noise.p_cnot = p;
    uint64_t faults = 0, batches = 400;
    for (uint64_t b = 0; b < batches; b++)
        faults += flip_simulate(c, noise, 2024, b, false).cnot_faults;
    double sites = 441.0 * 64 * double(batches);
    double mean = sites * p, sd = std::sqrt(sites * p * (1 - p));
    CHECK(std::abs(double(faults) - mean) < 4 * sd);
}

TEST_CASE("simulation is reproducible and batches are independent") {
    Circuit c = hypercube_encoder(PqrmCode{2, 4, 7}, PrepState::plus);
    append_transversal_meas(c, Basis::Z);
    NoiseModel noise;
    noise.p_cnot = 0.01;
    noise.p_spam = 0.005;
    BatchResult a = flip_simulate(c, noise, 5, 3, true);
    BatchResult b = flip_simulate(c, noise, 5, 3, true);
    CHECK(a.cnot_faults == b.cnot_faults);
    REQUIRE(a.meas.size() == b.meas.size());
    for (size_t i = 0; i < a.meas.size(); i++) CHECK(a.meas[i].flips == b.meas[i].flips);
    for (int s = 0; s < 64; s++) {
        CHECK(a.x_res[s] == b.x_res[s]);
        CHECK(a.z_res[s] == b.z_res[s]);
    }

    BatchResult d = flip_simulate(c, noise, 5, 4, true);
    bool differs = d.cnot_faults != a.cnot_faults;
    for (size_t i = 0; i < a.meas.size() && !differs; i++)
        differs = a.meas[i].flips != d.meas[i].flips;
    CHECK(differs);
}

TEST_CASE("single-qubit depolarizing layers fire at their own rates") {
    Circuit c(2);
    c.add_init(0, Basis::Z);
    c.add_init(1, Basis::Z);
    c.add_depol1({0}, false);
    c.add_depol1({1}, true);
    c.add_meas(0, Basis::Z);
    c.add_meas(1, Basis::Z);

    NoiseModel noise;
    noise.p_single = 1.0; // always fires: X, Y or Z on qubit 0
    noise.p_corr = 0.0;
    uint64_t hits = 0, shots = 0;
    for (uint64_t b = 0; b < 8; b++) {
        BatchResult r = flip_simulate(c, noise, 11, b, false);
        CHECK(r.meas[1].flips == 0); // corr rate zero: qubit 1 untouched
        hits += popcount64(r.meas[0].flips);
        shots += 64;
        CHECK(r.single_faults == 64);
    }
    // X or Y flips the readout: 2/3 of draws.
    double mean = double(shots) * 2 / 3, sd = std::sqrt(double(shots) * 2 / 9);
    CHECK(std::abs(double(hits) - mean) < 4 * sd);
}
