#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qrm/ft_prep.hpp"

#include "json.hpp"

#include <random>
#include <string>

using namespace qrm;

namespace {

const PqrmCode d15{3, 3, 7};
const PqrmCode d7{2, 4, 7};
const PqrmCode toy{1, 2, 4};

PermutationSchedule identity_schedule() {
    PermutationSchedule s;
    s.columns.resize(4);
    return s;
}

PermutationSchedule data_schedule(const char* name) {
    return PermutationSchedule::load(std::string(QRM_DATA_DIR) + "/" + name);
}

// Each wire pair differs at exactly one axis, so it couples in one layer.
FaultSite cnot_site(const Circuit& c, uint32_t ctl, uint32_t tgt) {
    for (const FaultSite& s : fault_sites(c))
        if (s.kind == LayerKind::cnot && s.q0 == ctl && s.q1 == tgt) return s;
    REQUIRE(false);
    return {};
}

FaultEvent event_of(const FaultRef& f) {
    if (f.site.kind == LayerKind::init)
        return FaultEvent::on_wire(f.site.layer, f.site.q0, f.pauli & 1, f.pauli & 2);
    return FaultEvent::on_gate(f.site.layer, uint32_t(f.site.slot), f.pauli);
}

Mask128 all_ones(int m) {
    Mask128 w;
    for (int q = 1; q < (1 << m); q++) w.set(unsigned(q));
    return w;
}

Mask128 unit(unsigned q) {
    Mask128 w;
    w.set(q);
    return w;
}

Mask128 monomial_row(int i, int m) {
    Mask128 w;
    for (int j = 1; j < (1 << m); j++)
        if ((i & j) == i) w.set(unsigned(j));
    return w;
}

PermutationSchedule random_schedule(std::mt19937_64& rng, int m, size_t cols, int len) {
    PermutationSchedule s;
    s.columns.resize(cols);
    for (auto& col : s.columns)
        for (int t = 0; t < len; t++) {
            int j = int(rng() % uint64_t(m));
            int i = int(rng() % uint64_t(m - 1));
            if (i >= j) i++;
            col.push_back(SwapToken{i, j});
        }
    return s;
}

} // namespace

TEST_CASE("detector sizes follow the readout bases") {
    CHECK(detector_map(d15, PrepState::zero, PauliType::X).count() == 64);
    CHECK(detector_map(d15, PrepState::zero, PauliType::Z).count() == 63);
    CHECK(detector_map(d7, PrepState::plus, PauliType::X).count() == 98);
    CHECK(detector_map(d7, PrepState::plus, PauliType::Z).count() == 29);

    PrepProtocol p15 = build_protocol(d15, PrepState::zero, identity_schedule());
    CHECK(p15.readout_det[0].count() == 64);
    CHECK(p15.readout_det[1].count() == 63);
    CHECK(p15.readout_det[2].count() == 64);
    PrepProtocol p7 = build_protocol(d7, PrepState::plus, identity_schedule());
    CHECK(p7.readout_det[0].count() == 98);
    CHECK(p7.readout_det[1].count() == 29);
    CHECK(p7.readout_det[2].count() == 98);
}

TEST_CASE("detectors pass exactly the harmless group") {
    struct Case {
        PqrmCode code;
        PrepState state;
    };
    for (const Case& cs : {Case{d15, PrepState::zero}, Case{d7, PrepState::plus},
                           Case{toy, PrepState::zero}, Case{toy, PrepState::plus}}) {
        Circuit enc = hypercube_encoder(cs.code, cs.state);
        std::mt19937_64 rng(100 + cs.code.m + int(cs.state));
        for (PauliType t : {PauliType::X, PauliType::Z}) {
            DetectorMap det = detector_map(cs.code, cs.state, t);
            ReducedWeightTester tester(reduction_group(cs.code, cs.state, t), cs.code.m);
            const Basis fixed = t == PauliType::X ? Basis::X : Basis::Z;
            for (int trial = 0; trial < 16; trial++) {
                // flips that fix the input state generate the harmless group
                std::vector<FaultEvent> evs;
                for (uint32_t l = 0; l < enc.layers.size(); l++)
                    if (enc.layers[l].kind == LayerKind::init && enc.layers[l].basis == fixed &&
                        rng() & 1)
                        evs.push_back(FaultEvent::on_wire(l, enc.layers[l].qubit,
                                                          t == PauliType::X, t == PauliType::Z));
                ResidualError r = propagate_fault_set(enc, evs);
                Mask128 w = to_mask128(t == PauliType::X ? r.x_mask : r.z_mask);
                CHECK_FALSE(det.apply(w).any());
                CHECK(tester.leq(w, 0));
            }
            for (int trial = 0; trial < 16; trial++) {
                Mask128 w{rng(), rng() & ((uint64_t(1) << 63) - 1)};
                w.lo &= ~uint64_t(1);
                if (cs.code.m < 7) w = w & all_ones(cs.code.m);
                CHECK(det.apply(w).any() == !tester.leq(w, 0));
            }
        }
        // the logical word is harmless for its own eigenstate only
        Mask128 logical = all_ones(cs.code.m);
        DetectorMap dx = detector_map(cs.code, cs.state, PauliType::X);
        DetectorMap dz = detector_map(cs.code, cs.state, PauliType::Z);
        if (cs.state == PrepState::zero) {
            CHECK(dx.apply(logical).any());
            CHECK_FALSE(dz.apply(logical).any());
        } else {
            CHECK_FALSE(dx.apply(logical).any());
            CHECK(dz.apply(logical).any());
        }
    }
}

TEST_CASE("reduced weight oracle basics") {
    ReducedWeightTester stab(RmCode{3, 7, true, true}, 7);
    ReducedWeightTester full(RmCode{3, 7, true, false}, 7);
    Mask128 logical = all_ones(7);
    CHECK(full.exact(logical, 7) == 0);
    // without the logical word the coset floor is the code distance, 15
    CHECK(stab.exact(logical, 7) == 8);
    Mask128 zero;
    CHECK(stab.exact(zero, 3) == 0);
    for (int i : {3, 5, 6, 7, 11}) {
        Mask128 w = monomial_row(i, 7);
        CHECK(full.exact(w, 4) == 0);
        CHECK(full.exact(w ^ unit(5) ^ unit(97), 4) == 2);
    }
    CHECK_THROWS_AS(stab.leq(logical, 8), std::invalid_argument);
}

TEST_CASE("protocol assembly guards") {
    CHECK_THROWS_AS(build_protocol(PqrmCode{2, 3, 7}, PrepState::zero, identity_schedule()),
                    std::invalid_argument);
    PermutationSchedule three;
    three.columns.resize(3);
    CHECK_THROWS_AS(build_protocol(d15, PrepState::zero, three), std::invalid_argument);
}

TEST_CASE("noiseless runs accept") {
    for (CheckOrder o : {CheckOrder::x_pairs_first, CheckOrder::z_pairs_first}) {
        PrepProtocol p = build_protocol(d7, PrepState::plus, identity_schedule(), o);
        ProtocolRun r = run_with_faults(p, {});
        CHECK(r.accepted());
        CHECK_FALSE(r.out_x.any());
        CHECK_FALSE(r.out_z.any());
    }
}

TEST_CASE("the twin fault that breaks identity scheduling") {
    PrepProtocol p = build_protocol(d15, PrepState::zero, identity_schedule());
    // Z on the control of the third-layer cnot (40 -> 44) spreads down to
    // {40, 32, 8}: weight three on the punctured block
    FaultSite s = cnot_site(p.patches[0], 40, 44);
    FaultEvent ev = FaultEvent::on_gate(s.layer, uint32_t(s.slot), 2);
    std::array<std::vector<FaultEvent>, 4> faults{};
    faults[0] = {ev};
    faults[2] = {ev}; // the patch sharing the global Z readout
    ProtocolRun r = run_with_faults(p, faults);
    CHECK(r.accepted());
    CHECK(r.out_z.weight() == 3);
    CHECK(r.out_z.get(40));
    CHECK(r.out_z.get(32));
    CHECK(r.out_z.get(8));
    ReducedWeightTester tester(p.reduce_z, 7);
    CHECK(tester.exact(r.out_z, 6) == 3);

    CHECK(count_malignant(p, PauliType::Z, 2) >= 1);
    FtVerdict vz = check_strict_ft(p, PauliType::Z, 2);
    CHECK_FALSE(vz.strict_ft);
    CHECK(vz.orders[1].count >= 1);
    CHECK_FALSE(check_strict_ft(p, PauliType::X, 2).strict_ft);

    // flagged sets replay into the protocol as real faults
    REQUIRE(!vz.orders[1].samples.empty());
    for (const MalignantSample& smp : vz.orders[1].samples) {
        std::array<std::vector<FaultEvent>, 4> fs{};
        for (const FaultRef& f : smp.sites) fs[f.patch].push_back(event_of(f));
        ProtocolRun rr = run_with_faults(p, fs);
        CHECK(rr.accepted());
        CHECK(rr.out_z == smp.residual);
        CHECK_FALSE(tester.leq(rr.out_z, 2));
    }

    // the shipped schedule separates the two copies and catches the twin
    PrepProtocol sched =
        build_protocol(d15, PrepState::zero, data_schedule("d15_schedule.txt"));
    FaultSite s0 = cnot_site(sched.patches[0], 40, 44);
    FaultSite s2 = cnot_site(sched.patches[2], 40, 44);
    std::array<std::vector<FaultEvent>, 4> tf{};
    tf[0] = {FaultEvent::on_gate(s0.layer, uint32_t(s0.slot), 2)};
    tf[2] = {FaultEvent::on_gate(s2.layer, uint32_t(s2.slot), 2)};
    CHECK_FALSE(run_with_faults(sched, tf).accepted());
}

TEST_CASE("mirrored check order pairs the patches the other way") {
    PrepProtocol p =
        build_protocol(d15, PrepState::zero, identity_schedule(), CheckOrder::z_pairs_first);
    FaultSite s = cnot_site(p.patches[0], 40, 44);
    FaultEvent ev = FaultEvent::on_gate(s.layer, uint32_t(s.slot), 2);
    std::array<std::vector<FaultEvent>, 4> faults{};
    faults[0] = {ev};
    faults[1] = {ev}; // partners share a Z readout under this ordering
    ProtocolRun r = run_with_faults(p, faults);
    CHECK(r.accepted());
    CHECK(r.out_z.weight() == 3);
}

TEST_CASE("dictionary search equals direct enumeration") {
    std::mt19937_64 rng(2026);
    for (int trial = 0; trial < 4; trial++) {
        PermutationSchedule s =
            trial == 0 ? identity_schedule() : random_schedule(rng, 4, 4, 2);
        PrepState st = trial % 2 ? PrepState::plus : PrepState::zero;
        PrepProtocol p = build_protocol(toy, st, s);
        for (PauliType t : {PauliType::X, PauliType::Z})
            for (int k = 1; k <= 2; k++)
                CHECK(count_malignant(p, t, k) == count_malignant_naive(p, t, k));
    }
    PrepProtocol p = build_protocol(toy, PrepState::zero, identity_schedule());
    CHECK(count_malignant(p, PauliType::Z, 3) == count_malignant_naive(p, PauliType::Z, 3));
}

TEST_CASE("relative permutation sieve") {
    F2Matrix ident = F2Matrix::identity(7);
    CHECK_FALSE(necessary_condition(ident, ident));
    PermutationSchedule t3 = data_schedule("d7_schedule.txt");
    CHECK(necessary_condition(t3.column_matrix(0, 7), t3.column_matrix(1, 7)));
    // a relative transform with single ones in its second and fourth columns
    F2Matrix rel = F2Matrix::identity(7);
    rel.set(1, 0, true);
    rel.set(3, 2, true);
    rel.set(5, 4, true);
    rel.set(6, 5, true);
    rel.set(2, 6, true);
    REQUIRE(rel.inverse().has_value());
    CHECK_FALSE(necessary_condition(ident, rel));
    CHECK_THROWS_AS(necessary_condition(F2Matrix(7, 7), ident), std::invalid_argument);
}

TEST_CASE("shipped schedules are strict with suppression through order three") {
    PrepProtocol d7p = build_protocol(d7, PrepState::plus, data_schedule("d7_schedule.txt"));
    for (PauliType t : {PauliType::X, PauliType::Z}) {
        FtVerdict v = check_strict_ft(d7p, t, 3, true);
        CHECK(v.strict_ft);
        for (const OrderReport& o : v.orders) {
            CHECK(o.count == 0);
            CHECK(o.suppression_ok);
        }
    }
    PrepProtocol d7z = build_protocol(d7, PrepState::zero, data_schedule("d7_schedule.txt"));
    CHECK(check_strict_ft(d7z, PauliType::X, 2, true).strict_ft);
    CHECK(check_strict_ft(d7z, PauliType::Z, 2, true).strict_ft);

    PrepProtocol d15p =
        build_protocol(d15, PrepState::zero, data_schedule("d15_schedule.txt"));
    for (PauliType t : {PauliType::X, PauliType::Z}) {
        FtVerdict v = check_strict_ft(d15p, t, 3, true);
        CHECK(v.strict_ft);
        for (const OrderReport& o : v.orders) CHECK(o.suppression_ok);
    }
}

TEST_CASE("dictionary budget overflow reports the order") {
    MitmBudget tiny;
    tiny.dict_bytes = size_t(1) << 20;
    tiny.max_shards = 2;
    PrepProtocol p = build_protocol(d15, PrepState::zero, identity_schedule());
    CHECK_THROWS_AS(count_malignant(p, PauliType::Z, 4, tiny), MitmResourceError);
    try {
        count_malignant(p, PauliType::Z, 4, tiny);
    } catch (const MitmResourceError& e) {
        CHECK(e.order == 4);
    }
}

TEST_CASE("verdict report serializes") {
    PrepProtocol p = build_protocol(d15, PrepState::zero, identity_schedule());
    FtVerdict v = check_strict_ft(p, PauliType::Z, 2);
    nlohmann::json j = nlohmann::json::parse(v.to_json());
    CHECK(j["type"] == "Z");
    CHECK(j["max_order"] == 2);
    CHECK(j["strict_ft"] == false);
    REQUIRE(j["orders"].size() == 2);
    CHECK(j["orders"][1]["count"].get<uint64_t>() >= 1);
    REQUIRE(!j["orders"][1]["samples"].empty());
    CHECK(j["orders"][1]["samples"][0].contains("sites"));
}

TEST_CASE("search accepts the shipped table as a fixed point") {
    PermutationSchedule t3 = data_schedule("d7_schedule.txt");
    SearchConstraints cons;
    cons.code = d7;
    cons.state = PrepState::plus;
    cons.order = 2;
    cons.columns.resize(4);
    for (size_t c = 0; c < 4; c++) cons.columns[c].prefix = t3.columns[c];
    std::vector<PermutationSchedule> out = search_schedules(cons, 1, 10);
    REQUIRE(out.size() == 1);
    CHECK(out[0].serialize() == t3.serialize());
    CHECK(search_schedules(cons, 1, 0).empty());
}

TEST_CASE("toy search finds a valid pair quickly") {
    SearchConstraints cons;
    cons.code = toy;
    cons.state = PrepState::zero;
    cons.order = 1;
    cons.columns.resize(2);
    for (auto& col : cons.columns) col.sample_length = 2;
    std::vector<PermutationSchedule> out = search_schedules(cons, 11, 1000);
    REQUIRE(!out.empty());
    for (size_t i = 0; i < std::min<size_t>(out.size(), 3); i++)
        CHECK(necessary_condition(out[i].column_matrix(0, 4), out[i].column_matrix(1, 4)));
}

TEST_CASE("search argument guards") {
    SearchConstraints cons;
    cons.code = toy;
    cons.state = PrepState::zero;
    cons.order = 1;
    cons.columns.resize(2);
    cons.columns[0].require_j = {0, 1};
    cons.columns[0].sample_length = 1;
    CHECK_THROWS_AS(search_schedules(cons, 1, 1), std::invalid_argument);
    cons.columns[0].sample_length = 2;
    cons.columns[0].forbid_j = {1};
    CHECK_THROWS_AS(search_schedules(cons, 1, 1), std::invalid_argument);
}

TEST_CASE("noise tables mirror the fault propagator") {
    std::mt19937_64 rng(5);
    PrepProtocol p = build_protocol(toy, PrepState::zero, random_schedule(rng, 4, 4, 2));
    NoiseTables t = protocol_noise_tables(p);
    const size_t enc_cnots = p.patches[0].count_cnots();
    const size_t wires = 15;
    CHECK(enc_cnots == 28);
    CHECK(t.cnot.size() == (4 * enc_cnots + 3 * wires) * 15);
    CHECK(t.spam.size() == 4 * wires + 3 * wires);

    // encoder entries replay through the event propagator
    size_t cnot_idx = 0, spam_idx = 0;
    for (int c = 0; c < 4; c++) {
        for (const FaultSite& s : fault_sites(p.patches[c])) {
            if (s.kind == LayerKind::cnot) {
                for (int pat = 1; pat < 16; pat++, cnot_idx++) {
                    if (rng() % 23) continue; // spot checks keep the walk light
                    std::array<std::vector<FaultEvent>, 4> fs{};
                    fs[c] = {FaultEvent::on_gate(s.layer, uint32_t(s.slot), uint8_t(pat))};
                    ProtocolRun r = run_with_faults(p, fs);
                    const FaultAction& a = t.cnot[cnot_idx];
                    CHECK(a.checks == r.checks);
                    CHECK(a.out_x == r.out_x);
                    CHECK(a.out_z == r.out_z);
                }
            } else {
                const Basis b = p.patches[c].layers[s.layer].basis;
                std::array<std::vector<FaultEvent>, 4> fs{};
                fs[c] = {FaultEvent::on_wire(s.layer, s.q0, b == Basis::Z, b == Basis::X)};
                ProtocolRun r = run_with_faults(p, fs);
                const FaultAction& a = t.spam[spam_idx++];
                CHECK(a.checks == r.checks);
                CHECK(a.out_x == r.out_x);
                CHECK(a.out_z == r.out_z);
            }
        }
    }

    // verification gates: the second-round cnot leaves target Pauli Z on
    // the output patch untouched by any readout
    const size_t v2_base = (4 * enc_cnots + 2 * wires) * 15;
    for (unsigned q : {1u, 7u, 12u}) {
        const FaultAction& a = t.cnot[v2_base + (q - 1) * 15 + (8 - 1)];
        CHECK(a.out_z == unit(q));
        CHECK_FALSE(a.out_x.any());
        for (const Mask128& ch : a.checks) CHECK_FALSE(ch.any());
    }
    // first-round target X flips only the paired readout
    for (unsigned q : {2u, 9u}) {
        const FaultAction& a = t.cnot[4 * enc_cnots * 15 + (q - 1) * 15 + (4 - 1)];
        CHECK(a.checks[0] == p.readout_det[0].apply(unit(q)));
        CHECK_FALSE(a.checks[1].any());
        CHECK_FALSE(a.checks[2].any());
        CHECK_FALSE(a.out_x.any());
        CHECK_FALSE(a.out_z.any());
    }
    // readout flips land in their own slot
    for (int slot = 0; slot < 3; slot++) {
        const FaultAction& a = t.spam[4 * wires + size_t(slot) * wires + 4];
        CHECK(a.checks[size_t(slot)] == p.readout_det[slot].apply(unit(5)));
    }
}
