#include <catch2/catch_amalgamated.hpp>

#include "derfuzz/asn1/encode.hpp"
#include "derfuzz/asn1/label.hpp"
#include "derfuzz/asn1/parse.hpp"
#include "derfuzz/repair/repair.hpp"
#include "derfuzz/rpki/data.hpp"
#include "derfuzz/rpki/make.hpp"
#include "derfuzz/rpki/verify.hpp"
#include "support/crypto_oracle.hpp"
#include "support/strict_der.hpp"

using namespace derfuzz;
using namespace derfuzz::asn1;
using namespace derfuzz::repair;

namespace {

struct Fixture {
    crypto::RsaKeyPair ca_key;
    crypto::RsaKeyPair one_off;
    rpki::RepairContext ctx;
    rpki::DataDir data;

    Fixture() {
        Rng rng(1001);
        ca_key = crypto::generate_keypair(rng);
        one_off = crypto::generate_keypair(rng);
        ctx.keys.ca = &ca_key;
        ctx.keys.one_off = &one_off;
        ctx.ca_subject_der = encode_der(rpki::make_name("derfuzz-ca"));
        ctx.object_uri = "rsync://derfuzz.test/fuzz/obj.roa";
        ctx.crl_uri = "rsync://derfuzz.test/fuzz/fuzz.crl";
        ctx.manifest_uri = "rsync://derfuzz.test/fuzz/fuzz.mft";
        ctx.ca_cert_uri = "rsync://derfuzz.test/ta/fuzz.cer";
        ctx.ca_repo_uri = "rsync://derfuzz.test/fuzz/";
        ctx.ee_serial = 7;
    }

    TlvNode fresh_roa() {
        rpki::RoaParams p;
        p.as_id = 64500;
        p.prefixes.push_back({{192, 0, 2}, 24, 24, 1});
        p.ee_serial = ctx.ee_serial;
        p.crl_uri = ctx.crl_uri;
        p.aia_uri = ctx.ca_cert_uri;
        p.object_uri = ctx.object_uri;
        TlvNode t = rpki::make_roa(p, ctx.keys, ctx.clock);
        label_tree(t, data.schema(ObjectKind::roa));
        return t;
    }
};

}  // namespace

TEST_CASE("taint repair reproduces the two-child length example") {
    // parent with 20 content bytes: first child declares 10, second declares 6
    TlvNode parent = seq({octet(Bytes(10, 0xaa)), octet(Bytes(6, 0xbb))});
    Bytes before = encode_der(parent);
    REQUIRE(before[1] == 20);
    REQUIRE(before[3] == 10);

    // first child grows by two bytes
    Bytes grown(12, 0xaa);
    parent.children[0].set_value(grown);
    size_t newly = propagate_taint(parent);
    CHECK(newly == 1);  // the parent
    CHECK(parent.tainted);

    Bytes after = encode_der(parent);
    CHECK(after[1] == 22);  // parent length adapted to 22
    CHECK(after[3] == 12);  // child length adapted to 12
    CHECK(strict_der::accepts(after));
}

TEST_CASE("protected length override survives child repair") {
    TlvNode parent = seq({octet(Bytes(10, 0xaa)), octet(Bytes(6, 0xbb))});
    parent.length_override = 99;
    parent.breaking = true;
    parent.protected_ = true;
    parent.children[0].set_value(Bytes(12, 0xaa));
    propagate_taint(parent);
    Bytes out = encode_der(parent);
    CHECK(out[1] == 99);   // parent override preserved
    CHECK(out[3] == 12);   // child still fixed
}

TEST_CASE("propagate_taint on a clean tree changes nothing") {
    TlvNode t = seq({integer(1), seq({octet({1, 2})})});
    CHECK(propagate_taint(t) == 0);
    CHECK_FALSE(t.tainted);
}

TEST_CASE("taint reaches every ancestor") {
    TlvNode t = seq({seq({seq({integer(1)})}), integer(2)});
    t.children[0].children[0].children[0].tainted = true;
    propagate_taint(t);
    CHECK(t.tainted);
    CHECK(t.children[0].tainted);
    CHECK(t.children[0].children[0].tainted);
    CHECK_FALSE(t.children[1].tainted);
}

TEST_CASE_METHOD(Fixture, "generated ROA signs and verifies") {
    TlvNode roa = fresh_roa();
    sign_object(roa, data.plan(ObjectKind::roa), ctx);
    Bytes der = encode_der(roa);
    CHECK(strict_der::accepts(der));

    auto product = rpki::verify_signed_object(der, ca_key.pub);
    CHECK(product.accepted());

    Bytes ca_spki = crypto::spki_der(ca_key.pub);
    auto oracle = crypto_oracle::verify_signed_object(der, ca_spki);
    CHECK(oracle.parse_ok);
    CHECK(oracle.digest_ok);
    CHECK(oracle.ee_signature_ok);
    CHECK(oracle.ca_signature_ok);
    CHECK(oracle.key_ids_ok);
}

TEST_CASE_METHOD(Fixture, "mutated payload is repaired back to verifiable") {
    TlvNode roa = fresh_roa();
    auto pos = find_by_label(roa, "roa.payload.asID");
    REQUIRE(pos);
    TlvNode* as_id = roa.child_at(*pos);
    as_id->set_value(Bytes{0x0f, 0xff, 0xff, 0xff, 0xff});  // mutation: new AS number
    as_id->protected_ = true;

    repair_fields(roa, data.plan(ObjectKind::roa), ctx);
    Bytes der = encode_der(roa);
    auto oracle = crypto_oracle::verify_signed_object(der, crypto::spki_der(ca_key.pub));
    CHECK(oracle.accepted());
    // the mutation itself must not be repaired away
    auto back = parse_der(der);
    label_tree(back.root, data.schema(ObjectKind::roa));
    auto as_pos = find_by_label(back.root, "roa.payload.asID");
    REQUIRE(as_pos);
    CHECK(back.root.child_at(*as_pos)->value == Bytes{0x0f, 0xff, 0xff, 0xff, 0xff});
}

TEST_CASE_METHOD(Fixture, "protected signature is left broken") {
    TlvNode roa = fresh_roa();
    sign_object(roa, data.plan(ObjectKind::roa), ctx);

    auto pos = find_by_label(roa, "roa.payload.asID");
    REQUIRE(pos);
    roa.child_at(*pos)->set_value(Bytes{0x42, 0x42, 0x42});
    roa.child_at(*pos)->protected_ = true;
    auto sig_pos = find_by_label(roa, "roa.signature");
    REQUIRE(sig_pos);
    roa.child_at(*sig_pos)->protected_ = true;

    auto outcome = repair_fields(roa, data.plan(ObjectKind::roa), ctx);
    CHECK(std::find(outcome.skipped_protected.begin(), outcome.skipped_protected.end(),
                    "roa.signature") != outcome.skipped_protected.end());
    auto oracle = crypto_oracle::verify_signed_object(encode_der(roa),
                                                      crypto::spki_der(ca_key.pub));
    CHECK(oracle.parse_ok);
    CHECK_FALSE(oracle.ee_signature_ok);
    CHECK_FALSE(oracle.accepted());
}

TEST_CASE_METHOD(Fixture, "repair is idempotent") {
    TlvNode roa = fresh_roa();
    auto pos = find_by_label(roa, "roa.payload.asID");
    roa.child_at(*pos)->set_value(Bytes{0x11, 0x22});
    roa.child_at(*pos)->protected_ = true;

    repair_fields(roa, data.plan(ObjectKind::roa), ctx);
    Bytes once = encode_der(roa);
    repair_fields(roa, data.plan(ObjectKind::roa), ctx);
    Bytes twice = encode_der(roa);
    CHECK(once == twice);
}

TEST_CASE_METHOD(Fixture, "protection dominance holds for every protected node") {
    TlvNode roa = fresh_roa();
    sign_object(roa, data.plan(ObjectKind::roa), ctx);
    auto sig_pos = find_by_label(roa, "roa.signature");
    auto ski_pos = find_by_label(roa, "roa.eeCert.ski");
    REQUIRE(sig_pos);
    REQUIRE(ski_pos);
    roa.child_at(*sig_pos)->protected_ = true;
    roa.child_at(*ski_pos)->protected_ = true;
    Bytes sig_before = roa.child_at(*sig_pos)->value;
    Bytes ski_before = encode_content(*roa.child_at(*ski_pos));

    repair_fields(roa, data.plan(ObjectKind::roa), ctx);
    CHECK(roa.child_at(*sig_pos)->value == sig_before);
    CHECK(encode_content(*roa.child_at(*ski_pos)) == ski_before);
}

TEST_CASE_METHOD(Fixture, "unlocatable labels are skipped with diagnostics") {
    TlvNode t = seq({integer(1)});  // no labels at all
    auto outcome = repair_fields(t, data.plan(ObjectKind::roa), ctx);
    CHECK(outcome.applied.empty());
    CHECK(outcome.diagnostics.size() == data.plan(ObjectKind::roa).rules.size());
}

TEST_CASE_METHOD(Fixture, "sign_object on a tree lacking signature labels is a no-op") {
    TlvNode t = seq({integer(1), octet({2, 2})});
    Bytes before = encode_der(t);
    auto outcome = sign_object(t, data.plan(ObjectKind::roa), ctx);
    CHECK(encode_der(t) == before);
    CHECK_FALSE(outcome.diagnostics.empty());
}

TEST_CASE_METHOD(Fixture, "manifest signs and verifies") {
    rpki::ManifestParams p;
    p.number = 11;
    p.ee_serial = 11;
    p.files.push_back({"obj0.roa", Bytes(32, 1)});
    p.files.push_back({"fuzz.crl", Bytes(32, 2)});
    p.crl_uri = ctx.crl_uri;
    p.aia_uri = ctx.ca_cert_uri;
    p.object_uri = ctx.manifest_uri;
    TlvNode mft = rpki::make_manifest(p, ctx.keys, ctx.clock);
    label_tree(mft, data.schema(ObjectKind::manifest));
    sign_object(mft, data.plan(ObjectKind::manifest), ctx);
    Bytes der = encode_der(mft);
    CHECK(strict_der::accepts(der));
    CHECK(rpki::verify_signed_object(der, ca_key.pub).accepted());
    CHECK(crypto_oracle::verify_signed_object(der, crypto::spki_der(ca_key.pub)).accepted());
}

TEST_CASE_METHOD(Fixture, "length consistency after repair of random value edits") {
    Rng rng(77);
    TlvNode roa = fresh_roa();
    for (int trial = 0; trial < 200; ++trial) {
        TlvNode t = roa;
        std::vector<NodePath> paths;
        walk(std::as_const(t), [&](const TlvNode& n, const NodePath& p) {
            if (!n.has_children() && !n.opaque) paths.push_back(p);
            return true;
        });
        TlvNode* victim = t.child_at(paths[rng.below(paths.size())]);
        victim->set_value(rng.bytes(rng.below(40)));
        victim->protected_ = true;
        propagate_taint(t);
        CHECK(strict_der::accepts(encode_der(t)));
    }
}
