#pragma once

#include <cstdint>
#include <string>

#include "derfuzz/bytes.hpp"
#include "derfuzz/crypto/keys.hpp"

namespace derfuzz::rpki {

/// Fixed campaign clock. Real wall time never leaks into object bytes; with
/// keys derived from the seed this makes every signed byte reproducible.
struct Clock {
    std::string not_before_utc = "250101000000Z";
    std::string not_after_utc = "270101000000Z";
    std::string this_update_gen = "20250101000000Z";
    std::string next_update_gen = "20260101000000Z";
    std::string signing_time_utc = "250101000000Z";
};

/// Everything field repair may need besides the tree itself: issuing keys,
/// issuer identity, publication URIs and the serial space.
struct RepairContext {
    crypto::KeyMaterial keys;
    Clock clock;
    Bytes ca_subject_der;   // DER Name of the issuing CA
    std::string object_uri; // rsync URI of this object
    std::string crl_uri;
    std::string manifest_uri;
    std::string ca_repo_uri;
    std::string ca_cert_uri;
    uint64_t ee_serial = 1;
};

}  // namespace derfuzz::rpki
