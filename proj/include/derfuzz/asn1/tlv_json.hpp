#pragma once

#include <json.hpp>

#include "derfuzz/asn1/tlv.hpp"
#include "derfuzz/bytes.hpp"

namespace derfuzz::asn1 {

/// Lossless tree dump including labels and mutation flags. Replay needs the
/// exact parent tree a mutation log was applied to, and labels that traveled
/// through splices are not recoverable from re-parsed bytes alone.
inline nlohmann::json tlv_to_json(const TlvNode& n) {
    nlohmann::json j;
    j["c"] = static_cast<int>(n.tag_class);
    j["t"] = n.tag_number;
    if (n.constructed) j["cons"] = true;
    if (n.opaque) j["opaque"] = true;
    if (n.encapsulated) j["encap"] = true;
    if (!n.value.empty()) j["v"] = hex_encode(n.value);
    if (!n.value_prefix.empty()) j["vp"] = hex_encode(n.value_prefix);
    if (!n.label.empty()) j["l"] = n.label;
    if (n.tainted) j["taint"] = true;
    if (n.protected_) j["prot"] = true;
    if (n.breaking) j["brk"] = true;
    if (n.tag_override) j["tago"] = hex_encode(*n.tag_override);
    if (n.length_override) j["leno"] = *n.length_override;
    if (n.length_form_override) j["lenf"] = hex_encode(*n.length_form_override);
    if (!n.children.empty()) {
        nlohmann::json kids = nlohmann::json::array();
        for (const auto& c : n.children) kids.push_back(tlv_to_json(c));
        j["k"] = std::move(kids);
    }
    return j;
}

inline TlvNode tlv_from_json(const nlohmann::json& j) {
    TlvNode n;
    n.tag_class = static_cast<TagClass>(j.at("c").get<int>());
    n.tag_number = j.at("t").get<uint64_t>();
    n.constructed = j.value("cons", false);
    n.opaque = j.value("opaque", false);
    n.encapsulated = j.value("encap", false);
    if (j.contains("v")) n.value = hex_decode(j["v"].get<std::string>());
    if (j.contains("vp")) n.value_prefix = hex_decode(j["vp"].get<std::string>());
    n.label = j.value("l", std::string());
    n.tainted = j.value("taint", false);
    n.protected_ = j.value("prot", false);
    n.breaking = j.value("brk", false);
    if (j.contains("tago")) n.tag_override = hex_decode(j["tago"].get<std::string>());
    if (j.contains("leno")) n.length_override = j["leno"].get<uint64_t>();
    if (j.contains("lenf")) n.length_form_override = hex_decode(j["lenf"].get<std::string>());
    if (j.contains("k"))
        for (const auto& kid : j["k"]) n.children.push_back(tlv_from_json(kid));
    return n;
}

}  // namespace derfuzz::asn1
