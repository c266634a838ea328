#pragma once

#include <string>

namespace derfuzz::rpki::oids {

// CMS / PKCS#7
inline const std::string signed_data = "1.2.840.113549.1.7.2";
inline const std::string attr_content_type = "1.2.840.113549.1.9.3";
inline const std::string attr_message_digest = "1.2.840.113549.1.9.4";
inline const std::string attr_signing_time = "1.2.840.113549.1.9.5";

// eContent types of the signed object profiles
inline const std::string ct_roa = "1.2.840.113549.1.9.16.1.24";
inline const std::string ct_manifest = "1.2.840.113549.1.9.16.1.26";
inline const std::string ct_gbr = "1.2.840.113549.1.9.16.1.35";
inline const std::string ct_aspa = "1.2.840.113549.1.9.16.1.49";

// algorithms
inline const std::string rsa_encryption = "1.2.840.113549.1.1.1";
inline const std::string sha256_with_rsa = "1.2.840.113549.1.1.11";
inline const std::string sha256 = "2.16.840.1.101.3.4.2.1";

// X.509
inline const std::string cn = "2.5.4.3";
inline const std::string ext_ski = "2.5.29.14";
inline const std::string ext_key_usage = "2.5.29.15";
inline const std::string ext_basic_constraints = "2.5.29.19";
inline const std::string ext_crl_number = "2.5.29.20";
inline const std::string ext_crldp = "2.5.29.31";
inline const std::string ext_cert_policies = "2.5.29.32";
inline const std::string ext_aki = "2.5.29.35";
inline const std::string ext_aia = "1.3.6.1.5.5.7.1.1";
inline const std::string ext_sia = "1.3.6.1.5.5.7.1.11";
inline const std::string ext_ip_addr_blocks = "1.3.6.1.5.5.7.1.7";
inline const std::string policy_cp = "1.3.6.1.5.5.7.14.2";
inline const std::string access_ca_issuers = "1.3.6.1.5.5.7.48.2";
inline const std::string access_ca_repository = "1.3.6.1.5.5.7.48.5";
inline const std::string access_rpki_manifest = "1.3.6.1.5.5.7.48.10";
inline const std::string access_signed_object = "1.3.6.1.5.5.7.48.11";

}  // namespace derfuzz::rpki::oids
