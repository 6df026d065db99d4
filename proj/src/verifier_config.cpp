#include <fstream>
#include <sstream>

#include <json.hpp>

#include "watz/verifier.hpp"

namespace watz::verifier {

namespace {

template <std::size_t N>
ByteArray<N> hex_field(const nlohmann::json& node, const std::string& field) {
  if (!node.is_string()) throw ConfigError(field + " must be a hex string");
  try {
    return array_from_hex<N>(node.get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field + ": " + e.what());
  }
}

const nlohmann::json& required(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) throw ConfigError(std::string("missing config key ") + key);
  return doc.at(key);
}

}  // namespace

VerifierConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  VerifierConfig config;
  const auto scalar = hex_field<32>(required(doc, "identity_private_key"), "identity_private_key");
  if (!crypto::is_valid_scalar(scalar)) throw ConfigError("identity_private_key is not a valid P-256 scalar");
  config.identity.private_scalar = crypto::Scalar(scalar);
  config.identity.public_point = crypto::public_from_scalar(config.identity.private_scalar);

  const auto& endorsements = required(doc, "endorsements");
  if (!endorsements.is_array()) throw ConfigError("endorsements must be a list");
  for (const auto& item : endorsements) config.endorsements.insert(hex_field<65>(item, "endorsements[]"));

  const auto& references = required(doc, "reference_values");
  if (!references.is_array()) throw ConfigError("reference_values must be a list");
  for (const auto& item : references) config.reference_values.insert(hex_field<32>(item, "reference_values[]"));

  if (doc.contains("min_version")) {
    const auto& v = doc.at("min_version");
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() > 0xffffffffu) {
      throw ConfigError("min_version must be an unsigned 32-bit integer");
    }
    config.min_version = v.get<std::uint32_t>();
  }

  const auto& blob_node = required(doc, "secret_blob_file");
  if (!blob_node.is_string()) throw ConfigError("secret_blob_file must be a path");
  std::filesystem::path blob_path = blob_node.get<std::string>();
  if (blob_path.is_relative()) blob_path = base_dir / blob_path;
  try {
    config.secret_blob = read_file(blob_path.string());
  } catch (const std::runtime_error&) {
    throw ConfigError("cannot read secret_blob_file " + blob_path.string());
  }

  if (doc.contains("listen_address")) {
    if (!doc.at("listen_address").is_string()) throw ConfigError("listen_address must be host:port");
    config.listen_address = doc.at("listen_address").get<std::string>();
  }

  config.validate();
  return config;
}

VerifierConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

}  // namespace watz::verifier
