#include <gtest/gtest.h>

#include <json.hpp>

#include "support/testkit.hpp"
#include "watz/verifier.hpp"

using namespace watz;
using verifier::ConfigError;

namespace {

class ConfigTest : public ::testing::Test {
 protected:
  void SetUp() override {
    write_file((dir / "secret.bin").string(), testkit::bytes_of("top secret"));
    doc = {{"identity_private_key", std::string(63, '0') + "7"},
           {"endorsements", {to_hex(testkit::make_service(0x11)->public_attestation_key())}},
           {"reference_values", {std::string(64, 'a')}},
           {"min_version", 3},
           {"secret_blob_file", "secret.bin"},
           {"listen_address", "127.0.0.1:9999"}};
  }

  verifier::VerifierConfig parse() { return verifier::parse_config(doc.dump(), dir.path()); }

  std::string error() {
    try {
      parse();
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "no error";
  }

  testkit::TempDir dir;
  nlohmann::json doc;
};

}  // namespace

TEST_F(ConfigTest, ParsesAllKeys) {
  const auto config = parse();
  crypto::Scalar seven(array_from_hex<32>(std::string(63, '0') + "7"));
  EXPECT_EQ(config.identity.public_point, crypto::public_from_scalar(seven));
  EXPECT_EQ(config.endorsements.size(), 1u);
  EXPECT_EQ(config.reference_values.size(), 1u);
  EXPECT_EQ(config.min_version, 3u);
  EXPECT_EQ(config.secret_blob, testkit::bytes_of("top secret"));
  EXPECT_EQ(config.listen_address, "127.0.0.1:9999");
}

TEST_F(ConfigTest, LoadResolvesBlobRelativeToConfigFile) {
  const auto text = doc.dump();
  write_file((dir / "verifier.json").string(), ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  EXPECT_EQ(verifier::load_config(dir / "verifier.json").secret_blob, testkit::bytes_of("top secret"));
  EXPECT_THROW(verifier::load_config(dir / "missing.json"), ConfigError);
}

TEST_F(ConfigTest, Defaults) {
  doc.erase("min_version");
  doc.erase("listen_address");
  const auto config = parse();
  EXPECT_EQ(config.min_version, evidence::kCurrentVersion);
  EXPECT_EQ(config.listen_address, "127.0.0.1:7700");
}

TEST_F(ConfigTest, MissingSecretFile) {
  doc["secret_blob_file"] = "nope.bin";
  EXPECT_NE(error().find("secret_blob_file"), std::string::npos);
}

TEST_F(ConfigTest, RejectsBadValues) {
  auto expect_error = [&](const char* key, nlohmann::json value) {
    auto saved = doc;
    doc[key] = std::move(value);
    EXPECT_THROW(parse(), ConfigError) << key;
    doc = saved;
  };
  expect_error("identity_private_key", std::string(64, '0'));
  expect_error("identity_private_key", "12");
  expect_error("identity_private_key", 5);
  expect_error("endorsements", nlohmann::json::array());
  expect_error("endorsements", {"04" + std::string(128, '1')});
  expect_error("endorsements", "not a list");
  expect_error("reference_values", nlohmann::json::array());
  expect_error("reference_values", {"abcd"});
  expect_error("min_version", -1);
  expect_error("min_version", 1ull << 33);
  expect_error("listen_address", 7);
  doc.erase("identity_private_key");
  EXPECT_NE(error().find("identity_private_key"), std::string::npos);
  EXPECT_THROW(verifier::parse_config("[1,2]", dir.path()), ConfigError);
  EXPECT_THROW(verifier::parse_config("{", dir.path()), ConfigError);
}

TEST_F(ConfigTest, OversizeBlobRejected) {
  auto config = parse();
  config.secret_blob.assign(verifier::kMaxSecretBlob, 0);
  EXPECT_NO_THROW(config.validate());
  config.secret_blob.push_back(0);
  EXPECT_THROW(config.validate(), ConfigError);
}
