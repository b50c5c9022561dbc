#include <doctest.h>

#include <cstring>
#include <sstream>

#include "permnet/checkpoint.hpp"
#include "permnet/error.hpp"
#include "permnet/experiment.hpp"

using namespace permnet;

namespace {

std::string bytes_of(const ModelConfig& c, const Parameters& p) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(out, c, p);
  return out.str();
}

Errc read_error(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  try {
    read_checkpoint(in);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::Io;
}

}  // namespace

TEST_CASE("checkpoint: layout header") {
  const auto c = make_tiny_preset("nn-1024", 1).config;
  const auto bytes = bytes_of(c, init_parameters(c));
  CHECK(bytes.substr(0, 4) == "PNNC");
  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  CHECK(version == 1);
  std::uint64_t n = 0;
  std::memcpy(&n, bytes.data() + 8, 8);
  const auto header = nlohmann::json::parse(bytes.substr(16, n));
  CHECK(header["input_dim"] == 10);
  CHECK(bytes.size() == 16 + n + 4 * init_parameters(c).scalar_count());
}

TEST_CASE("checkpoint: round trip for every preset family") {
  for (const auto& name : {"nn-1024", "cnn", "gru"}) {
    const auto c = make_tiny_preset(name, 3).config;
    auto p = init_parameters(c);
    p.layers.back().back().values[0] = 0.1;  // not representable in float32
    std::istringstream in(bytes_of(c, p), std::ios::binary);
    const auto ck = read_checkpoint(in);
    CHECK(ck.config == c);
    REQUIRE(ck.params.layers.size() == p.layers.size());
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      for (std::size_t t = 0; t < p.layers[l].size(); ++t) {
        CHECK(ck.params.layers[l][t].shape == p.layers[l][t].shape);
        for (std::size_t i = 0; i < p.layers[l][t].size(); ++i) {
          CHECK(ck.params.layers[l][t][i] == static_cast<double>(static_cast<float>(p.layers[l][t][i])));
        }
      }
    }
  }
}

TEST_CASE("checkpoint: preset widths in header") {
  const auto c = make_preset("nn-1024", 2137, 1);
  const auto j = model_config_to_json(c);
  std::vector<std::size_t> widths;
  for (const auto& l : j["layers"]) widths.push_back(l["out_dim"]);
  CHECK(widths == std::vector<std::size_t>{1024, 2048, 1024, 1});
  const auto big = model_config_to_json(make_preset("nn-4096", 2137, 1));
  widths.clear();
  for (const auto& l : big["layers"]) widths.push_back(l["out_dim"]);
  CHECK(widths == std::vector<std::size_t>{4096, 8192, 4096, 1});
}

TEST_CASE("checkpoint: corrupt inputs rejected") {
  const auto c = make_tiny_preset("gru", 1).config;
  const auto good = bytes_of(c, init_parameters(c));
  CHECK(read_error("XXXX" + good.substr(4)) == Errc::InvalidFormat);
  CHECK(read_error(good.substr(0, good.size() - 2)) == Errc::InvalidFormat);
  CHECK(read_error(good + "junk") == Errc::InvalidFormat);
  auto v2 = good;
  v2[4] = 2;
  CHECK(read_error(v2) == Errc::InvalidFormat);
}

TEST_CASE("checkpoint: reserved layer kinds") {
  CHECK_THROWS_AS(layer_from_json(nlohmann::json{{"kind", "lstm"}, {"code", 6}}), Error);
  try {
    layer_from_json(nlohmann::json{{"code", 7}});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnsupportedLayer);
  }
  const auto j = layer_to_json(Conv1DSpec{1, 5, 10, 0.002});
  CHECK(j["padding"] == "same");
  CHECK(j["code"] == 2);
  CHECK(std::get<Conv1DSpec>(layer_from_json(j)) == Conv1DSpec{1, 5, 10, 0.002});
}
