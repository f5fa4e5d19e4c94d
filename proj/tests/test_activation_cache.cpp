#include "ace/activation_cache.hpp"
#include "ace/fileio.hpp"
#include "helpers.hpp"

using namespace ace;

TEST_SUITE("activation_cache") {
  TEST_CASE("encode/decode round trip is exact") {
    Rng rng(1);
    ActivationMatrix a(7, 5);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = float(rng.normal());
    const std::string bytes = encode_activations(a);
    CHECK(bytes.substr(0, 4) == "ACEA");
    CHECK(bytes.size() == 4 + 4 + 4 + 8 + 7 * 5 * 4);
    CHECK(decode_activations(bytes) == a);
    CHECK(decode_activations(encode_activations(ActivationMatrix(0, 3))).rows() == 0);
  }

  TEST_CASE("corrupt caches are io errors") {
    const std::string bytes = encode_activations(ActivationMatrix::Ones(2, 2));
    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK(test::error_kind_of([&] { decode_activations(bad_magic); }) == ErrorKind::io);
    std::string bad_version = bytes;
    bad_version[4] = 9;
    CHECK(test::error_kind_of([&] { decode_activations(bad_version); }) == ErrorKind::io);
    CHECK(test::error_kind_of([&] { decode_activations(bytes.substr(0, bytes.size() - 1)); }) == ErrorKind::io);
  }

  TEST_CASE("file and sidecar") {
    const auto dir = test::scratch_dir("acea");
    const ActivationMatrix a = ActivationMatrix::Constant(3, 2, 0.25f);
    const nlohmann::json rows = {{{"image", "a.png"}}, {{"image", "b.png"}}, {{"image", "c.png"}}};
    write_activation_cache(dir / "x.acea", a, rows);
    CHECK(sidecar_path(dir / "x.acea") == dir / "x.json");
    CHECK(read_activation_cache(dir / "x.acea") == a);
    CHECK(read_activation_sidecar(dir / "x.acea") == rows);
    const auto side = nlohmann::json::parse(read_file(sidecar_path(dir / "x.acea")));
    CHECK(side.at("dim") == 2);
    CHECK(side.at("count") == 3);
  }
}
