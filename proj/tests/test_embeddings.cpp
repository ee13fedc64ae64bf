#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "embed.hpp"
#include "gradcheck.hpp"
#include "image.hpp"
#include "rng.hpp"
#include "text.hpp"

using namespace unidial;

namespace {

ImageRaster random_raster(std::size_t h, std::size_t w, std::size_t c,
                          Rng& rng) {
  ImageRaster img;
  img.height = h;
  img.width = w;
  img.channels = c;
  img.pixels.resize(h * w * c);
  for (auto& p : img.pixels) p = rng.uniform();
  return img;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("vocab reserves fixed ids") {
  Vocab v;
  CHECK(v.id("[PAD]") == 0);
  CHECK(v.id("[CLS]") == 1);
  CHECK(v.id("[SEP]") == 2);
  CHECK(v.id("[END]") == 3);
  CHECK(v.id("[EOI]") == 4);
  CHECK(v.id("[MASK]") == 5);
  CHECK(v.id("[UNK]") == 6);
  CHECK(v.size() == 7);
}

TEST_CASE("tokenize basic rules") {
  Vocab v = Vocab::build({"is it sunny ?"});
  CHECK(tokenize("", v).empty());
  CHECK(tokenize("Is it sunny?", v) ==
        std::vector<int>{v.id("is"), v.id("it"), v.id("sunny"), v.id("?")});
  // OOV maps to [UNK]
  CHECK(tokenize("zxqv", v) == std::vector<int>{Vocab::kUnk});
}

TEST_CASE("tokenize round-trips normalized text") {
  Vocab v = Vocab::build({"what color is the square ?"});
  const std::string text = "What color IS the square?";
  auto ids = tokenize(text, v);
  const std::string normalized = detokenize(ids, v);
  CHECK(normalized == "what color is the square ?");
  CHECK(detokenize(tokenize(normalized, v), v) == normalized);
}

TEST_CASE("vocab file round trip") {
  Vocab v = Vocab::build({"alpha beta gamma"});
  auto path = temp_file("unidial_vocab_test.txt");
  v.save(path.string());
  Vocab w = Vocab::load(path.string());
  CHECK(w.size() == v.size());
  CHECK(w.id("beta") == v.id("beta"));
  std::filesystem::remove(path);
}

TEST_CASE("vocab rejects corrupted reserved prefix") {
  CHECK_THROWS_AS(Vocab::from_tokens({"[PAD]", "[CLS]"}), DataError);
  CHECK_THROWS_AS(Vocab::from_tokens({"x", "[CLS]", "[SEP]", "[END]", "[EOI]",
                                      "[MASK]", "[UNK]"}),
                  DataError);
}

TEST_CASE("patchify produces the 7x7 grid for 224/32") {
  Rng rng(3);
  ImageRaster img = random_raster(224, 224, 3, rng);
  Tensor p = patchify(img, 32);
  CHECK(p.rows() == 49);
  CHECK(p.cols() == 32 * 32 * 3);
}

TEST_CASE("patchify single-patch and 32x32 cases") {
  Rng rng(4);
  ImageRaster whole = random_raster(16, 16, 3, rng);
  Tensor one = patchify(whole, 16);
  CHECK(one.rows() == 1);
  CHECK(one.data() == whole.pixels);

  ImageRaster img = random_raster(32, 32, 3, rng);
  Tensor p = patchify(img, 8);
  CHECK(p.rows() == 16);
  CHECK(p.cols() == 192);
}

TEST_CASE("patchify rejects non-divisible dimensions") {
  Rng rng(5);
  ImageRaster img = random_raster(30, 32, 3, rng);
  CHECK_THROWS_WITH_AS(patchify(img, 8), doctest::Contains("30"), ShapeError);
}

TEST_CASE("patchify ordering is raster scan over the patch grid") {
  // 4x4 single-channel image with distinct values, patch 2
  ImageRaster img;
  img.height = img.width = 4;
  img.channels = 1;
  img.pixels = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  Tensor p = patchify(img, 2);
  // top-left, top-right, bottom-left, bottom-right
  CHECK(p.data() == std::vector<double>{0, 1, 4, 5, 2, 3, 6, 7, 8, 9, 12, 13,
                                        10, 11, 14, 15});
}

TEST_CASE("patchify round trip is bit exact") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t p = 1 + rng.uniform_index(6);
    const std::size_t h = p * (1 + rng.uniform_index(5));
    const std::size_t w = p * (1 + rng.uniform_index(5));
    const std::size_t c = 1 + rng.uniform_index(4);
    ImageRaster img = random_raster(h, w, c, rng);
    ImageRaster back = unpatchify(patchify(img, p), h, w, c, p);
    CHECK(back.pixels == img.pixels);
  }
}

TEST_CASE("raster file round trip") {
  Rng rng(7);
  ImageRaster img = random_raster(8, 12, 3, rng);
  auto path = temp_file("unidial_raster_test.ufr");
  save_raster(img, path.string());
  ImageRaster back = load_raster(path.string());
  CHECK(back.height == 8);
  CHECK(back.width == 12);
  CHECK(back.channels == 3);
  CHECK(back.pixels == img.pixels);
  std::filesystem::remove(path);
}

TEST_CASE("patch_project zero and identity weights") {
  PatchEmbedConfig cfg;
  cfg.patch = 2;
  cfg.channels = 1;
  cfg.dim = 4;
  cfg.weight = Tensor::zeros({4, 4});
  cfg.bias = Tensor::zeros({4});
  Tensor patches = Tensor::from_data({2, 4}, {1, 2, 3, 4, 5, 6, 7, 8});
  Tensor out = patch_project(patches, cfg);
  for (double v : out.data()) CHECK(v == 0.0);

  // identity projection passes patches through
  cfg.weight = Tensor::from_data(
      {4, 4}, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
  CHECK(patch_project(patches, cfg).data() == patches.data());

  Tensor bad = Tensor::zeros({2, 5});
  CHECK_THROWS_AS(patch_project(bad, cfg), ShapeError);
}

TEST_CASE("patch_project gradient matches finite differences") {
  Rng rng(8);
  PatchEmbedConfig cfg;
  cfg.patch = 2;
  cfg.channels = 3;
  cfg.dim = 5;
  std::vector<double> wdata(12 * 5);
  for (auto& v : wdata) v = rng.normal();
  cfg.weight = Tensor::from_data({12, 5}, wdata);
  std::vector<double> bdata(5);
  for (auto& v : bdata) v = rng.normal();
  cfg.bias = Tensor::from_data({5}, bdata);

  std::vector<double> pdata(3 * 12);
  for (auto& v : pdata) v = rng.normal();
  Tensor patches = Tensor::from_data({3, 12}, pdata);

  double e_w = grad_check(
      [&](const Tensor& w) {
        PatchEmbedConfig c2 = cfg;
        c2.weight = w;
        return sum(patch_project(patches, c2));
      },
      cfg.weight);
  CHECK(e_w < 1e-4);
  double e_p = grad_check(
      [&](const Tensor& p) { return sum(patch_project(p, cfg)); }, patches);
  CHECK(e_p < 1e-4);
}

TEST_CASE("embed_tokens definition and error paths") {
  EmbeddingTables t;
  t.word = Tensor::zeros({10, 3});
  t.position = Tensor::zeros({8, 3});
  t.segment = Tensor::zeros({2, 3});
  Tensor zero = embed_tokens({1, 2}, t, {0, 1}, {1, 1});
  for (double v : zero.data()) CHECK(v == 0.0);

  // single token: exactly word + position0 + segment1
  t.word.mutable_data()[3 * 3 + 0] = 0.5;  // word row 3
  t.position.mutable_data()[1] = 0.25;     // position row 0, col 1
  t.segment.mutable_data()[1 * 3 + 2] = -1.0;
  Tensor row = embed_tokens({3}, t, {0}, {1});
  CHECK(row.data() == std::vector<double>{0.5, 0.25, -1.0});

  CHECK_THROWS_AS(embed_tokens({10}, t, {0}, {1}), IndexError);
  CHECK_THROWS_AS(embed_tokens({0}, t, {8}, {1}), IndexError);
  CHECK_THROWS_AS(embed_tokens({0}, t, {0}, {2}), IndexError);
}

TEST_CASE("embed gradients scatter-add with repeated ids") {
  Rng rng(9);
  std::vector<double> wd(6 * 4), pd(5 * 4), sd(2 * 4);
  for (auto& v : wd) v = rng.normal();
  for (auto& v : pd) v = rng.normal();
  for (auto& v : sd) v = rng.normal();
  EmbeddingTables base;
  base.word = Tensor::from_data({6, 4}, wd);
  base.position = Tensor::from_data({5, 4}, pd);
  base.segment = Tensor::from_data({2, 4}, sd);
  std::vector<std::size_t> ids{2, 2, 5};  // repeated token id
  std::vector<std::size_t> pos{0, 1, 2};
  std::vector<std::size_t> seg{1, 1, 0};

  for (int which = 0; which < 3; ++which) {
    Tensor target = which == 0   ? base.word
                    : which == 1 ? base.position
                                 : base.segment;
    double err = grad_check(
        [&](const Tensor& x) {
          EmbeddingTables t = base;
          (which == 0 ? t.word : which == 1 ? t.position : t.segment) = x;
          return sum(embed_tokens(ids, t, pos, seg));
        },
        target);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("embed_patches shares segment row zero") {
  EmbeddingTables t;
  t.word = Tensor::zeros({7, 2});
  t.position = Tensor::from_data({4, 2}, {0, 0, 1, 1, 2, 2, 3, 3});
  t.segment = Tensor::from_data({2, 2}, {10, 10, 20, 20});
  Tensor projected = Tensor::zeros({2, 2});
  Tensor out = embed_patches(projected, t, {1, 2});
  // equal projections differ only via their position rows; both add seg row 0
  CHECK(out.data() == std::vector<double>{11, 11, 12, 12});
}

TEST_CASE("embedding outputs are linear in the tables") {
  Rng rng(10);
  std::vector<double> wd(6 * 4), pd(5 * 4), sd(2 * 4);
  for (auto& v : wd) v = rng.normal();
  for (auto& v : pd) v = rng.normal();
  for (auto& v : sd) v = rng.normal();
  EmbeddingTables t;
  t.word = Tensor::from_data({6, 4}, wd);
  t.position = Tensor::from_data({5, 4}, pd);
  t.segment = Tensor::from_data({2, 4}, sd);

  EmbeddingTables doubled;
  auto scale2 = [](const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = 2.0 * v[i];
    return out;
  };
  doubled.word = Tensor::from_data({6, 4}, scale2(wd));
  doubled.position = Tensor::from_data({5, 4}, scale2(pd));
  doubled.segment = Tensor::from_data({2, 4}, scale2(sd));

  std::vector<std::size_t> ids{1, 4, 4};
  std::vector<std::size_t> pos{0, 1, 2};
  std::vector<std::size_t> seg{1, 0, 1};
  Tensor a = embed_tokens(ids, t, pos, seg);
  Tensor b = embed_tokens(ids, doubled, pos, seg);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(b.data()[i] == doctest::Approx(2.0 * a.data()[i]).epsilon(1e-12));
}

TEST_CASE("count_patch_params formula and brute force agree") {
  CHECK(count_patch_params(1, 1, 1) == 2);
  CHECK(count_patch_params(32, 3, 768) == 2360064);
  CHECK(count_patch_params(32, 3, 192) == 590016);
  CHECK(count_patch_params(8, 3, 64) == 12352);

  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t p = 1 + rng.uniform_index(8);
    const std::size_t c = 1 + rng.uniform_index(4);
    const std::size_t d = 1 + rng.uniform_index(32);
    PatchEmbedConfig cfg;
    cfg.patch = p;
    cfg.channels = c;
    cfg.dim = d;
    cfg.weight = Tensor::zeros({p * p * c, d});
    cfg.bias = Tensor::zeros({d});
    CHECK(count_patch_params(p, c, d) == cfg.weight.size() + cfg.bias.size());
  }
}
