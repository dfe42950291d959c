#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "nw/common.hpp"
#include "nw/dataset.hpp"
#include "nw/divergence.hpp"
#include "nw/pgm.hpp"

using namespace nw;
namespace fs = std::filesystem;

namespace {

DatasetSpec small_spec(uint64_t seed = 7) {
  DatasetSpec s;
  s.side = 32;
  s.train_samples = 120;
  s.test_samples = 35;
  s.identities = 6;
  s.sequences = 14;
  s.noise_rate = 0.25;
  s.seed = seed;
  return s;
}

double image_l2(const Tensor& a, const Tensor& b) {
  double d = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(d);
}

}  // namespace

TEST_CASE("same spec and seed give byte-identical payloads and checksums") {
  auto spec = small_spec();
  Dataset a = generate_dataset(spec);
  Dataset b = generate_dataset(spec);

  fs::create_directories("ds_a");
  fs::create_directories("ds_b");
  save_dataset(a, "ds_a");
  save_dataset(b, "ds_b");
  CHECK(a.manifest.checksum_train == b.manifest.checksum_train);
  CHECK(a.manifest.checksum_test == b.manifest.checksum_test);
  CHECK(a.manifest.checksum_sequences == b.manifest.checksum_sequences);

  for (const char* f : {"manifest.json", "train.bin", "test.bin", "sequences.bin"}) {
    std::ifstream fa(std::string("ds_a/") + f, std::ios::binary);
    std::ifstream fb(std::string("ds_b/") + f, std::ios::binary);
    std::string ba((std::istreambuf_iterator<char>(fa)), {});
    std::string bb((std::istreambuf_iterator<char>(fb)), {});
    CHECK(ba == bb);
  }
  fs::remove_all("ds_a");
  fs::remove_all("ds_b");
}

TEST_CASE("t=0 renders the same neutral image for every class") {
  const FaceIdentity id = FaceIdentity::make(3, 99);
  RenderNuisance nz{0.03, 0.7, -1.1};
  Tensor base = render_face(0, 0.0, id, nz, 32);
  for (int cls = 1; cls < 7; ++cls) {
    Tensor other = render_face(cls, 0.0, id, nz, 32);
    for (int64_t i = 0; i < base.numel(); ++i) CHECK(base[i] == other[i]);
  }
}

TEST_CASE("imbalance quotas land within one sample of the weights") {
  DatasetSpec spec = small_spec();
  spec.train_samples = 2000;
  spec.sequences = 0;
  spec.noise_rate = 0.0;
  spec.imbalance = {0.48, 0.25, 0.11, 0.06, 0.05, 0.03, 0.02};
  Dataset ds = generate_dataset(spec);
  const auto& hist = ds.manifest.train_hist_clean;
  double wsum = 1.0;  // weights sum to 1 here
  for (int c = 0; c < 7; ++c) {
    const double target = 2000.0 * spec.imbalance[static_cast<size_t>(c)] / wsum;
    CHECK(std::abs(hist[static_cast<size_t>(c)] - target) <= 1.0);
  }
}

TEST_CASE("label noise flips exactly round(rate*N), never onto the clean label") {
  auto spec = small_spec();
  spec.noise_rate = 0.25;
  Dataset ds = generate_dataset(spec);
  int64_t noisy = 0;
  for (const auto& s : ds.train) {
    if (s.is_noisy) {
      ++noisy;
      CHECK(s.observed_label != s.clean_label);
    } else {
      CHECK(s.observed_label == s.clean_label);
    }
  }
  CHECK(noisy == std::llround(0.25 * 120));

  SUBCASE("rate 0 alters nothing") {
    auto clean = generate_dataset([&] {
      auto sp = small_spec();
      sp.noise_rate = 0.0;
      return sp;
    }());
    for (const auto& s : clean.train) CHECK_FALSE(s.is_noisy);
  }
  SUBCASE("rate outside range is rejected") {
    std::vector<Sample> dummy;
    CHECK_THROWS_AS(inject_label_noise(dummy, 1.0, 7, 1), Error);
    CHECK_THROWS_AS(inject_label_noise(dummy, -0.1, 7, 1), Error);
  }
}

TEST_CASE("invalid spec fields are rejected by name") {
  auto bad = small_spec();
  bad.side = 48 + 1;
  CHECK_THROWS_WITH_AS(generate_dataset(bad), doctest::Contains("side"), Error);
  bad = small_spec();
  bad.num_classes = 1;
  CHECK_THROWS_WITH_AS(generate_dataset(bad), doctest::Contains("num_classes"), Error);
  bad = small_spec();
  bad.noise_rate = 1.0;
  CHECK_THROWS_WITH_AS(generate_dataset(bad), doctest::Contains("noise_rate"), Error);
}

TEST_CASE("image distance grows with intensity separation") {
  const FaceIdentity id = FaceIdentity::make(1, 11);
  RenderNuisance nz{};
  Rng rng(5);
  for (int cls = 0; cls < 7; ++cls) {
    for (int trial = 0; trial < 8; ++trial) {
      double a = rng.uniform(0.0, 0.8);
      double b = a + rng.uniform(0.02, 0.1);
      double c = b + rng.uniform(0.02, 0.1);
      Tensor ia = render_face(cls, a, id, nz, 32);
      Tensor ib = render_face(cls, b, id, nz, 32);
      Tensor ic = render_face(cls, c, id, nz, 32);
      const double dab = image_l2(ia, ib);
      const double dac = image_l2(ia, ic);
      CHECK(dac >= dab - 1e-9);
    }
  }
}

TEST_CASE("sequence groups: increasing intensities, peak in train split") {
  Dataset ds = generate_dataset(small_spec());
  REQUIRE(ds.sequences.size() == 14);
  for (const auto& g : ds.sequences) {
    REQUIRE(g.intensities.size() == SequenceGroup::kFrames);
    for (size_t i = 1; i < g.intensities.size(); ++i)
      CHECK(g.intensities[i] > g.intensities[i - 1]);
    CHECK(g.intensities.back() == 1.0);
    // four test frames are the four largest non-peak intensities
    for (int f = 1; f <= SequenceGroup::kTestFrames; ++f)
      CHECK(g.intensities[static_cast<size_t>(f)] > g.intensities[0]);

    REQUIRE(g.peak_train_index >= 0);
    REQUIRE(g.peak_train_index < static_cast<int64_t>(ds.train.size()));
    const Sample& peak = ds.train[static_cast<size_t>(g.peak_train_index)];
    CHECK(peak.clean_label == g.clean_label);
    CHECK(peak.identity == g.identity);
    for (int64_t i = 0; i < peak.image.numel(); ++i)
      CHECK(peak.image[i] == g.frames.back()[i]);
  }
}

TEST_CASE("selective batches: exact per-class counts, divisibility enforced") {
  Dataset ds = generate_dataset(small_spec());
  CHECK_THROWS_AS(SelectiveBatcher(ds.train, 64, 7, 1), Error);

  SelectiveBatcher batcher(ds.train, 63, 7, 123);
  for (int it = 0; it < 10; ++it) {
    auto batch = batcher.next();
    REQUIRE(batch.size() == 63);
    std::vector<int> counts(7, 0);
    for (int64_t idx : batch)
      ++counts[static_cast<size_t>(ds.train[static_cast<size_t>(idx)].observed_label)];
    for (int c = 0; c < 7; ++c) CHECK(counts[static_cast<size_t>(c)] == 9);
  }
}

TEST_CASE("a 3-sample class repeats at least twice in a 9-per-class batch") {
  std::vector<Sample> split;
  for (int c = 0; c < 2; ++c) {
    const int n = (c == 0) ? 3 : 30;
    for (int i = 0; i < n; ++i) {
      Sample s;
      s.image = Tensor::zeros({1, 16, 16});
      s.observed_label = s.clean_label = c;
      split.push_back(std::move(s));
    }
  }
  SelectiveBatcher batcher(split, 18, 2, 9);
  auto batch = batcher.next();
  std::vector<int> uses(3, 0);
  for (int64_t idx : batch)
    if (idx < 3) ++uses[static_cast<size_t>(idx)];
  for (int i = 0; i < 3; ++i) CHECK(uses[static_cast<size_t>(i)] >= 2);
}

TEST_CASE("dataset round-trips byte-exactly and verifies checksums") {
  Dataset ds = generate_dataset(small_spec());
  fs::create_directories("ds_rt");
  save_dataset(ds, "ds_rt");
  Dataset back = load_dataset("ds_rt");

  REQUIRE(back.train.size() == ds.train.size());
  for (size_t i = 0; i < ds.train.size(); ++i) {
    const Sample& x = ds.train[i];
    const Sample& y = back.train[i];
    CHECK(x.observed_label == y.observed_label);
    CHECK(x.clean_label == y.clean_label);
    CHECK(x.identity == y.identity);
    CHECK(x.intensity == y.intensity);
    CHECK(x.is_noisy == y.is_noisy);
    for (int64_t p = 0; p < x.image.numel(); ++p) CHECK(x.image[p] == y.image[p]);
  }

  SUBCASE("corrupting one payload byte fails with a checksum diagnostic") {
    std::fstream f("ds_rt/train.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(100);
    char c;
    f.seekg(100);
    f.get(c);
    f.seekp(100);
    f.put(static_cast<char>(c ^ 0x1));
    f.close();
    CHECK_THROWS_WITH_AS(load_dataset("ds_rt"), doctest::Contains("checksum"), Error);
  }
  SUBCASE("manifest version bump fails with a version diagnostic") {
    std::ifstream in("ds_rt/manifest.json");
    std::string text((std::istreambuf_iterator<char>(in)), {});
    in.close();
    auto pos = text.find("\"version\": 1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 12, "\"version\": 2");
    std::ofstream out("ds_rt/manifest.json", std::ios::trunc);
    out << text;
    out.close();
    CHECK_THROWS_WITH_AS(load_dataset("ds_rt"), doctest::Contains("version"), Error);
  }
  fs::remove_all("ds_rt");
}

TEST_CASE("pgm export: header, rounding, range check") {
  Tensor img = Tensor::zeros({1, 2, 2});
  img[0] = 0.0;
  img[1] = 1.0;
  img[2] = 0.5;
  img[3] = 0.25;
  export_pgm(img, "test.pgm");
  std::ifstream f("test.pgm", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(f)), {});
  CHECK(bytes.substr(0, 3) == "P5\n");
  const std::string payload = bytes.substr(bytes.size() - 4);
  CHECK(static_cast<unsigned char>(payload[0]) == 0);
  CHECK(static_cast<unsigned char>(payload[1]) == 255);
  CHECK(static_cast<unsigned char>(payload[2]) == 128);  // round half up
  CHECK(static_cast<unsigned char>(payload[3]) == 64);
  std::remove("test.pgm");

  img[0] = 1.25;
  CHECK_THROWS_WITH_AS(export_pgm(img, "bad.pgm"), doctest::Contains("outside"), Error);
}

TEST_CASE("divergence worked examples") {
  std::vector<double> p{0.5, 0.5}, q{0.9, 0.1};
  CHECK(kl_divergence(p, q) == doctest::Approx(0.510826).epsilon(1e-5));
  CHECK(kl_divergence(q, p) == doctest::Approx(0.368064).epsilon(1e-5));
  CHECK(sym_divergence(p, q) == doctest::Approx(0.439445).epsilon(1e-5));
  CHECK(sym_divergence(p, q) == sym_divergence(q, p));
  CHECK(sym_divergence(p, p) == 0.0);
  CHECK_THROWS_AS(kl_divergence(p, std::vector<double>{1.0}), Error);
}

TEST_CASE("threshold semantics: strict inequality, exact-mean batch") {
  std::vector<DivergenceRecord> recs;
  for (double d : {0.1, 0.2, 0.3, 0.6}) {
    DivergenceRecord r;
    r.div = d;
    recs.push_back(r);
  }
  const double t = batch_threshold(recs);
  CHECK(t == 0.3);  // extended-precision mean rounds to the exact value
  auto mask = fixed_threshold_mask(recs, t);
  CHECK(mask.m == std::vector<uint8_t>{1, 1, 0, 0});
  CHECK(mask.survivors == 2);

  auto all = fixed_threshold_mask(recs, 1e18);
  CHECK(all.survivors == 4);

  CHECK_THROWS_AS(batch_threshold(std::vector<DivergenceRecord>{}), Error);
  CHECK_THROWS_AS(fixed_threshold_mask(recs, 0.0), Error);
}
