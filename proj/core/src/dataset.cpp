#include "nw/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "nw/common.hpp"

namespace nw {

namespace {

constexpr char kMagic[4] = {'N', 'W', 'D', 'S'};
constexpr uint32_t kFormatVersion = 1;

std::vector<int64_t> class_quotas(int64_t total, int k,
                                  const std::vector<double>& weights) {
  std::vector<double> w(static_cast<size_t>(k), 1.0);
  if (!weights.empty()) {
    check(static_cast<int>(weights.size()) == k,
          cat("imbalance: expected ", k, " weights, got ", weights.size()));
    w = weights;
  }
  double wsum = 0.0;
  for (double x : w) {
    check(x > 0.0, "imbalance: weights must be positive");
    wsum += x;
  }
  // largest remainder keeps every class within one sample of its target
  std::vector<int64_t> quota(static_cast<size_t>(k));
  std::vector<std::pair<double, int>> rem;
  int64_t assigned = 0;
  for (int c = 0; c < k; ++c) {
    const double exact = total * w[static_cast<size_t>(c)] / wsum;
    quota[static_cast<size_t>(c)] = static_cast<int64_t>(exact);
    assigned += quota[static_cast<size_t>(c)];
    rem.emplace_back(exact - std::floor(exact), c);
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int64_t i = 0; assigned < total; ++i, ++assigned)
    ++quota[static_cast<size_t>(rem[static_cast<size_t>(i) % rem.size()].second)];
  return quota;
}

Sample draw_sample(int cls, const DatasetSpec& spec, Rng& rng) {
  Sample s;
  s.clean_label = s.observed_label = cls;
  s.identity = static_cast<int>(rng.uniform_int(spec.identities));
  s.intensity = rng.uniform(spec.intensity_min, spec.intensity_max);
  RenderNuisance nz;
  nz.illumination = rng.uniform(-spec.illumination, spec.illumination);
  nz.shift_x = rng.uniform(-spec.translate_px, spec.translate_px);
  nz.shift_y = rng.uniform(-spec.translate_px, spec.translate_px);
  s.image = render_face(cls, s.intensity, FaceIdentity::make(s.identity, spec.seed),
                        nz, spec.side);
  return s;
}

std::vector<Sample> draw_split(int64_t count, const DatasetSpec& spec,
                               const std::vector<double>& weights, Rng& rng) {
  auto quota = class_quotas(count, spec.num_classes, weights);
  std::vector<int> labels;
  labels.reserve(static_cast<size_t>(count));
  for (int c = 0; c < spec.num_classes; ++c)
    labels.insert(labels.end(), static_cast<size_t>(quota[static_cast<size_t>(c)]), c);
  rng.shuffle(labels);
  std::vector<Sample> split;
  split.reserve(labels.size());
  for (int cls : labels) split.push_back(draw_sample(cls, spec, rng));
  return split;
}

void write_samples(std::ostream& os, const std::vector<Sample>& split, int side) {
  os.write(kMagic, 4);
  write_u32le(os, kFormatVersion);
  write_u32le(os, static_cast<uint32_t>(split.size()));
  write_u32le(os, static_cast<uint32_t>(side));
  for (const auto& s : split) {
    write_u32le(os, static_cast<uint32_t>(s.clean_label));
    write_u32le(os, static_cast<uint32_t>(s.observed_label));
    write_u32le(os, static_cast<uint32_t>(s.identity));
    os.put(s.is_noisy ? 1 : 0);
    write_f64le(os, s.intensity);
    for (int64_t i = 0; i < s.image.numel(); ++i) write_f64le(os, s.image[i]);
  }
}

std::vector<Sample> read_samples(std::istream& is, const std::string& what) {
  char magic[4];
  is.read(magic, 4);
  check(is.good() && std::equal(magic, magic + 4, kMagic),
        cat(what, ": not a dataset payload (bad magic)"));
  const uint32_t ver = read_u32le(is, "payload version");
  check(ver == kFormatVersion,
        cat(what, ": unsupported payload version ", ver, " (expected ",
            kFormatVersion, ")"));
  const uint32_t count = read_u32le(is, "sample count");
  const uint32_t side = read_u32le(is, "image side");
  std::vector<Sample> split;
  split.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    Sample s;
    s.clean_label = static_cast<int>(read_u32le(is, "clean label"));
    s.observed_label = static_cast<int>(read_u32le(is, "observed label"));
    s.identity = static_cast<int>(read_u32le(is, "identity"));
    const int noisy = is.get();
    check(noisy != EOF, cat("truncated file while reading ", what));
    s.is_noisy = noisy != 0;
    s.intensity = read_f64le(is, "intensity");
    s.image = Tensor::uninit({1, side, side});
    for (int64_t p = 0; p < s.image.numel(); ++p)
      s.image[p] = read_f64le(is, "pixels");
    split.push_back(std::move(s));
  }
  return split;
}

void write_sequences(std::ostream& os, const std::vector<SequenceGroup>& seqs,
                     int side) {
  os.write(kMagic, 4);
  write_u32le(os, kFormatVersion);
  write_u32le(os, static_cast<uint32_t>(seqs.size()));
  write_u32le(os, static_cast<uint32_t>(side));
  for (const auto& g : seqs) {
    write_u32le(os, static_cast<uint32_t>(g.identity));
    write_u32le(os, static_cast<uint32_t>(g.clean_label));
    write_u64le(os, static_cast<uint64_t>(g.peak_train_index));
    for (int f = 0; f < SequenceGroup::kFrames; ++f) {
      write_f64le(os, g.intensities[static_cast<size_t>(f)]);
      const Tensor& img = g.frames[static_cast<size_t>(f)];
      for (int64_t i = 0; i < img.numel(); ++i) write_f64le(os, img[i]);
    }
  }
}

std::vector<SequenceGroup> read_sequences(std::istream& is, const std::string& what) {
  char magic[4];
  is.read(magic, 4);
  check(is.good() && std::equal(magic, magic + 4, kMagic),
        cat(what, ": not a dataset payload (bad magic)"));
  const uint32_t ver = read_u32le(is, "payload version");
  check(ver == kFormatVersion,
        cat(what, ": unsupported payload version ", ver));
  const uint32_t count = read_u32le(is, "sequence count");
  const uint32_t side = read_u32le(is, "image side");
  std::vector<SequenceGroup> seqs;
  seqs.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    SequenceGroup g;
    g.identity = static_cast<int>(read_u32le(is, "identity"));
    g.clean_label = static_cast<int>(read_u32le(is, "clean label"));
    g.peak_train_index = static_cast<int64_t>(read_u64le(is, "peak index"));
    for (int f = 0; f < SequenceGroup::kFrames; ++f) {
      g.intensities.push_back(read_f64le(is, "intensity"));
      Tensor img = Tensor::uninit({1, side, side});
      for (int64_t p = 0; p < img.numel(); ++p) img[p] = read_f64le(is, "pixels");
      g.frames.push_back(std::move(img));
    }
    seqs.push_back(std::move(g));
  }
  return seqs;
}

std::string to_hex(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

uint64_t from_hex(const std::string& s) {
  return std::stoull(s, nullptr, 16);
}

void write_file_checked(const std::string& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary);
  check(os.good(), cat("cannot open '", path, "' for writing"));
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  check(os.good(), cat("write failed for '", path, "'"));
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  check(is.good(), cat("cannot open '", path, "'"));
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<int64_t> histogram(const std::vector<Sample>& split, int k, bool observed) {
  std::vector<int64_t> h(static_cast<size_t>(k), 0);
  for (const auto& s : split)
    ++h[static_cast<size_t>(observed ? s.observed_label : s.clean_label)];
  return h;
}

}  // namespace

void DatasetSpec::validate() const {
  check(num_classes >= 2, cat("num_classes: must be >= 2, got ", num_classes));
  check(num_classes <= 7,
        cat("num_classes: the renderer provides 7 expression classes, got ",
            num_classes));
  check(side > 0 && side % 16 == 0, cat("side: must be divisible by 16, got ", side));
  check(train_samples > 0, cat("train_samples: must be positive, got ", train_samples));
  check(test_samples > 0, cat("test_samples: must be positive, got ", test_samples));
  check(identities > 0, cat("identities: must be positive, got ", identities));
  check(sequences >= 0, cat("sequences: must be non-negative, got ", sequences));
  check(sequences < train_samples,
        cat("sequences: ", sequences, " peak frames do not fit into ",
            train_samples, " train samples"));
  check(intensity_min >= 0.0 && intensity_max <= 1.0 && intensity_min < intensity_max,
        cat("intensity range: [", intensity_min, ",", intensity_max,
            "] must be an ordered subrange of [0,1]"));
  check(illumination >= 0.0, cat("illumination: must be non-negative, got ", illumination));
  check(translate_px >= 0.0, cat("translate_px: must be non-negative, got ", translate_px));
  check(noise_rate >= 0.0 && noise_rate < 1.0,
        cat("noise_rate: must be in [0,1), got ", noise_rate));
  if (!imbalance.empty())
    check(static_cast<int>(imbalance.size()) == num_classes,
          cat("imbalance: expected ", num_classes, " weights, got ",
              imbalance.size()));
}

Dataset generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.spec = spec;

  Rng train_rng(Rng::derive(spec.seed, "split/train"));
  Rng test_rng(Rng::derive(spec.seed, "split/test"));
  Rng seq_rng(Rng::derive(spec.seed, "split/sequences"));
  Rng shuffle_rng(Rng::derive(spec.seed, "train-shuffle"));

  const int64_t regular = spec.train_samples - spec.sequences;
  ds.train = draw_split(regular, spec, spec.imbalance, train_rng);
  ds.test = draw_split(spec.test_samples, spec, {}, test_rng);

  // sequences: class round-robin, shared nuisance per group, intensities
  // strictly increasing; frames 1..4 are the four nearest the peak
  for (int sidx = 0; sidx < spec.sequences; ++sidx) {
    SequenceGroup g;
    g.clean_label = sidx % spec.num_classes;
    g.identity = static_cast<int>(seq_rng.uniform_int(spec.identities));
    RenderNuisance nz;
    nz.illumination = seq_rng.uniform(-spec.illumination, spec.illumination);
    nz.shift_x = seq_rng.uniform(-spec.translate_px, spec.translate_px);
    nz.shift_y = seq_rng.uniform(-spec.translate_px, spec.translate_px);
    const double t0 = seq_rng.uniform(0.03, 0.12);
    const double delta = seq_rng.uniform(0.035, 0.06);
    g.intensities = {t0, 1.0 - 4 * delta, 1.0 - 3 * delta, 1.0 - 2 * delta,
                     1.0 - delta, 1.0};
    const FaceIdentity face = FaceIdentity::make(g.identity, spec.seed);
    for (double t : g.intensities)
      g.frames.push_back(render_face(g.clean_label, t, face, nz, spec.side));

    Sample peak;
    peak.image = g.frames.back();
    peak.clean_label = peak.observed_label = g.clean_label;
    peak.identity = g.identity;
    peak.intensity = 1.0;
    g.peak_train_index = static_cast<int64_t>(ds.train.size());  // pre-shuffle
    ds.train.push_back(std::move(peak));
    ds.sequences.push_back(std::move(g));
  }

  // one shuffle over the assembled train split, tracked so the sequence
  // groups keep pointing at their peak samples
  std::vector<int64_t> order(ds.train.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle_rng.shuffle(order);
  std::vector<int64_t> position(order.size());
  for (size_t j = 0; j < order.size(); ++j)
    position[static_cast<size_t>(order[j])] = static_cast<int64_t>(j);
  std::vector<Sample> shuffled;
  shuffled.reserve(ds.train.size());
  for (int64_t src : order) shuffled.push_back(std::move(ds.train[static_cast<size_t>(src)]));
  ds.train = std::move(shuffled);
  for (auto& g : ds.sequences)
    g.peak_train_index = position[static_cast<size_t>(g.peak_train_index)];

  inject_label_noise(ds.train, spec.noise_rate, spec.num_classes,
                     Rng::derive(spec.seed, "label-noise"));

  Manifest& m = ds.manifest;
  m.spec = spec;
  m.train_count = static_cast<int64_t>(ds.train.size());
  m.test_count = static_cast<int64_t>(ds.test.size());
  m.sequence_count = static_cast<int64_t>(ds.sequences.size());
  m.train_hist_observed = histogram(ds.train, spec.num_classes, true);
  m.train_hist_clean = histogram(ds.train, spec.num_classes, false);
  m.test_hist = histogram(ds.test, spec.num_classes, true);
  return ds;
}

void inject_label_noise(std::vector<Sample>& split, double rate,
                        int num_classes, uint64_t seed) {
  check(rate >= 0.0 && rate < 1.0, cat("inject_label_noise: rate ", rate,
                                       " outside [0,1)"));
  const auto n = static_cast<int64_t>(split.size());
  const auto flips = static_cast<int64_t>(std::llround(rate * static_cast<double>(n)));
  Rng rng(seed);
  // partial Fisher-Yates picks `flips` distinct indices
  std::vector<int64_t> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (int64_t i = 0; i < flips; ++i) {
    const int64_t j = i + rng.uniform_int(n - i);
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    Sample& s = split[static_cast<size_t>(idx[static_cast<size_t>(i)])];
    int flipped = static_cast<int>(rng.uniform_int(num_classes - 1));
    if (flipped >= s.clean_label) ++flipped;  // never the clean label
    s.observed_label = flipped;
    s.is_noisy = true;
  }
}

SelectiveBatcher::SelectiveBatcher(const std::vector<Sample>& split,
                                   int batch_size, int num_classes, uint64_t seed)
    : split_(&split),
      batch_size_(batch_size),
      num_classes_(num_classes),
      rng_(seed) {
  check(batch_size > 0 && batch_size % num_classes == 0,
        cat("selective batches: batch size ", batch_size,
            " must be a positive multiple of ", num_classes, " classes"));
  by_class_.resize(static_cast<size_t>(num_classes));
  for (size_t i = 0; i < split.size(); ++i)
    by_class_[static_cast<size_t>(split[i].observed_label)].push_back(
        static_cast<int64_t>(i));
  for (int c = 0; c < num_classes; ++c) {
    check(!by_class_[static_cast<size_t>(c)].empty(),
          cat("selective batches: class ", c, " has no samples"));
    rng_.shuffle(by_class_[static_cast<size_t>(c)]);
  }
  cursor_.assign(static_cast<size_t>(num_classes), 0);
}

std::vector<int64_t> SelectiveBatcher::next() {
  const int per_class = batch_size_ / num_classes_;
  std::vector<int64_t> batch;
  batch.reserve(static_cast<size_t>(batch_size_));
  for (int c = 0; c < num_classes_; ++c) {
    auto& pool = by_class_[static_cast<size_t>(c)];
    auto& cur = cursor_[static_cast<size_t>(c)];
    for (int i = 0; i < per_class; ++i) {
      if (cur == pool.size()) {
        rng_.shuffle(pool);
        cur = 0;
      }
      batch.push_back(pool[cur++]);
    }
  }
  return batch;
}

void save_dataset(Dataset& ds, const std::string& dir) {
  using nlohmann::json;
  {
    std::ostringstream ss(std::ios::binary);
    write_samples(ss, ds.train, ds.spec.side);
    std::string bytes = ss.str();
    ds.manifest.checksum_train = fnv1a64(bytes.data(), bytes.size());
    write_file_checked(dir + "/train.bin", bytes);
  }
  {
    std::ostringstream ss(std::ios::binary);
    write_samples(ss, ds.test, ds.spec.side);
    std::string bytes = ss.str();
    ds.manifest.checksum_test = fnv1a64(bytes.data(), bytes.size());
    write_file_checked(dir + "/test.bin", bytes);
  }
  {
    std::ostringstream ss(std::ios::binary);
    write_sequences(ss, ds.sequences, ds.spec.side);
    std::string bytes = ss.str();
    ds.manifest.checksum_sequences = fnv1a64(bytes.data(), bytes.size());
    write_file_checked(dir + "/sequences.bin", bytes);
  }

  const Manifest& m = ds.manifest;
  const DatasetSpec& s = ds.spec;
  json j{
      {"version", m.version},
      {"spec",
       {{"num_classes", s.num_classes},
        {"side", s.side},
        {"train_samples", s.train_samples},
        {"test_samples", s.test_samples},
        {"identities", s.identities},
        {"sequences", s.sequences},
        {"intensity_min", s.intensity_min},
        {"intensity_max", s.intensity_max},
        {"illumination", s.illumination},
        {"translate_px", s.translate_px},
        {"noise_rate", s.noise_rate},
        {"imbalance", s.imbalance},
        {"seed", s.seed}}},
      {"train_count", m.train_count},
      {"test_count", m.test_count},
      {"sequence_count", m.sequence_count},
      {"train_hist_observed", m.train_hist_observed},
      {"train_hist_clean", m.train_hist_clean},
      {"test_hist", m.test_hist},
      {"checksum_train", to_hex(m.checksum_train)},
      {"checksum_test", to_hex(m.checksum_test)},
      {"checksum_sequences", to_hex(m.checksum_sequences)},
  };
  write_file_checked(dir + "/manifest.json", j.dump(2) + "\n");
}

Dataset load_dataset(const std::string& dir) {
  using nlohmann::json;
  const std::string text = read_file(dir + "/manifest.json");
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(cat("manifest.json: parse error: ", e.what()));
  }

  Dataset ds;
  Manifest& m = ds.manifest;
  try {
    m.version = j.at("version").get<uint32_t>();
    check(m.version == 1, cat("manifest.json: unsupported version ", m.version));
    const json& sj = j.at("spec");
    DatasetSpec& s = ds.spec;
    s.num_classes = sj.at("num_classes").get<int>();
    s.side = sj.at("side").get<int>();
    s.train_samples = sj.at("train_samples").get<int>();
    s.test_samples = sj.at("test_samples").get<int>();
    s.identities = sj.at("identities").get<int>();
    s.sequences = sj.at("sequences").get<int>();
    s.intensity_min = sj.at("intensity_min").get<double>();
    s.intensity_max = sj.at("intensity_max").get<double>();
    s.illumination = sj.at("illumination").get<double>();
    s.translate_px = sj.at("translate_px").get<double>();
    s.noise_rate = sj.at("noise_rate").get<double>();
    s.imbalance = sj.at("imbalance").get<std::vector<double>>();
    s.seed = sj.at("seed").get<uint64_t>();
    m.spec = s;
    m.train_count = j.at("train_count").get<int64_t>();
    m.test_count = j.at("test_count").get<int64_t>();
    m.sequence_count = j.at("sequence_count").get<int64_t>();
    m.train_hist_observed = j.at("train_hist_observed").get<std::vector<int64_t>>();
    m.train_hist_clean = j.at("train_hist_clean").get<std::vector<int64_t>>();
    m.test_hist = j.at("test_hist").get<std::vector<int64_t>>();
    m.checksum_train = from_hex(j.at("checksum_train").get<std::string>());
    m.checksum_test = from_hex(j.at("checksum_test").get<std::string>());
    m.checksum_sequences = from_hex(j.at("checksum_sequences").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(cat("manifest.json: missing or mistyped field: ", e.what()));
  }

  auto load_payload = [&](const std::string& name, uint64_t expect) {
    std::string bytes = read_file(dir + "/" + name);
    const uint64_t got = fnv1a64(bytes.data(), bytes.size());
    check(got == expect, cat(name, ": checksum mismatch (manifest ",
                             to_hex(expect), ", payload ", to_hex(got), ")"));
    return bytes;
  };

  {
    std::istringstream ss(load_payload("train.bin", m.checksum_train));
    ds.train = read_samples(ss, "train.bin");
  }
  {
    std::istringstream ss(load_payload("test.bin", m.checksum_test));
    ds.test = read_samples(ss, "test.bin");
  }
  {
    std::istringstream ss(load_payload("sequences.bin", m.checksum_sequences));
    ds.sequences = read_sequences(ss, "sequences.bin");
  }
  check(static_cast<int64_t>(ds.train.size()) == m.train_count,
        "train.bin: sample count does not match manifest");
  check(static_cast<int64_t>(ds.test.size()) == m.test_count,
        "test.bin: sample count does not match manifest");
  check(static_cast<int64_t>(ds.sequences.size()) == m.sequence_count,
        "sequences.bin: group count does not match manifest");
  return ds;
}

}  // namespace nw
