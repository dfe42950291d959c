#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nw/render.hpp"
#include "nw/rng.hpp"
#include "nw/tensor.hpp"

namespace nw {

struct DatasetSpec {
  int num_classes = 7;
  int side = 64;            // must be divisible by 16 (four stride-2 stages)
  int train_samples = 2000;  // includes the sequence peak frames
  int test_samples = 700;
  int identities = 40;
  int sequences = 70;  // groups of 6 frames; the peak joins the train split
  double intensity_min = 0.4;
  double intensity_max = 1.0;
  double illumination = 0.08;  // +/- additive brightness range
  double translate_px = 2.0;   // +/- translation jitter range
  double noise_rate = 0.25;    // symmetric label flips in the train split
  // Optional per-class sampling weights for the train split; empty means
  // balanced. Test split is always balanced.
  std::vector<double> imbalance;
  uint64_t seed = 1;

  void validate() const;  // throws naming the offending field
};

struct Sample {
  Tensor image;  // [1, side, side], values in [0,1]
  int observed_label = 0;
  int clean_label = 0;
  int identity = 0;
  double intensity = 0.0;
  bool is_noisy = false;
};

// Six frames ordered by strictly increasing intensity: one low-t frame,
// four near-peak test frames, and the peak. The peak frame is also a train
// sample (peak_train_index points at it).
struct SequenceGroup {
  int identity = 0;
  int clean_label = 0;
  std::vector<double> intensities;
  std::vector<Tensor> frames;
  int64_t peak_train_index = -1;

  static constexpr int kFrames = 6;
  static constexpr int kTestFrames = 4;  // indices 1..4
};

struct Manifest {
  uint32_t version = 1;
  DatasetSpec spec;
  int64_t train_count = 0, test_count = 0, sequence_count = 0;
  std::vector<int64_t> train_hist_observed;  // per observed class
  std::vector<int64_t> train_hist_clean;
  std::vector<int64_t> test_hist;
  uint64_t checksum_train = 0, checksum_test = 0, checksum_sequences = 0;
};

struct Dataset {
  DatasetSpec spec;
  std::vector<Sample> train;
  std::vector<Sample> test;
  std::vector<SequenceGroup> sequences;
  Manifest manifest;
};

// Deterministic end to end: (spec, spec.seed) fixes every byte. Applies
// spec.noise_rate to the train split before returning.
Dataset generate_dataset(const DatasetSpec& spec);

// Flips exactly round(rate*N) observed labels, chosen uniformly without
// replacement; the new label is resampled uniformly among the other K-1.
void inject_label_noise(std::vector<Sample>& split, double rate,
                        int num_classes, uint64_t seed);

// Class-balanced batches: every batch holds batch_size/K samples of each
// observed class, drawn by per-class cycling with reshuffle on exhaustion,
// so minority classes repeat.
class SelectiveBatcher {
 public:
  SelectiveBatcher(const std::vector<Sample>& split, int batch_size,
                   int num_classes, uint64_t seed);
  // indices into the split, grouped by class
  std::vector<int64_t> next();
  int batch_size() const { return batch_size_; }

 private:
  const std::vector<Sample>* split_;
  int batch_size_;
  int num_classes_;
  Rng rng_;
  std::vector<std::vector<int64_t>> by_class_;
  std::vector<size_t> cursor_;
};

// Directory layout: manifest.json, train.bin, test.bin, sequences.bin.
// Payloads are little-endian "NWDS" files; the manifest carries their
// checksums and is verified on load. Fills ds.manifest's checksums.
void save_dataset(Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace nw
