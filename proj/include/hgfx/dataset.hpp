#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hgfx/rng.hpp"
#include "hgfx/trainer.hpp"

namespace hgfx {

// root/<class>/<image>; classes are the sorted subdirectory names, images are
// sorted by file name. Files other than PPM/PGM/PNG are ignored.
Dataset load_image_folder(const std::filesystem::path& root);

struct DatasetSplit {
  Dataset train;
  Dataset val;
};

// Per-class shuffle from seed; the first round(train_fraction * class_size)
// images of each class go to train.
DatasetSplit split_dataset(const Dataset& data, double train_fraction, std::uint64_t seed);

// Synthetic two-class stand-in for flexible objects:
//   class 0 "cloud": soft isotropic Gaussian blobs of random extent and opacity
//   class 1 "smoke": bundles of thin anisotropic streaks along a random direction
inline const std::vector<std::string> kSynthClasses{"cloud", "smoke"};

ImageSample synth_image(std::size_t label, std::size_t size, Rng& rng);

// Writes n_per_class PPM images per class under out_dir; returns the in-memory set.
Dataset synth_generate(const std::filesystem::path& out_dir, std::size_t n_per_class, std::size_t size,
                       std::uint64_t seed);

// Same images without touching the filesystem.
Dataset synth_dataset(std::size_t n_per_class, std::size_t size, std::uint64_t seed);

}  // namespace hgfx
