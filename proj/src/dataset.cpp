#include "hgfx/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "hgfx/error.hpp"
#include "hgfx/image_io.hpp"

namespace hgfx {

namespace fs = std::filesystem;

Dataset load_image_folder(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("dataset root " + root.string() + " is not a directory");
  std::vector<fs::path> class_dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) class_dirs.push_back(e.path());
  std::sort(class_dirs.begin(), class_dirs.end());
  Dataset data;
  for (std::size_t label = 0; label < class_dirs.size(); ++label) {
    data.class_names.push_back(class_dirs[label].filename().string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(class_dirs[label])) {
      if (!e.is_regular_file()) continue;
      std::string ext = e.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm" || ext == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      ImageSample img = read_image(f);
      img.label = label;
      data.samples.push_back(std::move(img));
    }
  }
  return data;
}

DatasetSplit split_dataset(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw ConfigError("split: train fraction must lie in (0,1]");
  DatasetSplit out;
  out.train.class_names = data.class_names;
  out.val.class_names = data.class_names;
  const std::size_t classes = data.class_names.size();
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data.samples[i].label == c) idx.push_back(i);
    Rng rng(mix_seed(seed, c));
    shuffle(idx.begin(), idx.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(idx.size())));
    for (std::size_t j = 0; j < idx.size(); ++j) (j < n_train ? out.train : out.val).samples.push_back(data.samples[idx[j]]);
  }
  return out;
}

namespace {

struct Rgb {
  double r, g, b;
};

void blend(ImageSample& img, std::size_t y, std::size_t x, Rgb color, double alpha) {
  double* px = img.pixels.data() + (y * img.width + x) * 3;
  px[0] = (1.0 - alpha) * px[0] + alpha * color.r;
  px[1] = (1.0 - alpha) * px[1] + alpha * color.g;
  px[2] = (1.0 - alpha) * px[2] + alpha * color.b;
}

// Oriented Gaussian footprint, peak opacity at the center.
void stamp(ImageSample& img, double cy, double cx, double sigma_along, double sigma_across, double angle, Rgb color,
           double opacity) {
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
      const double u = dx * ca + dy * sa, v = -dx * sa + dy * ca;
      const double q = u * u / (sigma_along * sigma_along) + v * v / (sigma_across * sigma_across);
      const double a = opacity * std::exp(-0.5 * q);
      if (a > 1e-4) blend(img, y, x, color, a);
    }
  }
}

}  // namespace

ImageSample synth_image(std::size_t label, std::size_t size, Rng& rng) {
  if (label >= kSynthClasses.size()) throw ContractError("synth_image: label out of range");
  if (size == 0) throw ConfigError("synth_image: size must be positive");
  ImageSample img;
  img.height = img.width = size;
  img.channels = 3;
  img.label = label;
  img.pixels.resize(size * size * 3);
  const double scale = static_cast<double>(size) / 32.0;

  // Shared sky-like background: vertical gradient between two random blues.
  const Rgb top{rng.uniform(0.15, 0.45), rng.uniform(0.3, 0.6), rng.uniform(0.55, 0.9)};
  const Rgb bottom{rng.uniform(0.15, 0.45), rng.uniform(0.3, 0.6), rng.uniform(0.55, 0.9)};
  for (std::size_t y = 0; y < size; ++y) {
    const double t = static_cast<double>(y) / static_cast<double>(size > 1 ? size - 1 : 1);
    for (std::size_t x = 0; x < size; ++x) {
      double* px = img.pixels.data() + (y * size + x) * 3;
      px[0] = (1 - t) * top.r + t * bottom.r;
      px[1] = (1 - t) * top.g + t * bottom.g;
      px[2] = (1 - t) * top.b + t * bottom.b;
    }
  }

  const double s = static_cast<double>(size);
  if (label == 0) {
    const std::size_t blobs = 1 + rng.below(4);
    for (std::size_t i = 0; i < blobs; ++i) {
      const double shade = rng.uniform(0.85, 1.0);
      const double sigma = rng.uniform(2.5, 7.0) * scale;
      stamp(img, rng.uniform(0.2, 0.8) * s, rng.uniform(0.2, 0.8) * s, sigma, sigma * rng.uniform(0.8, 1.25),
            rng.uniform(0.0, std::numbers::pi), {shade, shade, shade}, rng.uniform(0.45, 0.95));
    }
  } else {
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const std::size_t streaks = 2 + rng.below(4);
    const double cy = rng.uniform(0.3, 0.7) * s, cx = rng.uniform(0.3, 0.7) * s;
    for (std::size_t i = 0; i < streaks; ++i) {
      const double shade = rng.uniform(0.4, 0.65);
      const double offset = rng.uniform(-5.0, 5.0) * scale;
      const double a = angle + rng.uniform(-0.2, 0.2);
      stamp(img, cy + offset * std::cos(angle), cx - offset * std::sin(angle), rng.uniform(7.0, 14.0) * scale,
            rng.uniform(0.8, 2.0) * scale, a, {shade, shade, shade * 0.95}, rng.uniform(0.45, 0.9));
    }
  }
  for (auto& v : img.pixels) v = std::clamp(v + 0.03 * rng.normal(), 0.0, 1.0);
  return img;
}

Dataset synth_dataset(std::size_t n_per_class, std::size_t size, std::uint64_t seed) {
  Dataset data;
  data.class_names = kSynthClasses;
  for (std::size_t label = 0; label < kSynthClasses.size(); ++label) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      Rng rng(mix_seed(seed, label * 1000003 + i));
      ImageSample img = synth_image(label, size, rng);
      // Quantise to what a PPM round trip would store, so disk and memory sets agree.
      for (auto& v : img.pixels) v = std::round(v * 255.0) / 255.0;
      data.samples.push_back(std::move(img));
    }
  }
  return data;
}

Dataset synth_generate(const fs::path& out_dir, std::size_t n_per_class, std::size_t size, std::uint64_t seed) {
  Dataset data = synth_dataset(n_per_class, size, seed);
  std::error_code ec;
  for (const auto& name : kSynthClasses) {
    fs::create_directories(out_dir / name, ec);
    if (ec) throw IoError("synth: cannot create " + (out_dir / name).string() + ": " + ec.message());
  }
  std::vector<std::size_t> counter(kSynthClasses.size(), 0);
  for (const auto& img : data.samples) {
    char file[32];
    std::snprintf(file, sizeof file, "img_%04zu.ppm", counter[img.label]++);
    write_ppm(out_dir / kSynthClasses[img.label] / file, img);
  }
  return data;
}

}  // namespace hgfx
