// Writes a synthetic lesion dataset (images, manifest, schema, lesion boxes).

#include <iostream>

#include <CLI11.hpp>

#include "skinelev/dataio/manifest.hpp"
#include "skinelev/error.hpp"
#include "skinelev/synth/generator.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic elevation / diagnosis dataset generator"};
  std::filesystem::path out;
  skinelev::synth::SynthOptions opts;
  std::string modality = "dermoscopic";
  app.add_option("out", out, "Output directory")->required();
  app.add_option("--count", opts.count, "Number of images")->capture_default_str();
  app.add_option("--seed", opts.seed, "Seed")->capture_default_str();
  app.add_option("--size", opts.image_size, "Image side in pixels")->capture_default_str();
  app.add_option("--modality", modality, "clinical or dermoscopic")->capture_default_str();
  app.add_option("--elevation-contrast", opts.elevation_contrast, "Strength of the elevation cue in [0, 1]")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app.add_flag("--diagnosis", opts.diagnosis_task, "Add texture and six diagnosis classes");
  CLI11_PARSE(app, argc, argv);
  try {
    opts.modality = skinelev::dataio::parse_modality(modality);
    const auto files = skinelev::synth::write_dataset(out, opts);
    std::cout << files.manifest.string() << "\n";
    return 0;
  } catch (const skinelev::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
