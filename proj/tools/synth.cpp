// Writes a small synthetic cases.jsonl + embedding bundle for trying the CLI
// without running the encoder export.
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "melrag/dataset.hpp"
#include "melrag/embedding_store.hpp"
#include "melrag/error.hpp"
#include "synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a clustered synthetic dataset"};
  app.name("melrag-synth");
  melrag::testing::ClusterSpec spec;
  std::string out_dir = ".";
  app.add_option("--count", spec.count, "Number of cases")->capture_default_str();
  app.add_option("--image-dim", spec.image_dim, "Image embedding width")->capture_default_str();
  app.add_option("--text-dim", spec.text_dim, "Text embedding width")->capture_default_str();
  app.add_option("--separation", spec.separation, "Distance between class means")->capture_default_str();
  app.add_option("--noise", spec.noise, "Per-component noise std")->capture_default_str();
  app.add_option("--malignant-share", spec.malignant_share, "Fraction of malignant cases")->capture_default_str();
  app.add_option("--seed", spec.seed, "Generator seed")->capture_default_str();
  app.add_option("--out-dir", out_dir, "Writes cases.jsonl and embeddings.mmeb here")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const auto data = melrag::testing::clustered_dataset(spec);
    std::filesystem::create_directories(out_dir);
    melrag::write_cases_jsonl(std::filesystem::path(out_dir) / "cases.jsonl", data.cases);
    melrag::write_bundle(data.bundle, std::filesystem::path(out_dir) / "embeddings.mmeb");
    std::cout << "wrote " << data.cases.size() << " cases to " << out_dir << "\n";
  } catch (const melrag::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
