// Regenerates the bundled datasets under data/ (or the given directory).
// Output is deterministic.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "mfvi/io/bundled.hpp"
#include "mfvi/io/counts.hpp"
#include "mfvi/io/text.hpp"
#include "mfvi/models/gamma_poisson.hpp"

namespace fs = std::filesystem;
using namespace mfvi;

int main(int argc, char** argv) {
  CLI::App app("Write the bundled synthetic datasets");
  std::string out = "data";
  app.add_option("dir", out, "Output directory")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  const fs::path dir = out;
  try {
    fs::create_directories(dir);
    write_counts(handout_counts(), dir / "handout_counts.txt");

    write_labor_csv(bundled_labor(), dir / "psid_synthetic.csv");
    const auto corpus = bundled_corpus();
    write_dtm(corpus.dtm, dir / "lda_synthetic");
    std::ofstream phi(dir / "lda_synthetic" / "true_phi.csv");
    phi << "topic,word,prob\n";
    for (Eigen::Index k = 0; k < corpus.phi.rows(); ++k)
      for (Eigen::Index w = 0; w < corpus.phi.cols(); ++w)
        phi << k + 1 << ',' << w + 1 << ',' << format_double(corpus.phi(k, w)) << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::cout << "wrote " << dir.string() << '\n';
  return 0;
}
