#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ffsense/error.hpp"
#include "fixtures.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Regenerate test fixtures"};
  app.require_subcommand(1);
  std::string out;
  std::uint64_t seed = 7;
  auto* study = app.add_subcommand("filter-study", "Canned 102-subject manifest and prediction dump");
  study->add_option("--out", out)->required();
  auto* synthetic = app.add_subcommand("synthetic", "8-subject PNG dataset with manifest and config");
  synthetic->add_option("--out", out)->required();
  synthetic->add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);

  try {
    if (study->parsed())
      ffsense::fixtures::write_canned_filter_study(out);
    else
      ffsense::fixtures::write_synthetic_dataset(out, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
