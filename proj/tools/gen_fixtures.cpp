// Regenerates the committed fixture tables under tests/fixtures/. Run with
// the output directory as the only argument; every table is deterministic,
// so a rerun after an intentional numeric change is the whole update story.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "diffsetlab/core.hpp"
#include "diffsetlab/experiment.hpp"
#include "diffsetlab/io.hpp"

using namespace dsl;

namespace {

void emit(const std::filesystem::path& dir, const std::string& name,
          const std::string& content) {
  std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
  out << content;
  out.close();
  std::cout << name << "  " << io::hash_hex(content) << "  " << content.size()
            << " bytes\n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: gen_fixtures <output-dir>\n";
    return 2;
  }
  std::filesystem::path dir(argv[1]);
  std::filesystem::create_directories(dir);

  emit(dir, "hua_table.csv", experiment::hua_table_csv(500, {2, 3}, 8, 20260816, 4.0));
  emit(dir, "weyl_ratio.csv",
       experiment::weyl_ratio_table_csv({100, 1000, 10000}, 2, 0.1, 6, 20260816));
  emit(dir, "minor_sweep.csv",
       experiment::minor_sweep_csv({2, 3}, {64, 128}, BigRat(1, 8), 64, 20260816));
  emit(dir, "major_sweep.csv", experiment::major_sweep_csv(2, 64, BigRat(1, 8), 6));
  emit(dir, "vint_table.csv", experiment::vint_table_csv(2, 1000, 12, 20260816, 8.0));
  emit(dir, "extremal.csv",
       experiment::extremal_table_csv(40, PolynomialFamily(1, 2, {0, 1}), 1.0));
  return 0;
}
