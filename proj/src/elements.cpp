#include "rep3net/chem/elements.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

namespace rep3net::chem {

namespace {

constexpr std::array<int, 0> kNone{};
constexpr std::array kB{3};
constexpr std::array kC{4};
constexpr std::array kN{3, 5};
constexpr std::array kO{2};
constexpr std::array kP{3, 5};
constexpr std::array kS{2, 4, 6};
constexpr std::array kHal{1};

// Standard atomic weights (IUPAC abridged values as tabulated by common
// cheminformatics toolkits). Index = atomic number - 1.
const ElementInfo kTable[] = {
    {"H", 1, 1.008, kNone},
    {"He", 2, 4.003, kNone},
    {"Li", 3, 6.941, kNone},
    {"Be", 4, 9.012, kNone},
    {"B", 5, 10.812, kB},
    {"C", 6, 12.011, kC},
    {"N", 7, 14.007, kN},
    {"O", 8, 15.999, kO},
    {"F", 9, 18.998, kHal},
    {"Ne", 10, 20.18, kNone},
    {"Na", 11, 22.99, kNone},
    {"Mg", 12, 24.305, kNone},
    {"Al", 13, 26.982, kNone},
    {"Si", 14, 28.086, kNone},
    {"P", 15, 30.974, kP},
    {"S", 16, 32.067, kS},
    {"Cl", 17, 35.453, kHal},
    {"Ar", 18, 39.948, kNone},
    {"K", 19, 39.098, kNone},
    {"Ca", 20, 40.078, kNone},
    {"Sc", 21, 44.956, kNone},
    {"Ti", 22, 47.867, kNone},
    {"V", 23, 50.944, kNone},
    {"Cr", 24, 51.996, kNone},
    {"Mn", 25, 54.938, kNone},
    {"Fe", 26, 55.845, kNone},
    {"Co", 27, 58.933, kNone},
    {"Ni", 28, 58.693, kNone},
    {"Cu", 29, 63.546, kNone},
    {"Zn", 30, 65.39, kNone},
    {"Ga", 31, 69.723, kNone},
    {"Ge", 32, 72.61, kNone},
    {"As", 33, 74.922, kNone},
    {"Se", 34, 78.96, kNone},
    {"Br", 35, 79.904, kHal},
    {"Kr", 36, 83.8, kNone},
    {"Rb", 37, 85.468, kNone},
    {"Sr", 38, 87.62, kNone},
    {"Y", 39, 88.906, kNone},
    {"Zr", 40, 91.224, kNone},
    {"Nb", 41, 92.906, kNone},
    {"Mo", 42, 95.94, kNone},
    {"Tc", 43, 98.0, kNone},
    {"Ru", 44, 101.07, kNone},
    {"Rh", 45, 102.906, kNone},
    {"Pd", 46, 106.42, kNone},
    {"Ag", 47, 107.868, kNone},
    {"Cd", 48, 112.412, kNone},
    {"In", 49, 114.818, kNone},
    {"Sn", 50, 118.711, kNone},
    {"Sb", 51, 121.76, kNone},
    {"Te", 52, 127.6, kNone},
    {"I", 53, 126.904, kHal},
    {"Xe", 54, 131.29, kNone},
    {"Cs", 55, 132.905, kNone},
    {"Ba", 56, 137.328, kNone},
    {"La", 57, 138.906, kNone},
    {"Ce", 58, 140.116, kNone},
    {"Pr", 59, 140.908, kNone},
    {"Nd", 60, 144.24, kNone},
    {"Pm", 61, 145.0, kNone},
    {"Sm", 62, 150.36, kNone},
    {"Eu", 63, 151.964, kNone},
    {"Gd", 64, 157.25, kNone},
    {"Tb", 65, 158.925, kNone},
    {"Dy", 66, 162.5, kNone},
    {"Ho", 67, 164.93, kNone},
    {"Er", 68, 167.26, kNone},
    {"Tm", 69, 168.934, kNone},
    {"Yb", 70, 173.04, kNone},
    {"Lu", 71, 174.967, kNone},
    {"Hf", 72, 178.49, kNone},
    {"Ta", 73, 180.948, kNone},
    {"W", 74, 183.84, kNone},
    {"Re", 75, 186.207, kNone},
    {"Os", 76, 190.23, kNone},
    {"Ir", 77, 192.217, kNone},
    {"Pt", 78, 195.078, kNone},
    {"Au", 79, 196.967, kNone},
    {"Hg", 80, 200.59, kNone},
    {"Tl", 81, 204.383, kNone},
    {"Pb", 82, 207.2, kNone},
    {"Bi", 83, 208.98, kNone},
};

}  // namespace

std::optional<ElementInfo> find_element(std::string_view symbol) {
  for (const auto& e : kTable) {
    if (e.symbol == symbol) return e;
  }
  return std::nullopt;
}

const ElementInfo& element(int atomic_number) {
  if (atomic_number < 1 || atomic_number > static_cast<int>(std::size(kTable))) {
    throw std::out_of_range("no element with atomic number " + std::to_string(atomic_number));
  }
  return kTable[atomic_number - 1];
}

double hydrogen_mass() { return kTable[0].average_mass; }

bool is_organic_subset(std::string_view symbol) {
  static constexpr std::string_view kOrganic[] = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"};
  return std::find(std::begin(kOrganic), std::end(kOrganic), symbol) != std::end(kOrganic);
}

bool can_be_aromatic(int atomic_number) {
  switch (atomic_number) {
    case 5: case 6: case 7: case 8: case 15: case 16: case 33: case 34:
      return true;
    default:
      return false;
  }
}

}  // namespace rep3net::chem
